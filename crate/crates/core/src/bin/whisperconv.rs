fn main() {
    std::process::exit(whisperconv::cli::main_with_args(std::env::args_os()));
}
