//! Prints the warm-up learning-rate schedule for the two feature widths.
//!
//! `cargo run --example lr_schedule`

use whisperconv::training::lr_schedule;

fn main() -> whisperconv::Result<()> {
    let warmup = 4000;
    println!("{:>7} {:>12} {:>12}", "step", "d=80", "d=24");
    for step in [1, 100, 1000, 2000, 4000, 8000, 20000, 40000, 100000] {
        println!("{step:>7} {:>12.3e} {:>12.3e}", lr_schedule(step, 80, warmup)?, lr_schedule(step, 24, warmup)?);
    }
    Ok(())
}
