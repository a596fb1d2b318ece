//! Command layer: configuration presets, the pipeline commands and the
//! argument parser behind the `whisperconv` binary.

mod app;
mod commands;
mod config;
mod record;
mod selfcheck;

pub use app::{main_with_args, Cli, Command};
pub use commands::{
    cmd_convert, cmd_eval, cmd_metrics, cmd_prepare, cmd_pretrain_aux, cmd_train, convert_features, corpus_files,
    read_transcripts, EvalOutcome, Init, TextMetrics, MODEL_FILE, RUN_RECORD,
};
pub use config::{
    load_config, preset, DataConfig, EvalConfig, ExperimentConfig, ModelSection, DEFAULT_PRESET, PRESETS,
};
pub use record::{checksum_inputs, InputChecksum, RunRecord};
pub use selfcheck::{cmd_selfcheck, full_model_gradient_error, CheckResult, Fault};
