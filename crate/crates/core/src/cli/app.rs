use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use super::commands::{
    cmd_convert, cmd_eval, cmd_metrics, cmd_prepare, cmd_pretrain_aux, cmd_train, Init,
};
use super::config::{load_config, ExperimentConfig};
use super::selfcheck::{cmd_selfcheck, Fault};
use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "whisperconv", version, about = "Whispered/natural speech feature conversion")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Preset name (W1, W2, W3, V1, V2, V3) or TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<String>,
    /// Override one configuration value, e.g. `train.batch_size=64`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Seed for initialisation, shuffling, dropout and evaluation sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run gradient sub-batches sequentially on one thread.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub deterministic: Option<bool>,
    /// Output directory (or file, for `convert`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align, featurise and chunk a parallel corpus into training shards.
    Prepare {
        /// TSV manifest: id, source WAV, target WAV, optional labels, optional transcript.
        manifest: PathBuf,
    },
    /// Train a conversion model on prepared shards.
    Train {
        /// Directory written by `prepare`.
        data: PathBuf,
        /// Continue from a checkpoint of the same configuration.
        #[arg(long, conflicts_with = "init")]
        resume: Option<PathBuf>,
        /// Start from the weights of a checkpoint (e.g. pretraining output).
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Pretrain the lower encoder and auxiliary decoder on triphone labels.
    PretrainAux {
        /// Directory written by `prepare` (must carry triphone labels).
        data: PathBuf,
        /// Start from the weights of an existing checkpoint.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Convert a WAV or feature file with a trained checkpoint.
    Convert {
        /// Checkpoint written by `train`.
        checkpoint: PathBuf,
        /// 16-bit PCM WAV or feature file to convert.
        input: PathBuf,
    },
    /// Compare formant distributions of two WAV corpora.
    Eval {
        /// Directory of reference (natural speech) WAV files.
        reference: PathBuf,
        /// Directory of WAV files to compare against the reference.
        hypothesis: PathBuf,
        /// Reference transcripts (`id<TAB>text` per line).
        #[arg(long, requires = "hyp_text")]
        ref_text: Option<PathBuf>,
        /// Recognised transcripts of the hypothesis audio.
        #[arg(long, requires = "ref_text")]
        hyp_text: Option<PathBuf>,
    },
    /// Word error rate and BLEU of hypothesis transcripts.
    Metrics {
        /// Reference transcripts (`id<TAB>text` per line).
        reference: PathBuf,
        /// Hypothesis transcripts in the same format.
        hypothesis: PathBuf,
    },
    /// Run the built-in numerical self-tests.
    Selfcheck {
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
}

fn effective_config(g: &GlobalArgs) -> Result<ExperimentConfig> {
    let mut cfg = load_config(g.config.as_deref(), &g.set)?;
    if let Some(seed) = g.seed {
        cfg.set_seed(seed);
    }
    if let Some(d) = g.deterministic {
        cfg.train.deterministic = d;
        cfg.pretrain.deterministic = d;
    }
    Ok(cfg)
}

fn out_dir(g: &GlobalArgs, default: &str) -> PathBuf {
    g.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn init_of(resume: Option<PathBuf>, init: Option<PathBuf>) -> Init {
    match (resume, init) {
        (Some(p), _) => Init::Resume(p),
        (None, Some(p)) => Init::Weights(p),
        (None, None) => Init::Scratch,
    }
}

fn summarize_training(o: &crate::training::TrainOutcome, out: &Path) {
    match o.records.last() {
        Some(r) => println!(
            "step {} epoch {}  l1 {:.6}  l2 {:.6}  total {:.6}  -> {}",
            r.step,
            r.epoch,
            r.l1,
            r.l2,
            r.total,
            out.display()
        ),
        None => println!("no steps run; checkpoint already at step {}", o.checkpoint.meta.step),
    }
}

/// Executes a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let g = &cli.global;
    // Every command validates the configuration, even those that ignore it,
    // so a typo in --config or --set never passes silently.
    let cfg = effective_config(g)?;
    match cli.command {
        Command::Prepare { manifest } => {
            let out = out_dir(g, "data");
            let stats = cmd_prepare(&manifest, &cfg, &out)?;
            println!(
                "kept {}/{} pairs, {} chunks of {} frames, vocabulary {} -> {}",
                stats.pairs_kept,
                stats.pairs_total,
                stats.chunks,
                stats.k,
                stats.vocab_size,
                out.display()
            );
        }
        Command::Train { data, resume, init } => {
            let out = out_dir(g, "run");
            let o = cmd_train(&data, &cfg, &init_of(resume, init), &out)?;
            summarize_training(&o, &out);
        }
        Command::PretrainAux { data, init } => {
            let out = out_dir(g, "pretrain");
            let o = cmd_pretrain_aux(&data, &cfg, &init_of(None, init), &out)?;
            summarize_training(&o, &out);
        }
        Command::Convert { checkpoint, input } => {
            let out = g
                .out
                .clone()
                .ok_or_else(|| Error::Config("convert needs --out <feature file>".into()))?;
            let seq = cmd_convert(&checkpoint, &input, &out, &cfg)?;
            println!("{} frames of {} -> {}", seq.len(), seq.kind, out.display());
        }
        Command::Eval { reference, hypothesis, ref_text, hyp_text } => {
            let out = out_dir(g, "eval");
            let texts = ref_text.as_deref().zip(hyp_text.as_deref());
            let o = cmd_eval(&reference, &hypothesis, texts, &cfg, &out)?;
            print!("{}", o.report.to_table());
            if let Some(t) = o.text {
                println!("WER {:.2}%  BLEU {:.2}  ({} utterances)", 100.0 * t.wer, t.bleu, t.utterances);
            }
        }
        Command::Metrics { reference, hypothesis } => {
            let m = cmd_metrics(&reference, &hypothesis)?;
            let json = serde_json::to_string_pretty(&m).expect("metrics serialise");
            if let Some(dir) = &g.out {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                std::fs::write(dir.join("metrics.json"), &json).map_err(|e| Error::io(dir, e))?;
            }
            println!("{json}");
        }
        Command::Selfcheck { inject_fault } => {
            let fault = inject_fault.map(|f| f.parse::<Fault>()).transpose()?;
            let results = cmd_selfcheck(fault);
            for r in &results {
                println!("{r}");
            }
            if results.iter().any(|r| !r.passed) {
                eprintln!("selfcheck failed");
                return Ok(3);
            }
        }
    }
    Ok(0)
}

/// Parses `args` (including the program name) and runs the command,
/// returning the exit code: 0 success, 1 usage, 2 data, 3 numerical.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
