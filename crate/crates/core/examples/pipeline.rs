//! End to end through the command layer: prepare a synthetic parallel
//! corpus, train a scaled-down W2 model, convert an utterance and compare
//! formant distributions.
//!
//! `cargo run --release --example pipeline [OUT_DIR]`

use std::path::PathBuf;

use whisperconv::cli::{cmd_convert, cmd_eval, cmd_prepare, cmd_train, load_config, Init, MODEL_FILE};
use whisperconv::dsp::write_wav;
use whisperconv::synth::{concat, vowel, Excitation};

fn main() -> whisperconv::Result<()> {
    let dir: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("whisperconv-pipeline"));
    let vowels = [
        [(730.0, 80.0), (1090.0, 90.0), (2440.0, 110.0), (3400.0, 130.0)],
        [(270.0, 60.0), (2290.0, 100.0), (3010.0, 120.0), (3700.0, 140.0)],
        [(300.0, 60.0), (870.0, 80.0), (2240.0, 110.0), (3300.0, 130.0)],
    ];
    let mut manifest = String::new();
    for sub in ["whisper", "natural", "hyp"] {
        std::fs::create_dir_all(dir.join(sub)).ok();
    }
    for u in 0..2 {
        let make = |ex: &dyn Fn(usize) -> Excitation, scale: f64| {
            let parts: Vec<_> = (0..3)
                .map(|i| {
                    let res: Vec<(f64, f64)> = vowels[(i + u) % 3].iter().map(|&(f, b)| (f * scale, b)).collect();
                    vowel(ex(i), &res, 16000, 16000, 0.5).unwrap()
                })
                .collect();
            concat(&parts, 0)
        };
        write_wav(&dir.join(format!("whisper/u{u}.wav")), &make(&|i| Excitation::Noise((u * 3 + i) as u64), 1.05)?)?;
        write_wav(&dir.join(format!("natural/u{u}.wav")), &make(&|i| Excitation::Pulses(115.0 + 8.0 * i as f64), 1.0)?)?;
        write_wav(&dir.join(format!("hyp/u{u}.wav")), &make(&|i| Excitation::Pulses(122.0 + 8.0 * i as f64), 1.02)?)?;
        let labels: String = (0..298).map(|t| format!("v{}\n", (t / 100 + u) % 3)).collect();
        std::fs::write(dir.join(format!("u{u}.lab")), labels).ok();
        manifest += &format!("u{u}\twhisper/u{u}.wav\tnatural/u{u}.wav\tu{u}.lab\n");
    }
    std::fs::write(dir.join("manifest.tsv"), manifest).ok();

    let overrides = [
        "model.n_enc_layers=2", "model.n_dec_layers=2", "model.n_aux_layers=1", "model.tap_layer=1", "model.d_ff=160",
        "train.batch_size=32", "train.warmup_steps=50", "train.max_steps=150", "eval.report.n_samples=20000",
    ]
    .map(String::from);
    let cfg = load_config(Some("W2"), &overrides)?;
    let stats = cmd_prepare(&dir.join("manifest.tsv"), &cfg, &dir.join("data"))?;
    println!("prepare: {} chunks, {} triphones", stats.chunks, stats.vocab_size);
    let run = cmd_train(&dir.join("data"), &cfg, &Init::Scratch, &dir.join("run"))?;
    let (first, last) = (&run.records[0], run.records.last().unwrap());
    println!("train: L1 {:.3} -> {:.3}, L2 {:.3} -> {:.3}", first.l1, last.l1, first.l2, last.l2);
    let conv = cmd_convert(&dir.join("run").join(MODEL_FILE), &dir.join("whisper/u0.wav"), &dir.join("u0.wfea"), &cfg)?;
    println!("convert: {} frames of {}", conv.len(), conv.kind);
    let eval = cmd_eval(&dir.join("natural"), &dir.join("hyp"), None, &cfg, &dir.join("eval"))?;
    print!("{}", eval.report.to_table());
    println!("artifacts in {}", dir.display());
    Ok(())
}
