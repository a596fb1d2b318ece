//! Compares formant distributions of two synthetic "corpora": formant and F0
//! tracks, per-feature GMMs and Monte Carlo KL divergences.
//!
//! `cargo run --release --example formant_report [OUT_DIR]`

use std::path::PathBuf;

use whisperconv::evaluation::{analyze_waveform, formant_report, AnalysisConfig, FormantTrack, ReportConfig};
use whisperconv::synth::{vowel, Excitation};

fn corpus(pitch: f64, shift: f64) -> whisperconv::Result<Vec<FormantTrack>> {
    let vowels = [[(730.0, 80.0), (1090.0, 90.0), (2440.0, 110.0), (3400.0, 130.0)], [(300.0, 60.0), (870.0, 80.0), (2240.0, 110.0), (3300.0, 130.0)]];
    vowels
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let res: Vec<(f64, f64)> = v.iter().map(|&(f, b)| (f + shift, b)).collect();
            let w = vowel(Excitation::Pulses(pitch + 15.0 * i as f64), &res, 16000, 16000, 0.5)?;
            analyze_waveform(&w, &AnalysisConfig::default())
        })
        .collect()
}

fn main() -> whisperconv::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("whisperconv-report"));
    let reference = corpus(120.0, 0.0)?;
    let cfg = ReportConfig { n_samples: 50_000, ..Default::default() };
    for shift in [0.0, 50.0, 100.0] {
        let hyp = corpus(120.0, shift)?;
        let report = formant_report(&reference, &hyp, &cfg)?;
        println!("formants shifted by {shift} Hz:");
        print!("{}", report.to_table());
        if shift == 100.0 {
            report.write(&out)?;
            println!("wrote kl_report.tsv, kl_table.txt, density.tsv and kl_report.json to {}", out.display());
        }
    }
    Ok(())
}
