//! Synthesises a short vowel sequence, extracts 80 MFCCs per 10 ms frame and
//! writes them as a feature file.
//!
//! `cargo run --release --example mfcc_features [OUT_DIR]`

use std::path::PathBuf;

use whisperconv::dsp::{mfcc, write_wav, FeatureSequence};
use whisperconv::synth::{concat, vowel, Excitation};

fn main() -> whisperconv::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("whisperconv-mfcc"));
    std::fs::create_dir_all(&out).ok();
    let a = vowel(Excitation::Pulses(120.0), &[(730.0, 80.0), (1090.0, 90.0), (2440.0, 110.0)], 16000, 8000, 0.5)?;
    let i = vowel(Excitation::Pulses(120.0), &[(270.0, 60.0), (2290.0, 100.0), (3010.0, 120.0)], 16000, 8000, 0.5)?;
    let w = concat(&[a, i], 800)?;
    write_wav(&out.join("ai.wav"), &w)?;

    let feats = mfcc(&w, 80, 80)?;
    println!("{} samples -> {} frames x {} coefficients ({})", w.len(), feats.len(), feats.dim(), feats.kind);
    for t in [10, 60] {
        let c: Vec<String> = feats.frame(t)[..6].iter().map(|v| format!("{v:7.2}")).collect();
        println!("frame {t:>3}: {} ...", c.join(" "));
    }
    let path = out.join("ai.wfea");
    feats.save(&path)?;
    let back = FeatureSequence::load(&path)?;
    println!("wrote {} ({} frames round-tripped)", path.display(), back.len());
    Ok(())
}
