//! Exports a dB spectrogram of a synthetic whispered/voiced pair as feature
//! files for plotting.
//!
//! `cargo run --release --example spectrogram [OUT_DIR]`

use std::path::PathBuf;

use whisperconv::dsp::spectrogram_export;
use whisperconv::synth::{vowel, Excitation};

fn main() -> whisperconv::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("whisperconv-spec"));
    std::fs::create_dir_all(&out).ok();
    let res = [(700.0, 80.0), (1200.0, 90.0), (2600.0, 120.0)];
    for (name, ex) in [("whisper", Excitation::Noise(5)), ("voiced", Excitation::Pulses(140.0))] {
        let w = vowel(ex, &res, 16000, 16000, 0.5)?;
        let path = out.join(format!("{name}.wfea"));
        let spec = spectrogram_export(&w, &path)?;
        let frame = spec.frame(spec.len() / 2);
        let hz_per_bin = 16000.0 / 512.0;
        println!(
            "{name}: {} frames x {} bins, mid-frame peak at {:.0} Hz -> {}",
            spec.len(),
            spec.dim(),
            (0..frame.len()).max_by(|&a, &b| frame[a].total_cmp(&frame[b])).unwrap_or(0) as f64 * hz_per_bin,
            path.display()
        );
    }
    Ok(())
}
