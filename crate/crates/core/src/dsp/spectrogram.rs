use std::path::Path;

use super::features::{FeatureKind, FeatureSequence};
use super::stft::{stft, Framing};
use super::wav::Waveform;
use crate::error::Result;
use crate::numerics::Tensor;

/// Lowest level in the exported grid, relative to the loudest cell.
pub const SPEC_FLOOR_DB: f64 = -80.0;

/// `T x (n_fft / 2 + 1)` magnitude grid in dB relative to its maximum,
/// clipped to `[-80, 0]`.
pub fn spectrogram_db(w: &Waveform, framing: Framing) -> Result<FeatureSequence> {
    let spec = stft(w, framing)?;
    let bins = framing.bins();
    let mags: Vec<f64> = spec.iter().flatten().map(|c| c.norm()).collect();
    let peak = mags.iter().copied().fold(0.0, f64::max);
    let data = mags
        .iter()
        .map(|&m| {
            if peak == 0.0 || m == 0.0 {
                SPEC_FLOOR_DB
            } else {
                (20.0 * (m / peak).log10()).clamp(SPEC_FLOOR_DB, 0.0)
            }
        })
        .collect();
    let mut seq = FeatureSequence::new(FeatureKind::SpecDb, Tensor::new(&[spec.len(), bins], data)?)?;
    seq.sample_rate = w.sample_rate;
    seq.frame_ms = framing.frame_len as f64 * 1000.0 / w.sample_rate as f64;
    seq.hop_ms = framing.hop as f64 * 1000.0 / w.sample_rate as f64;
    Ok(seq)
}

/// Writes the dB grid of `w` (speech framing) as a `specdb` feature file.
pub fn spectrogram_export(w: &Waveform, path: &Path) -> Result<FeatureSequence> {
    let seq = spectrogram_db(w, Framing::speech(w.sample_rate))?;
    seq.save(path)?;
    Ok(seq)
}
