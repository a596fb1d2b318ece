use super::wav::Waveform;
use crate::error::{Error, Result};

/// Default trimming threshold relative to the loudest 10 ms frame.
pub const DEFAULT_TRIM_DB: f64 = -40.0;

/// Cuts leading and trailing 10 ms frames whose RMS lies more than
/// `|threshold_db|` dB below the loudest frame. Interior samples are kept.
pub fn trim_silence(w: &Waveform, threshold_db: f64) -> Result<Waveform> {
    if !(threshold_db < 0.0) {
        return Err(Error::Parameter(format!(
            "trim threshold {threshold_db} dB must be negative"
        )));
    }
    let hop = (w.sample_rate as usize / 100).max(1);
    let rms: Vec<f64> = w
        .samples
        .chunks(hop)
        .map(|c| (c.iter().map(|s| s * s).sum::<f64>() / c.len() as f64).sqrt())
        .collect();
    let peak = rms.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::Data("signal is silent; nothing left after trimming".into()));
    }
    let floor = peak * 10f64.powf(threshold_db / 20.0);
    let first = rms.iter().position(|&r| r >= floor).expect("peak frame qualifies");
    let last = rms.iter().rposition(|&r| r >= floor).expect("peak frame qualifies");
    let end = ((last + 1) * hop).min(w.samples.len());
    Waveform::new(w.samples[first * hop..end].to_vec(), w.sample_rate)
}
