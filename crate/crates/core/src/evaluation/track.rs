use serde::{Deserialize, Serialize};

use super::lpc::{burg_lpc, default_lpc_order, lpc_to_formants};
use super::pitch::estimate_f0;
use crate::dsp::Waveform;
use crate::error::{Error, Result};

/// Names of the analysed quantities, in report order.
pub const FEATURE_NAMES: [&str; 5] = ["F0", "F1", "F2", "F3", "F4"];

/// Per-frame measurements: index 0 is F0, 1..=4 are F1..F4 (Hz).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameMeasure {
    pub values: [Option<f64>; 5],
}

impl FrameMeasure {
    pub fn voiced(&self) -> bool {
        self.values[0].is_some()
    }
}

/// Frame-by-frame F0 and formant track of one utterance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FormantTrack {
    pub frames: Vec<FrameMeasure>,
}

impl FormantTrack {
    /// Values of feature `idx` (0 = F0), optionally restricted to voiced frames.
    pub fn values(&self, idx: usize, voiced_only: bool) -> Vec<f64> {
        self.frames
            .iter()
            .filter(|f| !voiced_only || f.voiced())
            .filter_map(|f| f.values[idx])
            .collect()
    }
}

/// Framing and estimator settings for waveform analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub frame_ms: f64,
    pub hop_ms: f64,
    /// LPC order; `None` uses `2 + fs / 1000`.
    pub lpc_order: Option<usize>,
    pub pre_emphasis: f64,
    pub f0_min: f64,
    pub f0_max: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            frame_ms: 40.0,
            hop_ms: 10.0,
            lpc_order: None,
            pre_emphasis: 0.97,
            f0_min: 60.0,
            f0_max: 600.0,
        }
    }
}

/// Measures F0 and F1..F4 on every frame of `w`.
///
/// F0 comes from the raw frame; formants from a pre-emphasised,
/// Hamming-windowed copy. Silent frames yield no values.
pub fn analyze_waveform(w: &Waveform, cfg: &AnalysisConfig) -> Result<FormantTrack> {
    let fs = w.sample_rate as f64;
    let frame = (cfg.frame_ms * fs / 1000.0).round() as usize;
    let hop = (cfg.hop_ms * fs / 1000.0).round() as usize;
    if frame == 0 || hop == 0 {
        return Err(Error::Parameter("analysis frame and hop must be positive".into()));
    }
    let order = cfg.lpc_order.unwrap_or_else(|| default_lpc_order(w.sample_rate));
    let window: Vec<f64> = (0..frame)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (frame - 1).max(1) as f64).cos())
        .collect();
    let mut frames = Vec::new();
    let mut start = 0;
    while start + frame <= w.len() {
        let seg = &w.samples[start..start + frame];
        let mut m = FrameMeasure::default();
        if seg.iter().any(|v| *v != 0.0) {
            m.values[0] = estimate_f0(seg, w.sample_rate, cfg.f0_min, cfg.f0_max)?;
            let shaped: Vec<f64> = (0..frame)
                .map(|i| {
                    let prev = if i > 0 { seg[i - 1] } else { 0.0 };
                    (seg[i] - cfg.pre_emphasis * prev) * window[i]
                })
                .collect();
            match burg_lpc(&shaped, order) {
                Ok(lpc) => {
                    for (slot, f) in m.values[1..].iter_mut().zip(lpc_to_formants(&lpc.coeffs, w.sample_rate)) {
                        *slot = Some(f.freq);
                    }
                }
                Err(Error::Estimation(_)) => {}
                Err(e) => return Err(e),
            }
        }
        frames.push(m);
        start += hop;
    }
    Ok(FormantTrack { frames })
}
