use std::f64::consts::PI;

use super::features::{FeatureKind, FeatureSequence};
use super::stft::{stft, Framing};
use super::wav::Waveform;
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Floor applied to mel energies before the logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters equally spaced on the HTK mel scale between `fmin`
/// and `fmax`. Each triangle peaks at 1 on its centre frequency. Returns
/// `n_mels` rows of `n_fft / 2 + 1` weights.
pub fn mel_filterbank(n_mels: usize, n_fft: usize, sample_rate: u32, fmin: f64, fmax: f64) -> Result<Vec<Vec<f64>>> {
    let nyq = sample_rate as f64 / 2.0;
    if n_mels == 0 || n_fft < 2 || !(0.0..fmax).contains(&fmin) || fmax > nyq {
        return Err(Error::Parameter(format!(
            "invalid filterbank: {n_mels} filters, n_fft {n_fft}, band [{fmin}, {fmax}] Hz at {sample_rate} Hz"
        )));
    }
    let (m0, m1) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(m0 + (m1 - m0) * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bins = n_fft / 2 + 1;
    let bin_hz = sample_rate as f64 / n_fft as f64;
    Ok((0..n_mels)
        .map(|m| {
            let (lo, c, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    ((f - lo) / (c - lo)).min((hi - f) / (hi - c)).max(0.0)
                })
                .collect()
        })
        .collect())
}

/// Orthonormal DCT-II matrix, `n_out` rows of length `n`.
pub fn dct_matrix(n_out: usize, n: usize) -> Vec<Vec<f64>> {
    (0..n_out)
        .map(|k| {
            let s = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            (0..n)
                .map(|i| s * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos())
                .collect()
        })
        .collect()
}

/// Mel-frequency cepstral coefficients of a 16 kHz waveform: power spectrum
/// of 25 ms / 10 ms Hann frames, `n_mels` HTK filters over 0 Hz to Nyquist,
/// floored natural log, orthonormal DCT-II keeping `n_coeffs` coefficients.
pub fn mfcc(w: &Waveform, n_mels: usize, n_coeffs: usize) -> Result<FeatureSequence> {
    if w.sample_rate != 16000 {
        return Err(Error::Parameter(format!(
            "MFCC extraction expects 16 kHz audio, got {} Hz",
            w.sample_rate
        )));
    }
    if n_coeffs == 0 || n_coeffs > n_mels {
        return Err(Error::Parameter(format!(
            "cannot keep {n_coeffs} coefficients from {n_mels} filters"
        )));
    }
    let framing = Framing::speech(w.sample_rate);
    let fb = mel_filterbank(n_mels, framing.n_fft, w.sample_rate, 0.0, w.sample_rate as f64 / 2.0)?;
    let dct = dct_matrix(n_coeffs, n_mels);
    let spec = stft(w, framing)?;
    let mut data = Vec::with_capacity(spec.len() * n_coeffs);
    let mut logmel = vec![0.0; n_mels];
    for row in &spec {
        let power: Vec<f64> = row.iter().map(|c| c.norm_sqr()).collect();
        for (l, filt) in logmel.iter_mut().zip(&fb) {
            let e: f64 = filt.iter().zip(&power).map(|(a, b)| a * b).sum();
            *l = e.max(LOG_FLOOR).ln();
        }
        data.extend(dct.iter().map(|b| b.iter().zip(&logmel).map(|(a, c)| a * c).sum::<f64>()));
    }
    let kind = if n_coeffs == 80 { FeatureKind::Mfcc80 } else { FeatureKind::Custom(n_coeffs) };
    FeatureSequence::new(kind, Tensor::new(&[spec.len(), n_coeffs], data)?)
}
