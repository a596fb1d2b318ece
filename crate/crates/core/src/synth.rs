//! Synthetic test signals: tones, resonator-filtered pulse trains and
//! noise. Used by the examples, the self-check and the test suites.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dsp::Waveform;
use crate::error::Result;

/// Sine of `freq` Hz.
pub fn tone(freq: f64, sample_rate: u32, len: usize, amp: f64) -> Result<Waveform> {
    let s = (0..len)
        .map(|i| amp * (2.0 * PI * freq * i as f64 / sample_rate as f64).sin())
        .collect();
    Waveform::new(s, sample_rate)
}

/// Gaussian white noise with standard deviation `sd`.
pub fn white_noise(sample_rate: u32, len: usize, sd: f64, seed: u64) -> Result<Waveform> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, sd).expect("finite sd");
    Waveform::new((0..len).map(|_| n.sample(&mut rng)).collect(), sample_rate)
}

/// Runs `x` through a cascade of two-pole resonators, one per
/// `(centre Hz, bandwidth Hz)` pair.
pub fn resonate(x: &[f64], sample_rate: u32, resonances: &[(f64, f64)]) -> Vec<f64> {
    let fs = sample_rate as f64;
    let mut y = x.to_vec();
    for &(f, bw) in resonances {
        let r = (-PI * bw / fs).exp();
        let c1 = 2.0 * r * (2.0 * PI * f / fs).cos();
        let c2 = -r * r;
        let gain = 1.0 - r;
        let (mut y1, mut y2) = (0.0, 0.0);
        for v in y.iter_mut() {
            let out = gain * *v + c1 * y1 + c2 * y2;
            y2 = y1;
            y1 = out;
            *v = out;
        }
    }
    y
}

/// Source of a synthetic utterance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Excitation {
    /// Impulse train at the given F0 (voiced speech).
    Pulses(f64),
    /// White noise (whisper-like).
    Noise(u64),
}

/// Vowel-like signal: excitation shaped by formant resonances and
/// normalised to a peak of `amp`.
pub fn vowel(
    excitation: Excitation,
    resonances: &[(f64, f64)],
    sample_rate: u32,
    len: usize,
    amp: f64,
) -> Result<Waveform> {
    let src: Vec<f64> = match excitation {
        Excitation::Pulses(f0) => {
            let period = sample_rate as f64 / f0;
            let mut next = 0.0;
            (0..len)
                .map(|i| {
                    if i as f64 >= next {
                        next += period;
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        Excitation::Noise(seed) => white_noise(sample_rate, len, 1.0, seed)?.samples,
    };
    let mut y = resonate(&src, sample_rate, resonances);
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        y.iter_mut().for_each(|v| *v *= amp / peak);
    }
    Waveform::new(y, sample_rate)
}

/// Concatenates signals, inserting `gap` zero samples between them.
pub fn concat(parts: &[Waveform], gap: usize) -> Result<Waveform> {
    let rate = parts.first().map_or(16000, |w| w.sample_rate);
    let mut s = Vec::new();
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            s.extend(std::iter::repeat_n(0.0, gap));
        }
        s.extend_from_slice(&p.samples);
    }
    Waveform::new(s, rate)
}
