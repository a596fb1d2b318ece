use std::f64::consts::PI;

use super::wav::Waveform;
use crate::error::{Error, Result};

/// Zero crossings of the interpolation kernel on each side.
const ZEROS: f64 = 16.0;
/// Pass-band edge as a fraction of the lower Nyquist frequency.
const ROLLOFF: f64 = 0.95;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Band-limited rate conversion with a Hann-windowed sinc kernel.
///
/// The ratio is reduced to `up / down`; each of the `up` output phases has
/// its own precomputed kernel. Output length is `round(len * up / down)`.
pub fn resample(w: &Waveform, target_rate: u32) -> Result<Waveform> {
    if target_rate == 0 {
        return Err(Error::Parameter("target sample rate must be positive".into()));
    }
    if target_rate == w.sample_rate {
        return Ok(w.clone());
    }
    let g = gcd(w.sample_rate as u64, target_rate as u64);
    let up = target_rate as u64 / g;
    let down = w.sample_rate as u64 / g;
    let cutoff = ROLLOFF * (up as f64 / down as f64).min(1.0);
    let half = (ZEROS / cutoff).ceil() as i64;

    let phases: Vec<Vec<f64>> = (0..up)
        .map(|ph| {
            let frac = ph as f64 / up as f64;
            (-half + 1..=half)
                .map(|j| {
                    let t = j as f64 - frac;
                    let u = t / half as f64;
                    if u.abs() >= 1.0 {
                        0.0
                    } else {
                        cutoff * sinc(cutoff * t) * 0.5 * (1.0 + (PI * u).cos())
                    }
                })
                .collect()
        })
        .collect();

    let n_in = w.samples.len() as i64;
    let n_out = ((w.samples.len() as u64 * up) as f64 / down as f64).round() as usize;
    let mut out = Vec::with_capacity(n_out);
    for n in 0..n_out as u64 {
        let pos = n * down;
        let base = (pos / up) as i64;
        let kernel = &phases[(pos % up) as usize];
        let mut acc = 0.0;
        for (tap, j) in kernel.iter().zip(-half + 1..=half) {
            // kernel index j pairs with input sample base + j; t = j - frac
            let idx = base + j;
            if (0..n_in).contains(&idx) {
                acc += tap * w.samples[idx as usize];
            }
        }
        out.push(acc);
    }
    Waveform::new(out, target_rate)
}
