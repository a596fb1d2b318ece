use crate::error::{Error, Result};

/// Minimum normalised autocorrelation for a frame to count as voiced.
pub const VOICING_THRESHOLD: f64 = 0.3;

/// Fundamental frequency by normalised autocorrelation over lags
/// `[fs / fmax, fs / fmin]`, refined by parabolic interpolation.
///
/// Returns `None` for unvoiced frames. Among candidate peaks the shortest
/// lag reaching 90% of the best correlation is taken, which avoids
/// locking onto multiples of the period.
pub fn estimate_f0(frame: &[f64], sample_rate: u32, fmin: f64, fmax: f64) -> Result<Option<f64>> {
    if !(fmin > 0.0 && fmax > fmin) {
        return Err(Error::Parameter(format!(
            "F0 search range [{fmin}, {fmax}] Hz is empty"
        )));
    }
    let fs = sample_rate as f64;
    let lo = (fs / fmax).floor().max(1.0) as usize;
    let hi = (fs / fmin).ceil() as usize;
    if frame.len() < 2 * hi {
        return Err(Error::Parameter(format!(
            "frame of {} samples is shorter than two periods of {fmin} Hz",
            frame.len()
        )));
    }
    let mean = frame.iter().sum::<f64>() / frame.len() as f64;
    let x: Vec<f64> = frame.iter().map(|v| v - mean).collect();
    if x.iter().all(|v| *v == 0.0) {
        return Ok(None);
    }
    let n = x.len();
    let r: Vec<f64> = (lo - 1..=hi + 1)
        .map(|lag| {
            let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
            for i in 0..n - lag {
                xy += x[i] * x[i + lag];
                xx += x[i] * x[i];
                yy += x[i + lag] * x[i + lag];
            }
            if xx > 0.0 && yy > 0.0 {
                xy / (xx * yy).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    // r[j] holds lag lo - 1 + j
    let inner = 1..r.len() - 1;
    let best = inner.clone().map(|j| r[j]).fold(f64::NEG_INFINITY, f64::max);
    if best < VOICING_THRESHOLD {
        return Ok(None);
    }
    let pick = inner
        .clone()
        .find(|&j| r[j] >= 0.9 * best && r[j] >= r[j - 1] && r[j] >= r[j + 1])
        .unwrap_or_else(|| inner.clone().find(|&j| r[j] == best).expect("max exists"));
    let (a, b, c) = (r[pick - 1], r[pick], r[pick + 1]);
    let den = a - 2.0 * b + c;
    let shift = if den.abs() > 1e-12 { (0.5 * (a - c) / den).clamp(-0.5, 0.5) } else { 0.0 };
    let lag = (lo - 1 + pick) as f64 + shift;
    Ok(Some(fs / lag))
}
