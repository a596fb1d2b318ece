use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Linear-prediction fit of one frame.
///
/// The prediction-error filter is `A(z) = 1 + sum_k coeffs[k-1] z^-k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lpc {
    pub coeffs: Vec<f64>,
    /// Reflection coefficient of each stage; all lie in `(-1, 1)`.
    pub reflection: Vec<f64>,
    /// Final prediction-error power.
    pub energy: f64,
}

/// Default analysis order for a sample rate: `2 + fs / 1000`.
pub fn default_lpc_order(sample_rate: u32) -> usize {
    2 + sample_rate as usize / 1000
}

/// Burg's method: each stage picks the reflection coefficient minimising
/// the summed forward and backward prediction error power.
pub fn burg_lpc(frame: &[f64], order: usize) -> Result<Lpc> {
    let n = frame.len();
    if n <= order {
        return Err(Error::Parameter(format!(
            "frame of {n} samples too short for order {order}"
        )));
    }
    let power = frame.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::Estimation("zero-energy frame has no LPC fit".into()));
    }
    let mut a = vec![1.0];
    let mut f = frame.to_vec();
    let mut b = frame.to_vec();
    let mut energy = power;
    let mut reflection = Vec::with_capacity(order);
    for m in 1..=order {
        let (mut num, mut den) = (0.0, 0.0);
        for i in m..n {
            num += f[i] * b[i - 1];
            den += f[i] * f[i] + b[i - 1] * b[i - 1];
        }
        let k = if den > 0.0 { -2.0 * num / den } else { 0.0 };
        a.push(0.0);
        let prev = a.clone();
        for i in 1..=m {
            a[i] = prev[i] + k * prev[m - i];
        }
        for i in (m..n).rev() {
            let fi = f[i];
            f[i] = fi + k * b[i - 1];
            b[i] = b[i - 1] + k * fi;
        }
        energy *= 1.0 - k * k;
        reflection.push(k);
    }
    Ok(Lpc {
        coeffs: a[1..].to_vec(),
        reflection,
        energy,
    })
}

/// One vocal-tract resonance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Formant {
    pub freq: f64,
    pub bandwidth: f64,
}

/// Lowest accepted formant frequency (Hz).
pub const FORMANT_MIN_HZ: f64 = 90.0;
/// Accepted formants stay this far below Nyquist (Hz).
pub const FORMANT_NYQUIST_MARGIN_HZ: f64 = 50.0;
/// Widest accepted formant bandwidth (Hz).
pub const FORMANT_MAX_BW_HZ: f64 = 400.0;

/// Roots of `A(z)` via companion-matrix eigenvalues, mapped to frequency
/// and bandwidth, gated, sorted and truncated to the first four.
pub fn lpc_to_formants(coeffs: &[f64], sample_rate: u32) -> Vec<Formant> {
    let p = coeffs.len();
    if p == 0 {
        return Vec::new();
    }
    let fs = sample_rate as f64;
    let mut comp = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        comp[(0, j)] = -coeffs[j];
    }
    for i in 1..p {
        comp[(i, i - 1)] = 1.0;
    }
    let mut out: Vec<Formant> = comp
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im > 1e-9)
        .map(|z| Formant {
            freq: z.im.atan2(z.re) * fs / (2.0 * PI),
            bandwidth: -fs / PI * z.norm().ln(),
        })
        .filter(|f| {
            f.freq >= FORMANT_MIN_HZ
                && f.freq <= fs / 2.0 - FORMANT_NYQUIST_MARGIN_HZ
                && f.bandwidth < FORMANT_MAX_BW_HZ
        })
        .collect();
    out.sort_by(|a, b| a.freq.total_cmp(&b.freq));
    out.dedup_by(|a, b| a.freq == b.freq);
    out.truncate(4);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{resonate, vowel, white_noise, Excitation};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn recovers_ar2_process() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = Normal::new(0.0, 1.0).unwrap();
        let mut x = vec![0.0; 20000];
        for i in 2..x.len() {
            x[i] = 1.3 * x[i - 1] - 0.8 * x[i - 2] + n.sample(&mut rng);
        }
        let l = burg_lpc(&x[1000..], 2).unwrap();
        assert!((l.coeffs[0] + 1.3).abs() < 1e-2, "{:?}", l.coeffs);
        assert!((l.coeffs[1] - 0.8).abs() < 1e-2, "{:?}", l.coeffs);
    }

    #[test]
    fn degenerate_inputs() {
        let l = burg_lpc(&[1.0, -1.0, 2.0], 0).unwrap();
        assert!(l.coeffs.is_empty());
        assert!((l.energy - 2.0).abs() < 1e-15);
        assert!(matches!(burg_lpc(&[0.0; 50], 4), Err(Error::Estimation(_))));
        assert!(burg_lpc(&[1.0; 4], 4).is_err());
        assert_eq!(default_lpc_order(16000), 18);
    }

    #[test]
    fn real_roots_give_no_formants() {
        // (1 - 0.5 z^-1)(1 + 0.3 z^-1)
        assert!(lpc_to_formants(&[-0.2, -0.15], 16000).is_empty());
    }

    fn analyse(res: &[(f64, f64)]) -> Vec<Formant> {
        let w = vowel(Excitation::Pulses(100.0), res, 16000, 4000, 0.5).unwrap();
        let frame: Vec<f64> = w.samples[2000..2640].to_vec();
        let l = burg_lpc(&frame, 18).unwrap();
        lpc_to_formants(&l.coeffs, 16000)
    }

    #[test]
    fn two_resonances() {
        let f = analyse(&[(700.0, 80.0), (1700.0, 90.0)]);
        assert!((f[0].freq - 700.0).abs() < 50.0, "{f:?}");
        assert!((f[1].freq - 1700.0).abs() < 50.0, "{f:?}");
    }

    #[test]
    fn four_resonances() {
        let f = analyse(&[(500.0, 80.0), (1500.0, 90.0), (2500.0, 100.0), (3500.0, 120.0)]);
        assert_eq!(f.len(), 4, "{f:?}");
        for (got, want) in f.iter().zip([500.0, 1500.0, 2500.0, 3500.0]) {
            assert!((got.freq - want).abs() < 50.0, "{f:?}");
        }
        assert!(f.windows(2).all(|p| p[0].freq < p[1].freq));
    }

    #[test]
    fn noise_excited_resonance() {
        let n = white_noise(16000, 8000, 1.0, 9).unwrap();
        let y = resonate(&n.samples, 16000, &[(1200.0, 60.0)]);
        let l = burg_lpc(&y[1000..5000], 18).unwrap();
        let f = lpc_to_formants(&l.coeffs, 16000);
        assert!(f.iter().any(|x| (x.freq - 1200.0).abs() < 50.0), "{f:?}");
    }

    proptest! {
        #[test]
        fn reflections_are_stable(seed in 0u64..1000, len in 40usize..400) {
            let w = white_noise(16000, len, 1.0, seed).unwrap();
            let l = burg_lpc(&w.samples, 18.min(len - 1)).unwrap();
            prop_assert!(l.reflection.iter().all(|k| k.abs() < 1.0));
            let f = lpc_to_formants(&l.coeffs, 16000);
            prop_assert!(f.windows(2).all(|p| p[0].freq < p[1].freq));
            prop_assert!(f.iter().all(|x| x.freq < 8000.0 && x.freq > 0.0));
        }
    }
}
