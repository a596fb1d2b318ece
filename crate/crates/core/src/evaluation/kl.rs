use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gmm::GmmModel;
use crate::error::{Error, Result};

/// Monte-Carlo estimate of `KL(f || g)` in nats.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Averages `log f(x) - log g(x)` over `n_samples` draws from `f`.
pub fn gmm_kl_mc(f: &GmmModel, g: &GmmModel, n_samples: usize, seed: u64) -> Result<KlEstimate> {
    if n_samples < 1000 {
        return Err(Error::Parameter(format!(
            "{n_samples} Monte-Carlo samples requested, at least 1000 required"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_samples {
        let x = f.sample(&mut rng);
        let r = f.log_pdf(x) - g.log_pdf(x);
        if !r.is_finite() {
            return Err(Error::Estimation(format!("non-finite log density ratio at x = {x}")));
        }
        sum += r;
        sum_sq += r * r;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(KlEstimate {
        value: mean,
        stderr: (var / n).sqrt(),
        n_samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(m: f64, v: f64) -> GmmModel {
        GmmModel { weights: vec![1.0], means: vec![m], variances: vec![v] }
    }

    #[test]
    fn identical_models_give_zero() {
        let f = GmmModel { weights: vec![0.4, 0.6], means: vec![500.0, 1500.0], variances: vec![900.0, 2500.0] };
        let k = gmm_kl_mc(&f, &f, 5000, 1).unwrap();
        assert_eq!(k.value, 0.0);
    }

    #[test]
    fn closed_form_gaussians() {
        let k = gmm_kl_mc(&gauss(0.0, 1.0), &gauss(1.0, 1.0), 200_000, 7).unwrap();
        assert!((k.value - 0.5).abs() < 3.0 * k.stderr, "{k:?}");
        let again = gmm_kl_mc(&gauss(0.0, 1.0), &gauss(1.0, 1.0), 200_000, 7).unwrap();
        assert_eq!(k, again);
        assert!(gmm_kl_mc(&gauss(0.0, 1.0), &gauss(1.0, 1.0), 10, 7).is_err());
    }
}
