use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest component variance (Hz²).
pub const VARIANCE_FLOOR: f64 = 1.0;
const MAX_ITERS: usize = 200;
const TOL: f64 = 1e-6;

/// Univariate Gaussian mixture, components sorted by mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl GmmModel {
    pub fn kg(&self) -> usize {
        self.weights.len()
    }

    fn component_logs(&self, x: f64, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let v = self.variances[j];
            let d = x - self.means[j];
            *o = self.weights[j].ln() - 0.5 * ((2.0 * PI * v).ln() + d * d / v);
        }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let mut buf = vec![0.0; self.kg()];
        self.component_logs(x, &mut buf);
        log_sum_exp(&buf)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut j = self.kg() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                j = i;
                break;
            }
        }
        let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
        self.means[j] + self.variances[j].sqrt() * z
    }

    fn sorted(mut self) -> Self {
        let mut idx: Vec<usize> = (0..self.kg()).collect();
        idx.sort_by(|&a, &b| self.means[a].total_cmp(&self.means[b]));
        let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        self.weights = pick(&self.weights);
        self.means = pick(&self.means);
        self.variances = pick(&self.variances);
        self
    }
}

/// Result of fitting one component count.
#[derive(Clone, Debug, PartialEq)]
pub struct EmFit {
    pub model: GmmModel,
    /// Mean log-likelihood per sample after initialisation and after each
    /// EM iteration.
    pub log_likelihood: Vec<f64>,
    pub bic: f64,
}

/// Result of model selection over several component counts.
#[derive(Clone, Debug, PartialEq)]
pub struct GmmSelection {
    pub best: EmFit,
    /// `(kg, bic)` for every candidate tried.
    pub bic_table: Vec<(usize, f64)>,
}

fn kmeans_pp(values: &[f64], kg: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut centres = vec![values[rng.gen_range(0..values.len())]];
    while centres.len() < kg {
        let d2: Vec<f64> = values
            .iter()
            .map(|v| centres.iter().map(|c| (v - c) * (v - c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut pick = values.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if u < *d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            values[pick]
        } else {
            values[rng.gen_range(0..values.len())]
        };
        centres.push(next);
    }
    centres
}

fn mean_ll(model: &GmmModel, values: &[f64], buf: &mut [f64]) -> f64 {
    values
        .iter()
        .map(|&x| {
            model.component_logs(x, buf);
            log_sum_exp(buf)
        })
        .sum::<f64>()
        / values.len() as f64
}

/// EM for a fixed component count from a k-means++ start.
pub fn fit_gmm_fixed(values: &[f64], kg: usize, seed: u64) -> Result<EmFit> {
    if kg == 0 {
        return Err(Error::Parameter("component count must be at least 1".into()));
    }
    if values.len() < 10 * kg {
        return Err(Error::Estimation(format!(
            "{} values are too few for {kg} components (need {})",
            values.len(),
            10 * kg
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Estimation(format!("non-finite value {v} in GMM input")));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).max(VARIANCE_FLOOR);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (kg as u64).wrapping_mul(0x9E37_79B9));
    let mut model = GmmModel {
        weights: vec![1.0 / kg as f64; kg],
        means: kmeans_pp(values, kg, &mut rng),
        variances: vec![var; kg],
    };
    let mut buf = vec![0.0; kg];
    let mut resp = vec![0.0; values.len() * kg];
    let mut history = vec![mean_ll(&model, values, &mut buf)];
    for _ in 0..MAX_ITERS {
        // E step
        for (i, &x) in values.iter().enumerate() {
            model.component_logs(x, &mut buf);
            let z = log_sum_exp(&buf);
            for j in 0..kg {
                resp[i * kg + j] = (buf[j] - z).exp();
            }
        }
        // M step
        for j in 0..kg {
            let nk: f64 = (0..values.len()).map(|i| resp[i * kg + j]).sum();
            if nk <= 0.0 {
                model.weights[j] = 0.0;
                continue;
            }
            let mu = values.iter().enumerate().map(|(i, x)| resp[i * kg + j] * x).sum::<f64>() / nk;
            let v = values
                .iter()
                .enumerate()
                .map(|(i, x)| resp[i * kg + j] * (x - mu) * (x - mu))
                .sum::<f64>()
                / nk;
            model.weights[j] = nk / n;
            model.means[j] = mu;
            model.variances[j] = v.max(VARIANCE_FLOOR);
        }
        let ll = mean_ll(&model, values, &mut buf);
        let prev = *history.last().expect("nonempty");
        history.push(ll);
        if (ll - prev).abs() < TOL {
            break;
        }
    }
    let last = *history.last().expect("nonempty");
    if !last.is_finite() {
        return Err(Error::Estimation(format!("EM diverged for {kg} components")));
    }
    let params = (3 * kg - 1) as f64;
    let bic = -2.0 * last * n + params * n.ln();
    Ok(EmFit {
        model: model.sorted(),
        log_likelihood: history,
        bic,
    })
}

/// Fits every candidate component count and keeps the lowest BIC.
pub fn fit_gmm(values: &[f64], candidates: impl IntoIterator<Item = usize>, seed: u64) -> Result<GmmSelection> {
    let cands: Vec<usize> = candidates.into_iter().collect();
    let max = cands.iter().copied().max().ok_or_else(|| Error::Parameter("no component counts to try".into()))?;
    if values.len() < 10 * max {
        return Err(Error::Estimation(format!(
            "{} values are too few for up to {max} components (need {})",
            values.len(),
            10 * max
        )));
    }
    let mut best: Option<EmFit> = None;
    let mut table = Vec::new();
    for kg in cands {
        let fit = fit_gmm_fixed(values, kg, seed)?;
        table.push((kg, fit.bic));
        if best.as_ref().is_none_or(|b| fit.bic < b.bic) {
            best = Some(fit);
        }
    }
    Ok(GmmSelection {
        best: best.expect("at least one candidate"),
        bic_table: table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn draw(specs: &[(f64, f64, usize)], seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for &(m, s, n) in specs {
            let d = Normal::new(m, s).unwrap();
            out.extend((0..n).map(|_| d.sample(&mut rng)));
        }
        out
    }

    fn monotone(h: &[f64]) -> bool {
        h.windows(2).all(|p| p[1] >= p[0] - 1e-12)
    }

    #[test]
    fn single_gaussian() {
        let v = draw(&[(500.0, 50.0, 10000)], 1);
        let sel = fit_gmm(&v, 1..=4, 0).unwrap();
        let m = &sel.best.model;
        assert_eq!(m.kg(), 1, "{:?}", sel.bic_table);
        assert!((m.means[0] - 500.0).abs() < 5.0);
        assert!((m.variances[0].sqrt() - 50.0).abs() < 5.0);
    }

    #[test]
    fn two_components() {
        let v = draw(&[(400.0, 60.0, 5000), (1200.0, 80.0, 5000)], 2);
        let sel = fit_gmm(&v, 1..=8, 0).unwrap();
        let m = &sel.best.model;
        assert_eq!(m.kg(), 2, "{:?}", sel.bic_table);
        assert!((m.means[0] - 400.0).abs() < 10.0);
        assert!((m.means[1] - 1200.0).abs() < 10.0);
        assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for kg in 1..=8 {
            assert!(monotone(&fit_gmm_fixed(&v, kg, 0).unwrap().log_likelihood), "kg {kg}");
        }
    }

    #[test]
    fn identical_values_hit_the_floor() {
        let v = vec![250.0; 200];
        let sel = fit_gmm(&v, 1..=3, 0).unwrap();
        let m = &sel.best.model;
        assert!(m.variances.iter().all(|&x| x == VARIANCE_FLOOR));
        assert!(m.means.iter().all(|&x| x == 250.0));
        assert!(sel.best.bic.is_finite());
    }

    #[test]
    fn too_little_data() {
        assert!(matches!(fit_gmm(&[1.0; 30], 1..=4, 0), Err(Error::Estimation(_))));
    }

    #[test]
    fn density_integrates_to_one() {
        let m = GmmModel { weights: vec![0.3, 0.7], means: vec![0.0, 5.0], variances: vec![1.0, 4.0] };
        let s: f64 = (-4000..6000).map(|i| m.pdf(i as f64 * 0.005) * 0.005).sum();
        assert!((s - 1.0).abs() < 1e-6);
    }
}
