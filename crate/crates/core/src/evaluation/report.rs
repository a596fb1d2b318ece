use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::gmm::{fit_gmm, fit_gmm_fixed, GmmModel};
use super::kl::{gmm_kl_mc, KlEstimate};
use super::track::{FormantTrack, FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::util::mix_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    /// Largest component count tried on the reference data.
    pub max_components: usize,
    pub n_samples: usize,
    pub seed: u64,
    /// Pool only frames with a detected F0.
    pub voiced_only: bool,
    /// Points per density curve.
    pub grid_points: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            max_components: 8,
            n_samples: 100_000,
            seed: 0,
            voiced_only: true,
            grid_points: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub feature: String,
    pub ref_kg: usize,
    pub kl: KlEstimate,
    pub n_ref: usize,
    pub n_hyp: usize,
    pub ref_gmm: GmmModel,
    pub hyp_gmm: GmmModel,
}

/// Both fitted densities sampled on a shared frequency grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub feature: String,
    pub freqs: Vec<f64>,
    pub reference: Vec<f64>,
    pub hypothesis: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormantReport {
    /// One row per feature, F0 first.
    pub rows: Vec<ReportRow>,
    pub curves: Vec<DensityCurve>,
}

fn pool(tracks: &[FormantTrack], idx: usize, voiced_only: bool) -> Vec<f64> {
    tracks.iter().flat_map(|t| t.values(idx, voiced_only)).collect()
}

fn curve(feature: &str, f: &GmmModel, g: &GmmModel, points: usize) -> DensityCurve {
    let span = |m: &GmmModel| {
        m.means
            .iter()
            .zip(&m.variances)
            .map(|(mu, v)| (mu - 4.0 * v.sqrt(), mu + 4.0 * v.sqrt()))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)))
    };
    let (a, b) = (span(f), span(g));
    let lo = a.0.min(b.0).max(0.0);
    let hi = a.1.max(b.1).max(lo + 1.0);
    let n = points.max(2);
    let freqs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    DensityCurve {
        feature: feature.to_string(),
        reference: freqs.iter().map(|&x| f.pdf(x)).collect(),
        hypothesis: freqs.iter().map(|&x| g.pdf(x)).collect(),
        freqs,
    }
}

/// Pools each of F0..F4 over both corpora, fits the reference GMM (component
/// count chosen by BIC), fits the hypothesis with the same count, and
/// estimates `KL(reference || hypothesis)`.
pub fn formant_report(
    reference: &[FormantTrack],
    hypothesis: &[FormantTrack],
    cfg: &ReportConfig,
) -> Result<FormantReport> {
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for (idx, name) in FEATURE_NAMES.iter().enumerate() {
        let r = pool(reference, idx, cfg.voiced_only);
        let h = pool(hypothesis, idx, cfg.voiced_only);
        let kmax = cfg.max_components.min(r.len() / 10);
        if kmax == 0 {
            return Err(Error::Estimation(format!(
                "{name}: only {} reference values, at least 10 needed",
                r.len()
            )));
        }
        let seed = mix_seed(cfg.seed, idx as u64);
        let sel = fit_gmm(&r, 1..=kmax, seed)?;
        let kg = sel.best.model.kg();
        let hyp = fit_gmm_fixed(&h, kg, seed)
            .map_err(|e| Error::Estimation(format!("{name} hypothesis: {e}")))?;
        let kl = gmm_kl_mc(&sel.best.model, &hyp.model, cfg.n_samples, seed)?;
        curves.push(curve(name, &sel.best.model, &hyp.model, cfg.grid_points));
        rows.push(ReportRow {
            feature: name.to_string(),
            ref_kg: kg,
            kl,
            n_ref: r.len(),
            n_hyp: h.len(),
            ref_gmm: sel.best.model,
            hyp_gmm: hyp.model,
        });
    }
    Ok(FormantReport { rows, curves })
}

impl FormantReport {
    /// Tab-separated table, one row per feature.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("feature\tref_kg\tkl_nats\tstderr\tn_samples\tseed\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{}\t{}\t{:.6}\t{:.6}\t{}\t{}",
                r.feature, r.ref_kg, r.kl.value, r.kl.stderr, r.kl.n_samples, r.kl.seed
            );
        }
        s
    }

    /// Compact layout with the features as columns.
    pub fn to_table(&self) -> String {
        let mut s = String::from("Feature");
        for r in &self.rows {
            let _ = write!(s, "\t{}", r.feature);
        }
        s.push_str("\nKL");
        for r in &self.rows {
            let _ = write!(s, "\t{:.4}", r.kl.value);
        }
        s.push('\n');
        s
    }

    /// Long-format density grid: feature, frequency, reference, hypothesis.
    pub fn curves_tsv(&self) -> String {
        let mut s = String::from("feature\tfreq_hz\tref_density\thyp_density\n");
        for c in &self.curves {
            for i in 0..c.freqs.len() {
                let _ = writeln!(s, "{}\t{:.3}\t{:.6e}\t{:.6e}", c.feature, c.freqs[i], c.reference[i], c.hypothesis[i]);
            }
        }
        s
    }

    /// Writes `kl_report.tsv`, `kl_table.txt`, `density.tsv` and `kl_report.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, body: String| {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))
        };
        put("kl_report.tsv", self.to_tsv())?;
        put("kl_table.txt", self.to_table())?;
        put("density.tsv", self.curves_tsv())?;
        put("kl_report.json", serde_json::to_string_pretty(self).expect("plain data serialises"))
    }
}
