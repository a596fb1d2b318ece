//! Analysis and scoring: Burg LPC formants, autocorrelation F0, univariate
//! GMMs fitted by EM, Monte-Carlo KL divergence between GMMs, and WER/BLEU.

mod gmm;
mod kl;
mod lpc;
mod pitch;
mod report;
mod text;
mod track;

pub use gmm::{fit_gmm, fit_gmm_fixed, EmFit, GmmModel, GmmSelection, VARIANCE_FLOOR};
pub use kl::{gmm_kl_mc, KlEstimate};
pub use lpc::{
    burg_lpc, default_lpc_order, lpc_to_formants, Formant, Lpc, FORMANT_MAX_BW_HZ, FORMANT_MIN_HZ,
    FORMANT_NYQUIST_MARGIN_HZ,
};
pub use pitch::{estimate_f0, VOICING_THRESHOLD};
pub use report::{formant_report, DensityCurve, FormantReport, ReportConfig, ReportRow};
pub use text::{align_counts, bleu, corpus_wer, tokenize, wer, EditCounts};
pub use track::{analyze_waveform, AnalysisConfig, FormantTrack, FrameMeasure, FEATURE_NAMES};
