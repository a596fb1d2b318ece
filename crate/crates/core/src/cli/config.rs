//! Experiment configuration: named presets, TOML files and dotted overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::corpus::{DatasetSpec, Direction};
use crate::dsp::{FeatureKind, DEFAULT_TRIM_DB};
use crate::error::{Error, Result};
use crate::evaluation::{AnalysisConfig, ReportConfig};
use crate::model::{ModelConfig, TapPoint};
use crate::training::TrainRunConfig;

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 6] = ["W1", "W2", "W3", "V1", "V2", "V3"];

/// Preset used when neither the command line nor the file names one.
pub const DEFAULT_PRESET: &str = "W2";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub src_kind: String,
    pub tgt_kind: String,
    pub direction: Direction,
    /// Frames per chunk.
    pub k: usize,
    pub trim_db: f64,
    /// Let unseen triphones extend the vocabulary while preparing.
    pub grow_vocab: bool,
}

/// Architecture settings; feature widths and the triphone count come from
/// the prepared data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Attach the auxiliary triphone decoder.
    pub aux: bool,
    pub n_enc_layers: usize,
    pub n_dec_layers: usize,
    pub n_aux_layers: usize,
    pub tap_layer: usize,
    pub tap_point: TapPoint,
    pub n_heads: usize,
    /// Feed-forward width; defaults to four times the input width.
    pub d_ff: Option<usize>,
    pub p_drop: f64,
    pub layer_norm_eps: f64,
    pub init_seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub analysis: AnalysisConfig,
    pub report: ReportConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: String,
    pub data: DataConfig,
    pub model: ModelSection,
    pub train: TrainRunConfig,
    /// Settings of the auxiliary-decoder pretraining run.
    pub pretrain: TrainRunConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

/// Built-in configuration for one of the six model variants.
///
/// `W*` variants map 80 MFCCs to 80 MFCCs, `V*` variants map 24 smoothed
/// spectral parameters. Variant 1 has no auxiliary decoder, 2 converts
/// whispered to natural speech with it, 3 converts the other way.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let upper = name.to_ascii_uppercase();
    let (kind, variant) = match upper.as_bytes() {
        [b'W', v @ b'1'..=b'3'] => (FeatureKind::Mfcc80, *v),
        [b'V', v @ b'1'..=b'3'] => (FeatureKind::Spectral24, *v),
        _ => {
            return Err(Error::Config(format!(
                "unknown preset {name:?}; expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    let base = ModelConfig::new(kind.dim().unwrap_or(1), kind.dim().unwrap_or(1), 0);
    Ok(ExperimentConfig {
        preset: upper,
        data: DataConfig {
            src_kind: kind.tag(),
            tgt_kind: kind.tag(),
            direction: if variant == b'3' { Direction::Reverse } else { Direction::Forward },
            k: base.k,
            trim_db: DEFAULT_TRIM_DB,
            grow_vocab: true,
        },
        model: ModelSection {
            aux: variant != b'1',
            n_enc_layers: base.n_enc_layers,
            n_dec_layers: base.n_dec_layers,
            n_aux_layers: base.n_aux_layers,
            tap_layer: base.tap_layer,
            tap_point: base.tap_point,
            n_heads: base.n_heads,
            d_ff: None,
            p_drop: base.p_drop,
            layer_norm_eps: base.layer_norm_eps,
            init_seed: 0,
        },
        train: TrainRunConfig::default(),
        pretrain: TrainRunConfig::default(),
        eval: EvalConfig::default(),
    })
}

impl ExperimentConfig {
    pub fn src_kind(&self) -> Result<FeatureKind> {
        FeatureKind::parse(&self.data.src_kind).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn tgt_kind(&self) -> Result<FeatureKind> {
        FeatureKind::parse(&self.data.tgt_kind).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn dataset_spec(&self) -> Result<DatasetSpec> {
        let mut spec = DatasetSpec::new(self.src_kind()?, self.tgt_kind()?, self.data.k);
        spec.direction = self.data.direction;
        spec.trim_db = self.data.trim_db;
        spec.grow_vocab = self.data.grow_vocab;
        Ok(spec)
    }

    /// Concrete model configuration for data of the given widths.
    pub fn model_config(&self, d_in: usize, d_out: usize, vocab: usize) -> Result<ModelConfig> {
        let m = &self.model;
        let cfg = ModelConfig {
            d_in,
            d_out,
            k: self.data.k,
            n_enc_layers: m.n_enc_layers,
            n_dec_layers: m.n_dec_layers,
            n_aux_layers: m.n_aux_layers,
            tap_layer: m.tap_layer,
            tap_point: m.tap_point,
            n_heads: m.n_heads,
            d_ff: m.d_ff.unwrap_or(4 * d_in),
            p_drop: m.p_drop,
            triphone_vocab: if m.aux { vocab } else { 0 },
            layer_norm_eps: m.layer_norm_eps,
            init_seed: m.init_seed,
        };
        if m.aux && vocab == 0 {
            return Err(Error::Config(
                "the auxiliary decoder is enabled but the data has no triphone labels".into(),
            ));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.src_kind()?;
        self.tgt_kind()?;
        if self.data.k == 0 {
            return Err(Error::Config("data.k must be at least 1".into()));
        }
        self.train.validate()?;
        self.pretrain.validate()
    }

    /// Applies the `--seed` flag to every seeded stage.
    pub fn set_seed(&mut self, seed: u64) {
        self.model.init_seed = seed;
        self.train.seed = seed;
        self.pretrain.seed = seed;
        self.eval.report.seed = seed;
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serialises")
    }
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses the right-hand side of `key=value` as a TOML literal, falling back
/// to a bare string.
fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn set_dotted(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key {key:?}")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {p} is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn split_override(s: &str) -> Result<(&str, &str)> {
    s.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| Error::Config(format!("override {s:?} is not of the form key=value")))
}

/// Resolves the effective configuration.
///
/// `source` is either a preset name or a TOML file, which may itself name a
/// base preset with a top-level `preset` key. Overrides are applied last;
/// `preset=NAME` among them rebases before anything else is applied.
pub fn load_config(source: Option<&str>, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut file = Table::new();
    let mut base_name = DEFAULT_PRESET.to_string();
    if let Some(src) = source {
        if PRESETS.iter().any(|p| p.eq_ignore_ascii_case(src)) && !Path::new(src).is_file() {
            base_name = src.to_string();
        } else {
            let path = Path::new(src);
            if !path.exists() {
                return Err(Error::Config(format!(
                    "{src} is neither a preset ({}) nor a config file",
                    PRESETS.join(", ")
                )));
            }
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            file = toml::from_str(&text).map_err(|e| Error::Config(format!("{src}: {e}")))?;
            if let Some(v) = file.get("preset") {
                base_name = v
                    .as_str()
                    .ok_or_else(|| Error::Config(format!("{src}: preset must be a string")))?
                    .to_string();
            }
        }
    }
    let parsed: Vec<(&str, &str)> = overrides.iter().map(|s| split_override(s)).collect::<Result<_>>()?;
    if let Some((_, v)) = parsed.iter().rev().find(|(k, _)| *k == "preset") {
        base_name = v.trim_matches('"').to_string();
    }
    let base = preset(&base_name)?;
    let mut table = Table::try_from(&base).expect("preset serialises to a table");
    file.remove("preset");
    merge(&mut table, file);
    for (k, v) in parsed.into_iter().filter(|(k, _)| *k != "preset") {
        set_dotted(&mut table, k, parse_value(v))?;
    }
    table.insert("preset".into(), Value::String(base.preset));
    let cfg: ExperimentConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.message().trim().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
