use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::record::RunRecord;
use crate::corpus::{build_dataset, load_dataset, Dataset, DatasetStats, Manifest, TARGET_RATE};
use crate::dsp::{load_wav, mfcc, resample, FeatureKind, FeatureSequence};
use crate::error::{Error, Result};
use crate::evaluation::{analyze_waveform, bleu, corpus_wer, formant_report, FormantReport, FormantTrack};
use crate::model::{model_infer, Checkpoint};
use crate::numerics::Tensor;
use crate::training::{pretrain_aux, train, StartFrom, TrainOutcome};

/// Name of the final checkpoint written by the training commands.
pub const MODEL_FILE: &str = "model.whlt";
/// Name of the run record written into output directories.
pub const RUN_RECORD: &str = "run.json";

/// Chunks converted per inference call.
const INFER_BATCH: usize = 64;

/// Builds training shards from a manifest into `out`.
pub fn cmd_prepare(manifest: &Path, cfg: &ExperimentConfig, out: &Path) -> Result<DatasetStats> {
    let m = Manifest::load(manifest)?;
    let mut inputs = vec![manifest.to_path_buf()];
    for p in &m.pairs {
        inputs.extend([p.source.clone(), p.target.clone()].into_iter().filter(|x| x.is_file()));
        inputs.extend(p.labels.clone().filter(|x| x.is_file()));
    }
    let ds = build_dataset(&m, &cfg.dataset_spec()?, Some(out))?;
    RunRecord::new("prepare", cfg, &inputs)?.write(&out.join(RUN_RECORD))?;
    Ok(ds.stats)
}

/// Initial weights for [`cmd_train`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Init {
    #[default]
    Scratch,
    /// Continue a run: weights, optimizer moments and step counter.
    Resume(PathBuf),
    /// Start from the weights of another run (e.g. aux pretraining).
    Weights(PathBuf),
}

fn dataset_geometry(ds: &Dataset) -> (usize, usize, usize) {
    let e = &ds.examples[0];
    (e.d_in(), e.d_out(), ds.vocab.as_ref().map_or(0, |v| v.len()))
}

fn run_training(
    command: &str,
    data: &Path,
    cfg: &ExperimentConfig,
    init: &Init,
    out: &Path,
    pretrain: bool,
) -> Result<TrainOutcome> {
    let ds = load_dataset(data)?;
    let (d_in, d_out, vocab) = dataset_geometry(&ds);
    let model = cfg.model_config(d_in, d_out, vocab)?;
    let mut inputs = vec![data.to_path_buf()];
    let start = match init {
        Init::Scratch => StartFrom::Scratch,
        Init::Resume(p) => {
            inputs.push(p.clone());
            StartFrom::Resume(Checkpoint::load(p)?)
        }
        Init::Weights(p) => {
            inputs.push(p.clone());
            StartFrom::Weights(Checkpoint::load(p)?)
        }
    };
    let run = if pretrain { &cfg.pretrain } else { &cfg.train };
    let record = RunRecord::new(command, cfg, &inputs)?;
    let mut outcome = if pretrain {
        pretrain_aux(&ds.examples, &model, run, start, Some(out))?
    } else {
        train(&ds.examples, &model, run, start, Some(out))?
    };
    outcome.checkpoint.meta.src_kind = Some(cfg.data.src_kind.clone());
    outcome.checkpoint.meta.tgt_kind = Some(cfg.data.tgt_kind.clone());
    outcome.checkpoint.save(&out.join(MODEL_FILE))?;
    if let Some(v) = &ds.vocab {
        v.save(&out.join("vocab.txt"))?;
    }
    record.write(&out.join(RUN_RECORD))?;
    Ok(outcome)
}

/// Trains a conversion model on prepared shards, writing checkpoints, the
/// metrics log and a run record into `out`.
pub fn cmd_train(data: &Path, cfg: &ExperimentConfig, init: &Init, out: &Path) -> Result<TrainOutcome> {
    run_training("train", data, cfg, init, out, false)
}

/// Pretrains the lower encoder and the auxiliary decoder on triphone labels.
pub fn cmd_pretrain_aux(data: &Path, cfg: &ExperimentConfig, init: &Init, out: &Path) -> Result<TrainOutcome> {
    if !cfg.model.aux {
        return Err(Error::Config(format!(
            "preset {} has no auxiliary decoder to pretrain",
            cfg.preset
        )));
    }
    run_training("pretrain-aux", data, cfg, init, out, true)
}

fn is_wav(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

fn usage(msg: String) -> Error {
    Error::Config(msg)
}

/// Featurises `input` for a model expecting `kind` at width `d_in`.
fn input_features(input: &Path, kind: Option<FeatureKind>, d_in: usize) -> Result<FeatureSequence> {
    let seq = if is_wav(input) {
        let kind = kind.unwrap_or(FeatureKind::Custom(d_in));
        if !kind.is_computed() {
            return Err(usage(format!(
                "the model expects {kind} features, which cannot be computed from {}; pass a feature file",
                input.display()
            )));
        }
        let w = resample(&load_wav(input)?, TARGET_RATE)?;
        mfcc(&w, 80, 80)?
    } else {
        let s = FeatureSequence::load(input)?;
        if let Some(k) = kind {
            if s.kind != k {
                return Err(usage(format!("{} holds {} features, the model expects {k}", input.display(), s.kind)));
            }
        }
        s
    };
    if seq.dim() != d_in {
        return Err(usage(format!(
            "{} has {}-dimensional frames, the model expects {d_in}",
            input.display(),
            seq.dim()
        )));
    }
    Ok(seq)
}

/// Converts a whole sequence chunk by chunk.
///
/// The final partial chunk is padded by repeating the last frame; the
/// output is cut back to the input length.
pub fn convert_features(ck: &Checkpoint, seq: &FeatureSequence) -> Result<Tensor> {
    let c = &ck.config;
    let (t, d, k) = (seq.len(), seq.dim(), c.k);
    if t == 0 {
        return Err(Error::Data("cannot convert an empty feature sequence".into()));
    }
    let n = t.div_ceil(k);
    let mut padded = seq.frames.data().to_vec();
    let last = seq.frame(t - 1).to_vec();
    for _ in t..n * k {
        padded.extend_from_slice(&last);
    }
    let mut out = Vec::with_capacity(n * k * c.d_out);
    for group in padded.chunks(INFER_BATCH * k * d) {
        let b = group.len() / (k * d);
        let x = Tensor::new(&[b, k, d], group.to_vec())?;
        out.extend_from_slice(model_infer(c, &ck.params, &x)?.data());
    }
    out.truncate(t * c.d_out);
    Tensor::new(&[t, c.d_out], out)
}

fn kind_of(tag: Option<&String>) -> Result<Option<FeatureKind>> {
    tag.map(|t| FeatureKind::parse(t)).transpose()
}

/// Runs a checkpoint over a WAV or feature file and writes the converted
/// feature file to `out` (with a `.run.json` record beside it).
pub fn cmd_convert(checkpoint: &Path, input: &Path, out: &Path, cfg: &ExperimentConfig) -> Result<FeatureSequence> {
    let ck = Checkpoint::load(checkpoint)?;
    let src_kind = kind_of(ck.meta.src_kind.as_ref())?;
    let seq = input_features(input, src_kind, ck.config.d_in)?;
    let frames = convert_features(&ck, &seq)?;
    let kind = match kind_of(ck.meta.tgt_kind.as_ref())? {
        Some(k) if k.dim().is_none_or(|d| d == ck.config.d_out) => k,
        _ => FeatureKind::Custom(ck.config.d_out),
    };
    let mut result = FeatureSequence::new(kind, frames)?;
    result.frame_ms = seq.frame_ms;
    result.hop_ms = seq.hop_ms;
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    result = result.with_source(stem);
    result.save(out)?;
    let mut rec_path = out.as_os_str().to_owned();
    rec_path.push(".run.json");
    RunRecord::new("convert", cfg, &[checkpoint.to_path_buf(), input.to_path_buf()])?.write(Path::new(&rec_path))?;
    Ok(result)
}

/// WAV files of a corpus: a single file, or every `.wav` directly inside a
/// directory, sorted by name.
pub fn corpus_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| is_wav(p))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Data(format!("no .wav files in {}", path.display())));
    }
    Ok(files)
}

fn analyze_corpus(path: &Path, cfg: &ExperimentConfig) -> Result<Vec<FormantTrack>> {
    corpus_files(path)?
        .iter()
        .map(|f| analyze_waveform(&load_wav(f)?, &cfg.eval.analysis))
        .collect()
}

/// Word error rate and BLEU of one hypothesis transcript set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextMetrics {
    pub utterances: usize,
    /// Fraction of reference words (not percent).
    pub wer: f64,
    /// Corpus BLEU-4 on a 0..100 scale.
    pub bleu: f64,
    /// Reference ids with no hypothesis line (scored as empty).
    pub missing: Vec<String>,
}

/// Reads `id<TAB>text` lines; lines without a tab are keyed by line number.
pub fn read_transcripts(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| match l.split_once('\t') {
            Some((id, t)) => (id.trim().to_string(), t.trim().to_string()),
            None => (format!("{}", i + 1), l.trim().to_string()),
        })
        .collect())
}

/// Scores hypothesis transcripts against references, pairing lines by id.
pub fn cmd_metrics(reference: &Path, hypothesis: &Path) -> Result<TextMetrics> {
    let refs = read_transcripts(reference)?;
    let hyps: std::collections::HashMap<String, String> = read_transcripts(hypothesis)?.into_iter().collect();
    if refs.is_empty() {
        return Err(Error::Metric(format!("{} has no transcripts", reference.display())));
    }
    let mut missing = Vec::new();
    let (r, h): (Vec<&str>, Vec<&str>) = refs
        .iter()
        .map(|(id, text)| {
            let hyp = hyps.get(id).map(String::as_str).unwrap_or_else(|| {
                missing.push(id.clone());
                ""
            });
            (text.as_str(), hyp)
        })
        .unzip();
    Ok(TextMetrics {
        utterances: r.len(),
        wer: corpus_wer(&r, &h)?,
        bleu: bleu(&r, &h)?,
        missing,
    })
}

#[derive(Clone, Debug)]
pub struct EvalOutcome {
    pub report: FormantReport,
    pub text: Option<TextMetrics>,
}

/// Formant-distribution report of a hypothesis corpus against a reference
/// corpus, plus WER and BLEU when transcripts are supplied. Results go to
/// `out`.
pub fn cmd_eval(
    reference: &Path,
    hypothesis: &Path,
    transcripts: Option<(&Path, &Path)>,
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<EvalOutcome> {
    let ref_tracks = analyze_corpus(reference, cfg)?;
    let hyp_tracks = analyze_corpus(hypothesis, cfg)?;
    let report = formant_report(&ref_tracks, &hyp_tracks, &cfg.eval.report)?;
    report.write(out)?;
    let mut inputs = vec![reference.to_path_buf(), hypothesis.to_path_buf()];
    let text = match transcripts {
        Some((r, h)) => {
            inputs.extend([r.to_path_buf(), h.to_path_buf()]);
            let m = cmd_metrics(r, h)?;
            let p = out.join("text_metrics.json");
            let json = serde_json::to_string_pretty(&m).expect("metrics serialise");
            std::fs::write(&p, json + "\n").map_err(|e| Error::io(&p, e))?;
            Some(m)
        }
        None => None,
    };
    RunRecord::new("eval", cfg, &inputs)?.write(&out.join(RUN_RECORD))?;
    Ok(EvalOutcome { report, text })
}
