use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::align::{align_pair, TARGET_RATE};
use super::chunk::chunk;
use super::example::TrainingExample;
use super::manifest::{Manifest, UtterancePair};
use super::shard::{read_shard, write_shard, ShardHeader};
use super::vocab::{read_labels, TriphoneVocab};
use crate::dsp::{load_wav, mfcc, resample, trim_silence, FeatureKind, FeatureSequence, Waveform, DEFAULT_TRIM_DB};
use crate::error::{Error, Result};

/// Examples per shard file.
pub const SHARD_SIZE: usize = 4096;

/// Which manifest column feeds the encoder.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Manifest source column is the model input.
    #[default]
    Forward,
    /// Roles swapped: the manifest target column is the model input.
    Reverse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub src_kind: FeatureKind,
    pub tgt_kind: FeatureKind,
    pub direction: Direction,
    pub k: usize,
    pub trim_db: f64,
    /// Existing vocabulary to map labels through.
    pub vocab: Option<TriphoneVocab>,
    /// Whether unseen triphones extend the vocabulary.
    pub grow_vocab: bool,
}

impl DatasetSpec {
    pub fn new(src_kind: FeatureKind, tgt_kind: FeatureKind, k: usize) -> Self {
        Self {
            src_kind,
            tgt_kind,
            direction: Direction::Forward,
            k,
            trim_db: DEFAULT_TRIM_DB,
            vocab: None,
            grow_vocab: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub src_kind: String,
    pub tgt_kind: String,
    pub direction: Direction,
    pub k: usize,
    pub pairs_total: usize,
    pub pairs_kept: usize,
    pub chunks: usize,
    /// Triphone vocabulary size; 0 when unlabelled.
    pub vocab_size: usize,
    pub rejected: Vec<Rejection>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub examples: Vec<TrainingExample>,
    pub vocab: Option<TriphoneVocab>,
    pub stats: DatasetStats,
}

/// Computes features for one side given its (already aligned) waveform.
pub fn waveform_features(w: &Waveform, kind: FeatureKind) -> Result<FeatureSequence> {
    match kind {
        FeatureKind::Mfcc80 => mfcc(w, 80, 80),
        other => Err(Error::Parameter(format!(
            "{other} features are not computed from audio; supply feature files"
        ))),
    }
}

/// Loads a WAV, trims it and brings it to 16 kHz.
pub fn prepare_waveform(path: &Path, trim_db: f64) -> Result<Waveform> {
    let w = load_wav(path)?;
    resample(&trim_silence(&w, trim_db)?, TARGET_RATE)
}

fn load_ingested(path: &Path, kind: FeatureKind) -> Result<FeatureSequence> {
    let seq = FeatureSequence::load(path)?;
    if seq.kind != kind {
        return Err(Error::Data(format!(
            "{} holds {} features, expected {kind}",
            path.display(),
            seq.kind
        )));
    }
    Ok(seq)
}

fn pair_features(pair: &UtterancePair, spec: &DatasetSpec) -> Result<(FeatureSequence, FeatureSequence)> {
    let (src_path, tgt_path): (&PathBuf, &PathBuf) = match spec.direction {
        Direction::Forward => (&pair.source, &pair.target),
        Direction::Reverse => (&pair.target, &pair.source),
    };
    let (sk, tk) = (spec.src_kind, spec.tgt_kind);
    if sk.is_computed() && tk.is_computed() {
        let aligned = align_pair(&load_wav(src_path)?, &load_wav(tgt_path)?, spec.trim_db)?;
        return Ok((waveform_features(&aligned.source, sk)?, waveform_features(&aligned.target, tk)?));
    }
    let side = |path: &Path, kind: FeatureKind| {
        if kind.is_computed() {
            waveform_features(&prepare_waveform(path, spec.trim_db)?, kind)
        } else {
            load_ingested(path, kind)
        }
    };
    Ok((side(src_path, sk)?, side(tgt_path, tk)?))
}

fn process_pair(pair: &UtterancePair, spec: &DatasetSpec, vocab: &mut TriphoneVocab) -> Result<Vec<TrainingExample>> {
    let (src, tgt) = pair_features(pair, spec)?;
    let labels = match &pair.labels {
        Some(p) => Some(read_labels(p, vocab, spec.grow_vocab)?),
        None => None,
    };
    let mut chunks = chunk(&src, &tgt, labels.as_deref(), spec.k, &pair.id)?;
    if chunks.is_empty() {
        return Err(Error::Data(format!(
            "{}: {} frames are fewer than one chunk of {}",
            pair.id,
            src.len().min(tgt.len()),
            spec.k
        )));
    }
    for ex in &mut chunks {
        ex.src = ex.src.round_to_f32();
        ex.tgt = ex.tgt.round_to_f32();
    }
    Ok(chunks)
}

/// Turns a manifest into chunked training examples.
///
/// Pairs that fail to load, align, label or chunk are skipped and listed in
/// the stats; only when nothing survives is the whole build an error. Values
/// are rounded to `f32` so an in-memory dataset equals its reloaded shards.
/// When `out` is given, shards, `stats.json`, `rejected.tsv` and (for
/// labelled corpora) `vocab.txt` are written there.
pub fn build_dataset(manifest: &Manifest, spec: &DatasetSpec, out: Option<&Path>) -> Result<Dataset> {
    if spec.k == 0 {
        return Err(Error::Parameter("chunk length k must be at least 1".into()));
    }
    let mut vocab = spec.vocab.clone().unwrap_or_default();
    let mut examples = Vec::new();
    let mut rejected = Vec::new();
    let mut kept = 0;
    let mut labelled: Option<bool> = None;
    for pair in &manifest.pairs {
        let mut trial = vocab.clone();
        let result = process_pair(pair, spec, &mut trial).and_then(|c| match labelled {
            Some(l) if l != pair.labels.is_some() => Err(Error::Data(format!(
                "{}: corpus mixes labelled and unlabelled pairs",
                pair.id
            ))),
            _ => Ok(c),
        });
        match result {
            Ok(chunks) => {
                labelled = Some(pair.labels.is_some());
                vocab = trial;
                kept += 1;
                examples.extend(chunks);
            }
            Err(e @ (Error::Parameter(_) | Error::Config(_))) => return Err(e),
            Err(e) => {
                eprintln!("skipping pair {}: {e}", pair.id);
                rejected.push(Rejection {
                    id: pair.id.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    if examples.is_empty() {
        return Err(Error::Data(format!(
            "no usable pairs: all {} manifest entries were rejected",
            manifest.pairs.len()
        )));
    }
    let labelled = labelled.unwrap_or(false);
    let stats = DatasetStats {
        src_kind: spec.src_kind.tag(),
        tgt_kind: spec.tgt_kind.tag(),
        direction: spec.direction,
        k: spec.k,
        pairs_total: manifest.pairs.len(),
        pairs_kept: kept,
        chunks: examples.len(),
        vocab_size: if labelled { vocab.len() } else { 0 },
        rejected,
    };
    let ds = Dataset {
        examples,
        vocab: labelled.then_some(vocab),
        stats,
    };
    if let Some(dir) = out {
        write_dataset(&ds, spec, dir)?;
    }
    Ok(ds)
}

fn write_dataset(ds: &Dataset, spec: &DatasetSpec, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let first = &ds.examples[0];
    let header = ShardHeader {
        src_kind: spec.src_kind,
        tgt_kind: spec.tgt_kind,
        k: spec.k,
        d_in: first.d_in(),
        d_out: first.d_out(),
        labelled: ds.vocab.is_some(),
    };
    for (i, part) in ds.examples.chunks(SHARD_SIZE).enumerate() {
        write_shard(&dir.join(format!("shard-{i:05}.wexa")), &header, part)?;
    }
    if let Some(v) = &ds.vocab {
        v.save(&dir.join("vocab.txt"))?;
    }
    let stats_path = dir.join("stats.json");
    let json = serde_json::to_string_pretty(&ds.stats).expect("stats serialise");
    std::fs::write(&stats_path, json + "\n").map_err(|e| Error::io(&stats_path, e))?;
    let rej_path = dir.join("rejected.tsv");
    let rej: String = ds
        .stats
        .rejected
        .iter()
        .map(|r| format!("{}\t{}\n", r.id, r.reason.replace(['\t', '\n'], " ")))
        .collect();
    std::fs::write(&rej_path, rej).map_err(|e| Error::io(&rej_path, e))
}

/// Reads a dataset directory written by [`build_dataset`].
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let mut shards: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "wexa"))
        .collect();
    shards.sort();
    if shards.is_empty() {
        return Err(Error::Data(format!("{} contains no shard files", dir.display())));
    }
    let mut examples = Vec::new();
    let mut header: Option<ShardHeader> = None;
    for p in &shards {
        let (h, mut xs) = read_shard(p)?;
        if header.as_ref().is_some_and(|h0| *h0 != h) {
            return Err(Error::format(p, "shard header differs from the first shard"));
        }
        header = Some(h);
        examples.append(&mut xs);
    }
    let stats_path = dir.join("stats.json");
    let stats: DatasetStats = match std::fs::read_to_string(&stats_path) {
        Ok(s) => serde_json::from_str(&s).map_err(|e| Error::format(&stats_path, e.to_string()))?,
        Err(_) => DatasetStats::default(),
    };
    let vocab_path = dir.join("vocab.txt");
    let vocab = if header.expect("at least one shard").labelled {
        Some(TriphoneVocab::load(&vocab_path)?)
    } else {
        None
    };
    Ok(Dataset { examples, vocab, stats })
}
