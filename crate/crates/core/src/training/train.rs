use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::losses::LossBreakdown;
use super::optim::{adam_step, OptimizerState};
use super::schedule::lr_schedule;
use crate::corpus::{stack, TrainingExample};
use crate::error::{Error, Result};
use crate::model::{shift_right, Checkpoint, ModelConfig, ModelParams, Pass};
use crate::numerics::{Graph, Tensor, Var};
use crate::util::mix_seed;

/// Examples per gradient sub-batch. Sub-batch gradients are reduced in a
/// fixed order, so results do not depend on how many threads run them.
const MICRO_BATCH: usize = 16;

/// Optimisation settings of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainRunConfig {
    pub batch_size: usize,
    pub epochs: u64,
    /// Optional cap on the total number of optimizer steps.
    pub max_steps: Option<u64>,
    pub seed: u64,
    pub warmup_steps: u64,
    /// Write a checkpoint every this many steps (0: only at the end).
    pub checkpoint_every: u64,
    /// Run sub-batches sequentially on one thread.
    pub deterministic: bool,
    /// Weight of the triphone loss in the total.
    pub aux_weight: f64,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            epochs: 80,
            max_steps: None,
            seed: 0,
            warmup_steps: 4000,
            checkpoint_every: 0,
            deterministic: true,
            aux_weight: 1.0,
        }
    }
}

impl TrainRunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 || self.warmup_steps == 0 {
            return Err(Error::Config(format!(
                "batch_size ({}), epochs ({}) and warmup_steps ({}) must be at least 1",
                self.batch_size, self.epochs, self.warmup_steps
            )));
        }
        if !(self.aux_weight.is_finite() && self.aux_weight >= 0.0) {
            return Err(Error::Config(format!("aux_weight {} must be >= 0", self.aux_weight)));
        }
        Ok(())
    }
}

/// Where a run takes its initial weights from.
#[derive(Clone, Debug)]
pub enum StartFrom {
    Scratch,
    /// Continue a run: weights, optimizer moments and step counter.
    Resume(Checkpoint),
    /// Weights only (e.g. after auxiliary pretraining); fresh optimizer.
    Weights(Checkpoint),
}

/// One line of the metrics log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub epoch: u64,
    pub lrate: f64,
    pub l1: f64,
    pub l2: f64,
    pub total: f64,
    pub wall_time: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub records: Vec<StepRecord>,
}

/// Stacked batch tensors.
#[derive(Clone, Debug)]
pub struct Batch {
    /// `[B, k, d_in]`
    pub src: Tensor,
    /// `[B, k, d_out]`
    pub tgt: Tensor,
    /// `B * k` frame labels when every example has them.
    pub labels: Option<Vec<usize>>,
}

impl Batch {
    pub fn from_examples(items: &[&TrainingExample]) -> Result<Self> {
        let src = stack(items.iter().map(|e| &e.src))?;
        let tgt = stack(items.iter().map(|e| &e.tgt))?;
        let labels = items
            .iter()
            .map(|e| e.labels.as_deref())
            .collect::<Option<Vec<_>>>()
            .map(|v| v.concat());
        Ok(Self { src, tgt, labels })
    }

    pub fn len(&self) -> usize {
        self.src.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Graph handles of the loss terms of one batch.
#[derive(Clone, Copy, Debug)]
pub struct LossVars {
    pub total: Var,
    pub l1: Option<Var>,
    pub l2: Option<Var>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Objective {
    /// Reconstruction plus (when enabled) triphone classification.
    Joint,
    /// Triphone classification only, through the encoder's lower layers.
    AuxOnly,
}

fn loss_vars(pass: &mut Pass, batch: &Batch, aux_weight: f64, obj: Objective) -> Result<LossVars> {
    let x = pass.g.constant(batch.src.clone());
    let aux_labels = || {
        batch
            .labels
            .as_deref()
            .ok_or_else(|| Error::Data("auxiliary decoder enabled but batch has no labels".into()))
    };
    if obj == Objective::AuxOnly {
        let (_, h_tap) = pass.encoder(x)?;
        let logits = pass.aux_decoder(h_tap)?;
        let l2 = pass.g.cross_entropy(logits, aux_labels()?)?;
        return Ok(LossVars {
            total: l2,
            l1: None,
            l2: Some(l2),
        });
    }
    let prev = pass.g.constant(shift_right(&batch.tgt)?);
    let out = pass.forward(x, prev)?;
    let l1 = pass.g.rmse_loss(out.y_hat, &batch.tgt)?;
    let (total, l2) = match out.logits {
        Some(logits) => {
            let l2 = pass.g.cross_entropy(logits, aux_labels()?)?;
            let weighted = if aux_weight == 1.0 {
                l2
            } else {
                pass.g.scale(l2, aux_weight)
            };
            (pass.g.add(l1, weighted)?, Some(l2))
        }
        None => (l1, None),
    };
    Ok(LossVars {
        total,
        l1: Some(l1),
        l2,
    })
}

/// Records the training objective for `batch` on an existing pass: the
/// reconstruction loss plus `aux_weight` times the triphone loss.
pub fn model_loss(pass: &mut Pass, batch: &Batch, aux_weight: f64) -> Result<LossVars> {
    loss_vars(pass, batch, aux_weight, Objective::Joint)
}

fn breakdown(g: &Graph, v: &LossVars, aux_weight: f64) -> Result<LossBreakdown> {
    let l1 = v.l1.map(|x| g.value(x).item()).transpose()?.unwrap_or(0.0);
    let l2 = v.l2.map(|x| g.value(x).item()).transpose()?.unwrap_or(0.0);
    Ok(LossBreakdown::new(l1, l2, aux_weight))
}

struct Evaluated {
    loss: LossBreakdown,
    grads: BTreeMap<String, Tensor>,
}

#[allow(clippy::too_many_arguments)]
fn evaluate_micro(
    config: &ModelConfig,
    params: &ModelParams,
    items: &[&TrainingExample],
    trainable: &(dyn Fn(&str) -> bool + Sync),
    obj: Objective,
    aux_weight: f64,
    dropout_seed: u64,
) -> Result<Evaluated> {
    let batch = Batch::from_examples(items)?;
    let mut g = Graph::new();
    let bound = params.bind(&mut g, trainable);
    let mut pass = Pass::new(&mut g, &bound, config, true, dropout_seed);
    let vars = loss_vars(&mut pass, &batch, aux_weight, obj)?;
    let loss = breakdown(&g, &vars, aux_weight)?;
    let grads = g.backward(vars.total)?;
    let mut named = BTreeMap::new();
    for (name, v) in bound.iter() {
        if let Some(t) = grads.get(v) {
            named.insert(name.to_string(), t.clone());
        }
    }
    Ok(Evaluated { loss, grads: named })
}

/// Loss and batch-mean gradients of one training batch.
fn evaluate_batch(
    config: &ModelConfig,
    params: &ModelParams,
    items: &[&TrainingExample],
    trainable: &(dyn Fn(&str) -> bool + Sync),
    obj: Objective,
    run: &TrainRunConfig,
    step: u64,
) -> Result<Evaluated> {
    let groups: Vec<&[&TrainingExample]> = items.chunks(MICRO_BATCH).collect();
    let seed = mix_seed(run.seed, step);
    let eval = |(i, grp): (usize, &&[&TrainingExample])| {
        evaluate_micro(config, params, grp, trainable, obj, run.aux_weight, mix_seed(seed, i as u64))
    };
    let parts: Vec<Result<Evaluated>> = if run.deterministic || groups.len() == 1 {
        groups.iter().enumerate().map(eval).collect()
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = groups
                .iter()
                .enumerate()
                .map(|job| s.spawn(move || eval(job)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("gradient worker panicked"))
                .collect()
        })
    };
    if parts.len() == 1 {
        return parts.into_iter().next().expect("one part");
    }
    let n = items.len() as f64;
    let (mut l1, mut l2) = (0.0, 0.0);
    let mut grads: BTreeMap<String, Tensor> = BTreeMap::new();
    for (part, grp) in parts.into_iter().zip(&groups) {
        let part = part?;
        let w = grp.len() as f64 / n;
        l1 += w * part.loss.l1_rmse;
        l2 += w * part.loss.l2_xent;
        for (name, t) in part.grads {
            match grads.get_mut(&name) {
                Some(acc) => {
                    for (a, b) in acc.data_mut().iter_mut().zip(t.data()) {
                        *a += w * b;
                    }
                }
                None => {
                    grads.insert(name, t.map(|v| w * v));
                }
            }
        }
    }
    Ok(Evaluated {
        loss: LossBreakdown::new(l1, l2, run.aux_weight),
        grads,
    })
}

/// Evaluation-mode loss of `examples` (no dropout, no update), batched in
/// groups of `batch_size`.
pub fn batch_loss(
    config: &ModelConfig,
    params: &ModelParams,
    examples: &[TrainingExample],
    aux_weight: f64,
) -> Result<LossBreakdown> {
    if examples.is_empty() {
        return Err(Error::Data("no examples to evaluate".into()));
    }
    let (mut l1, mut l2) = (0.0, 0.0);
    for grp in examples.chunks(64) {
        let refs: Vec<&TrainingExample> = grp.iter().collect();
        let batch = Batch::from_examples(&refs)?;
        let mut g = Graph::new();
        let bound = params.bind(&mut g, |_| false);
        let mut pass = Pass::new(&mut g, &bound, config, false, 0);
        let vars = model_loss(&mut pass, &batch, aux_weight)?;
        let b = breakdown(&g, &vars, aux_weight)?;
        let w = grp.len() as f64 / examples.len() as f64;
        l1 += w * b.l1_rmse;
        l2 += w * b.l2_xent;
    }
    Ok(LossBreakdown::new(l1, l2, aux_weight))
}

/// Fraction of frames whose arg-max triphone logit equals the label.
pub fn aux_frame_accuracy(
    config: &ModelConfig,
    params: &ModelParams,
    examples: &[TrainingExample],
) -> Result<f64> {
    if !config.has_aux() {
        return Err(Error::Config("model has no auxiliary decoder".into()));
    }
    let p = config.triphone_vocab;
    let (mut hit, mut total) = (0usize, 0usize);
    for grp in examples.chunks(64) {
        let refs: Vec<&TrainingExample> = grp.iter().collect();
        let batch = Batch::from_examples(&refs)?;
        let labels = batch
            .labels
            .as_ref()
            .ok_or_else(|| Error::Data("examples carry no labels".into()))?;
        let mut g = Graph::new();
        let bound = params.bind(&mut g, |_| false);
        let mut pass = Pass::new(&mut g, &bound, config, false, 0);
        let x = pass.g.constant(batch.src.clone());
        let (_, h) = pass.encoder(x)?;
        let logits = pass.aux_decoder(h)?;
        for (row, &l) in g.value(logits).data().chunks(p).zip(labels) {
            let best = row
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b })
                .0;
            hit += usize::from(best == l);
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::Data("no frames to score".into()));
    }
    Ok(hit as f64 / total as f64)
}

fn check_corpus(examples: &[TrainingExample], config: &ModelConfig, need_labels: bool) -> Result<()> {
    if examples.is_empty() {
        return Err(Error::Data("training corpus is empty".into()));
    }
    for e in examples {
        if e.k() != config.k || e.d_in() != config.d_in || e.d_out() != config.d_out {
            return Err(Error::Config(format!(
                "example {}#{} has shape k={} d_in={} d_out={}, model expects k={} d_in={} d_out={}",
                e.utterance,
                e.chunk_index,
                e.k(),
                e.d_in(),
                e.d_out(),
                config.k,
                config.d_in,
                config.d_out
            )));
        }
        if need_labels && e.labels.is_none() {
            return Err(Error::Data(format!(
                "auxiliary decoder enabled but {}#{} has no triphone labels",
                e.utterance, e.chunk_index
            )));
        }
        e.validate(config.has_aux().then_some(config.triphone_vocab))?;
    }
    Ok(())
}

fn initial_state(
    config: &ModelConfig,
    run: &TrainRunConfig,
    start: StartFrom,
) -> Result<(ModelParams, OptimizerState)> {
    match start {
        StartFrom::Scratch => Ok((ModelParams::init(config)?, OptimizerState::new(run.warmup_steps))),
        StartFrom::Resume(ck) => {
            if &ck.config != config {
                return Err(Error::Config(
                    "resume checkpoint was written for a different model configuration".into(),
                ));
            }
            let opt = OptimizerState::from_blobs(ck.meta.step, run.warmup_steps, &ck.state);
            Ok((ck.params, opt))
        }
        StartFrom::Weights(ck) => {
            let tensors = ck.params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
            let params = ModelParams::from_tensors(config, tensors)?;
            Ok((params, OptimizerState::new(run.warmup_steps)))
        }
    }
}

struct Sink<'a> {
    dir: Option<&'a Path>,
}

impl Sink<'_> {
    fn log(&self, rec: &StepRecord) -> Result<()> {
        let Some(dir) = self.dir else { return Ok(()) };
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("metrics.jsonl");
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let line = serde_json::to_string(rec).expect("plain record serialises");
        writeln!(f, "{line}").map_err(|e| Error::io(&path, e))
    }

    fn checkpoint(&self, name: &str, ck: &Checkpoint) -> Result<()> {
        match self.dir {
            Some(dir) => ck.save(&dir.join(name)),
            None => Ok(()),
        }
    }
}

fn run_loop(
    examples: &[TrainingExample],
    config: &ModelConfig,
    run: &TrainRunConfig,
    start: StartFrom,
    out_dir: Option<&Path>,
    obj: Objective,
) -> Result<TrainOutcome> {
    config.validate()?;
    run.validate()?;
    check_corpus(examples, config, config.has_aux())?;
    let (mut params, mut opt) = initial_state(config, run, start)?;
    let tap = config.tap_layer;
    let trainable = move |name: &str| match obj {
        Objective::Joint => true,
        Objective::AuxOnly => {
            name.starts_with("aux")
                || name
                    .strip_prefix("enc.")
                    .and_then(|r| r.split('.').next())
                    .and_then(|i| i.parse::<usize>().ok())
                    .is_some_and(|i| i < tap)
        }
    };
    let n = examples.len();
    let per_epoch = n.div_ceil(run.batch_size) as u64;
    let mut last = run.epochs * per_epoch;
    if let Some(m) = run.max_steps {
        last = last.min(m);
    }
    let sink = Sink { dir: out_dir };
    let clock = Instant::now();
    let mut records = Vec::new();
    let mut order: Vec<usize> = Vec::new();
    let mut order_epoch = u64::MAX;
    let snapshot = |params: &ModelParams, opt: &OptimizerState| {
        let mut ck = Checkpoint::new(config.clone(), params.clone());
        ck.meta.step = opt.step;
        ck.meta.epoch = opt.step / per_epoch;
        ck.meta.seed = run.seed;
        ck.state = opt.to_blobs();
        ck
    };
    while opt.step < last {
        let step = opt.step;
        let epoch = step / per_epoch;
        if epoch != order_epoch {
            order = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(run.seed, epoch)));
            order_epoch = epoch;
        }
        let at = (step % per_epoch) as usize * run.batch_size;
        let items: Vec<&TrainingExample> = order[at..(at + run.batch_size).min(n)]
            .iter()
            .map(|&i| &examples[i])
            .collect();
        let lrate = lr_schedule(step + 1, config.d_in, run.warmup_steps)?;
        let ev = evaluate_batch(config, &params, &items, &trainable, obj, run, step)?;
        if !ev.loss.total.is_finite() {
            return Err(Error::Numerical(format!(
                "step {}: non-finite loss (l1={}, l2={}, lrate={lrate:e})",
                step + 1,
                ev.loss.l1_rmse,
                ev.loss.l2_xent
            )));
        }
        adam_step(&mut params, &ev.grads, &mut opt, lrate)?;
        let rec = StepRecord {
            step: opt.step,
            epoch,
            lrate,
            l1: ev.loss.l1_rmse,
            l2: ev.loss.l2_xent,
            total: ev.loss.total,
            wall_time: clock.elapsed().as_secs_f64(),
        };
        sink.log(&rec)?;
        records.push(rec);
        if run.checkpoint_every > 0 && opt.step % run.checkpoint_every == 0 {
            sink.checkpoint(&format!("checkpoint-{:08}.whlt", opt.step), &snapshot(&params, &opt))?;
        }
    }
    let checkpoint = snapshot(&params, &opt);
    sink.checkpoint("model.whlt", &checkpoint)?;
    Ok(TrainOutcome {
        checkpoint,
        records,
    })
}

/// Trains the full model on `examples`.
///
/// With the auxiliary decoder enabled the objective is the reconstruction
/// loss plus the triphone loss; otherwise the triphone term is 0. When
/// `out_dir` is given, a `metrics.jsonl` log, periodic checkpoints and a
/// final `model.whlt` are written there.
pub fn train(
    examples: &[TrainingExample],
    config: &ModelConfig,
    run: &TrainRunConfig,
    start: StartFrom,
    out_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    run_loop(examples, config, run, start, out_dir, Objective::Joint)
}

/// Optimises only the triphone loss, updating the encoder layers up to the
/// tap layer and the auxiliary decoder. Target frames are ignored.
pub fn pretrain_aux(
    examples: &[TrainingExample],
    config: &ModelConfig,
    run: &TrainRunConfig,
    start: StartFrom,
    out_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    if !config.has_aux() {
        return Err(Error::Config(
            "pretraining needs the auxiliary decoder (triphone_vocab > 0)".into(),
        ));
    }
    run_loop(examples, config, run, start, out_dir, Objective::AuxOnly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    pub(crate) fn toy_corpus(n: usize, d: usize, p: usize, seed: u64) -> Vec<TrainingExample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let src = Tensor::from_fn(&[3, d], |_| rng.gen_range(-1.0..1.0));
                let tgt = src.map(|v| 0.5 * v + 0.1);
                let labels = (p > 0).then(|| (0..3).map(|_| rng.gen_range(0..p)).collect());
                TrainingExample {
                    src,
                    tgt,
                    labels,
                    utterance: format!("u{i}"),
                    chunk_index: 0,
                }
            })
            .collect()
    }

    fn small(p: usize) -> ModelConfig {
        let mut c = ModelConfig::tiny(8, 8, p);
        c.init_seed = 1;
        c
    }

    fn run(steps: u64) -> TrainRunConfig {
        TrainRunConfig {
            batch_size: 20,
            max_steps: Some(steps),
            warmup_steps: 10,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn no_aux_logs_zero_xent() {
        let data = toy_corpus(12, 8, 0, 1);
        let out = train(&data, &small(0), &run(3), StartFrom::Scratch, None).unwrap();
        assert_eq!(out.records.len(), 3);
        for r in &out.records {
            assert_eq!(r.l2, 0.0);
            assert_eq!(r.total, r.l1);
        }
    }

    #[test]
    fn deterministic_and_threaded_agree() {
        let data = toy_corpus(40, 8, 5, 2);
        let a = train(&data, &small(5), &run(4), StartFrom::Scratch, None).unwrap();
        let b = train(&data, &small(5), &run(4), StartFrom::Scratch, None).unwrap();
        assert_eq!(a.checkpoint.to_bytes().unwrap(), b.checkpoint.to_bytes().unwrap());
        let mut r = run(4);
        r.deterministic = false;
        let c = train(&data, &small(5), &r, StartFrom::Scratch, None).unwrap();
        assert_eq!(a.checkpoint.params, c.checkpoint.params);
        for (x, y) in a.records.iter().zip(&c.records) {
            assert_eq!(x.total, y.total);
            assert_eq!(x.total, x.l1 + x.l2);
        }
    }

    #[test]
    fn resume_continues_bit_exactly() {
        let data = toy_corpus(30, 8, 5, 3);
        let full = train(&data, &small(5), &run(6), StartFrom::Scratch, None).unwrap();
        let half = train(&data, &small(5), &run(3), StartFrom::Scratch, None).unwrap();
        let ck = Checkpoint::from_bytes(Path::new("m"), &half.checkpoint.to_bytes().unwrap()).unwrap();
        let rest = train(&data, &small(5), &run(6), StartFrom::Resume(ck), None).unwrap();
        assert_eq!(rest.records.len(), 3);
        assert_eq!(rest.records[0].total, full.records[3].total);
        assert_eq!(rest.checkpoint.params, full.checkpoint.params);
    }

    #[test]
    fn contract_errors() {
        let data = toy_corpus(4, 8, 0, 4);
        assert!(matches!(
            train(&[], &small(0), &run(1), StartFrom::Scratch, None),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            train(&data, &small(5), &run(1), StartFrom::Scratch, None),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            pretrain_aux(&data, &small(0), &run(1), StartFrom::Scratch, None),
            Err(Error::Config(_))
        ));
        let wide = ModelConfig::tiny(16, 16, 0);
        assert!(matches!(
            train(&data, &wide, &run(1), StartFrom::Scratch, None),
            Err(Error::Config(_))
        ));
        let mut bad = toy_corpus(4, 8, 5, 4);
        bad[2].labels = Some(vec![0, 7, 1]);
        assert!(matches!(
            train(&bad, &small(5), &run(1), StartFrom::Scratch, None),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn pretraining_touches_only_lower_encoder_and_aux() {
        let data = toy_corpus(16, 8, 5, 6);
        let c = small(5);
        let init = ModelParams::init(&c).unwrap();
        let out = pretrain_aux(&data, &c, &run(5), StartFrom::Scratch, None).unwrap();
        let p = &out.checkpoint.params;
        for (name, t) in init.iter() {
            let moved = p.get(name).unwrap() != t;
            let expect = name.starts_with("aux") || name.starts_with("enc.0.");
            // biases of an untouched layer may legitimately stay put, weights may not
            if name.ends_with(".w_q") || name.ends_with(".w1") || name.ends_with(".w") {
                assert_eq!(moved, expect, "{name}");
            } else if !expect {
                assert!(!moved, "{name}");
            }
        }
        for r in &out.records {
            assert_eq!(r.l1, 0.0);
        }
    }

    #[test]
    fn metrics_log_and_checkpoints_written() {
        let dir = tempfile::tempdir().unwrap();
        let data = toy_corpus(10, 8, 0, 7);
        let mut r = run(4);
        r.checkpoint_every = 2;
        train(&data, &small(0), &r, StartFrom::Scratch, Some(dir.path())).unwrap();
        let log = std::fs::read_to_string(dir.path().join("metrics.jsonl")).unwrap();
        let recs: Vec<StepRecord> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(recs.iter().map(|r| r.step).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert!(dir.path().join("checkpoint-00000002.whlt").exists());
        assert!(dir.path().join("checkpoint-00000004.whlt").exists());
        let ck = Checkpoint::load(&dir.path().join("model.whlt")).unwrap();
        assert_eq!(ck.meta.step, 4);
    }
}
