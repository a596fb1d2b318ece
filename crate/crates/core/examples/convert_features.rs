//! Trains a small model on synthetic chunks, saves it, and converts an
//! unseen feature sequence whose length is not a multiple of the chunk size.
//!
//! `cargo run --release --example convert_features [OUT_DIR]`

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whisperconv::cli::{cmd_convert, preset};
use whisperconv::corpus::TrainingExample;
use whisperconv::dsp::{FeatureKind, FeatureSequence};
use whisperconv::model::ModelConfig;
use whisperconv::numerics::Tensor;
use whisperconv::training::{train, StartFrom, TrainRunConfig};

fn main() -> whisperconv::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("whisperconv-convert"));
    let d = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    // Source frames drift slowly, like real speech features, and are
    // standardised (zero mean, unit variance). Each target frame is a
    // rotated, scaled copy of its source frame.
    let mut frames = |t: usize| {
        let phase: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        let rate: Vec<f64> = (0..d).map(|_| rng.gen_range(0.02..0.2)).collect();
        let mut x = Tensor::from_fn(&[t, d], |i| (phase[i % d] + rate[i % d] * (i / d) as f64).sin());
        for row in x.data_mut().chunks_mut(d) {
            let m = row.iter().sum::<f64>() / d as f64;
            let sd = (row.iter().map(|v| (v - m).powi(2)).sum::<f64>() / d as f64).sqrt();
            row.iter_mut().for_each(|v| *v = (*v - m) / sd);
        }
        x
    };
    let target = |x: &Tensor| Tensor::from_fn(x.shape(), |i| 0.8 * x.data()[i - i % d + (i + 1) % d] + 0.1);
    let data: Vec<TrainingExample> = (0..512)
        .map(|i| {
            let src = frames(3);
            let tgt = target(&src);
            TrainingExample { src, tgt, labels: None, utterance: format!("c{i}"), chunk_index: 0 }
        })
        .collect();
    let mut config = ModelConfig::tiny(d, d, 0);
    config.n_heads = 3;
    config.p_drop = 0.0;
    let run = TrainRunConfig { batch_size: 32, epochs: 1000, max_steps: Some(1000), warmup_steps: 100, ..Default::default() };
    let result = train(&data, &config, &run, StartFrom::Scratch, Some(&out))?;
    let (first, last) = (&result.records[0], result.records.last().unwrap());
    println!("training loss (RMSE summed over chunk frames) {:.4} -> {:.4} over {} steps", first.l1, last.l1, last.step);
    let mut ck = result.checkpoint;
    ck.meta.src_kind = Some(FeatureKind::Custom(d).tag());
    ck.meta.tgt_kind = Some(FeatureKind::Custom(d).tag());
    ck.save(&out.join("model.whlt"))?;

    let input = FeatureSequence::new(FeatureKind::Custom(d), frames(40))?;
    input.save(&out.join("input.wfea"))?;
    let y = cmd_convert(&out.join("model.whlt"), &out.join("input.wfea"), &out.join("output.wfea"), &preset("W1")?)?;
    let truth = target(&input.frames);
    let err = y.frames.data().iter().zip(truth.data()).map(|(o, t)| (o - t).powi(2)).sum::<f64>() / truth.len() as f64;
    println!("converted {} frames (input {}), RMSE against the true mapping {:.4} (predicting the mean scores 0.8)", y.len(), input.len(), err.sqrt());
    println!("outputs in {}", out.display());
    Ok(())
}
