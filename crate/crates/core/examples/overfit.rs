//! Trains a small model with the auxiliary decoder until it memorises 32
//! synthetic chunks, logging the loss curve and the final frame accuracy.
//!
//! `cargo run --release --example overfit`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whisperconv::corpus::TrainingExample;
use whisperconv::model::ModelConfig;
use whisperconv::numerics::Tensor;
use whisperconv::training::{aux_frame_accuracy, batch_loss, train, StartFrom, TrainRunConfig};

fn main() -> whisperconv::Result<()> {
    let (d, p) = (24, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let data: Vec<TrainingExample> = (0..32)
        .map(|i| {
            let src = Tensor::from_fn(&[3, d], |_| rng.gen_range(-1.0..1.0));
            let s = src.data().to_vec();
            let tgt = Tensor::from_fn(&[3, d], |j| (1.5 * s[j] + 0.3 * s[(j + 5) % (3 * d)]).sin());
            let labels = Some((0..3).map(|_| rng.gen_range(0..p)).collect());
            TrainingExample { src, tgt, labels, utterance: format!("chunk{i}"), chunk_index: 0 }
        })
        .collect();

    let mut config = ModelConfig::tiny(d, d, p);
    config.n_heads = 4;
    config.p_drop = 0.0;
    let run = TrainRunConfig {
        batch_size: 32,
        epochs: 1000,
        max_steps: Some(500),
        warmup_steps: 100,
        seed: 1,
        ..Default::default()
    };
    let out = train(&data, &config, &run, StartFrom::Scratch, None)?;
    for r in out.records.iter().filter(|r| r.step == 1 || r.step % 50 == 0) {
        println!("step {:>3}  lr {:.5}  L1 {:.4}  L2 {:.4}", r.step, r.lrate, r.l1, r.l2);
    }
    let params = &out.checkpoint.params;
    let loss = batch_loss(&config, params, &data, 1.0)?;
    println!("eval L1 {:.4}  L2 {:.4}", loss.l1_rmse, loss.l2_xent);
    println!("triphone frame accuracy {:.1}%", 100.0 * aux_frame_accuracy(&config, params, &data)?);
    Ok(())
}
