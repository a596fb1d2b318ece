//! Checks tape gradients of the full training objective against central
//! finite differences and prints the attention maps of one forward pass.
//!
//! `cargo run --release --example gradient_check`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whisperconv::model::{BoundParams, ModelConfig, ModelParams, Pass};
use whisperconv::numerics::{grad_check_many, Graph, Tensor};
use whisperconv::training::{model_loss, Batch};

fn main() -> whisperconv::Result<()> {
    let config = ModelConfig::tiny(8, 8, 5);
    let params = ModelParams::init(&config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let batch = Batch {
        src: Tensor::from_fn(&[2, 3, 8], |_| rng.gen_range(-1.0..1.0)),
        tgt: Tensor::from_fn(&[2, 3, 8], |_| rng.gen_range(-1.0..1.0)),
        labels: Some(vec![0, 1, 2, 3, 4, 0]),
    };

    // Nudge every weight off the zero-bias initialisation first.
    let (names, inputs): (Vec<String>, Vec<Tensor>) = params
        .iter()
        .map(|(n, t)| (n.to_string(), Tensor::from_fn(t.shape(), |i| t.data()[i] + rng.gen_range(-0.1..0.1))))
        .unzip();
    let err = grad_check_many(
        |g, vars| {
            let bound = BoundParams::from_vars(names.iter().cloned().zip(vars.iter().copied()));
            let mut pass = Pass::new(g, &bound, &config, false, 0);
            Ok(model_loss(&mut pass, &batch, 1.0)?.total)
        },
        &inputs,
        1e-5,
    )?;
    println!("{} parameters, max relative gradient error {err:.3e}", params.count());

    let mut g = Graph::new();
    let bound = params.bind(&mut g, |_| false);
    let mut pass = Pass::new(&mut g, &bound, &config, false, 0).capture_attention();
    let x = pass.g.constant(batch.src.clone());
    let prev = pass.g.constant(whisperconv::model::shift_right(&batch.tgt)?);
    pass.forward(x, prev)?;
    let maps = pass.attention.take().unwrap_or_default();
    println!("{} attention maps captured; first map, batch 0, head 0:", maps.len());
    for row in g.value(maps[0]).data()[..9].chunks(3) {
        println!("  {:.3} {:.3} {:.3}", row[0], row[1], row[2]);
    }
    Ok(())
}
