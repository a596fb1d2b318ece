use crate::error::Result;
use crate::numerics::{Graph, Tensor};

/// Per-step loss values. `total` is the quantity that was differentiated.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub l1_rmse: f64,
    pub l2_xent: f64,
    pub total: f64,
}

impl LossBreakdown {
    /// Combines the two terms; a unit weight adds them directly so the
    /// result is bit-identical to `l1 + l2`.
    pub fn new(l1_rmse: f64, l2_xent: f64, aux_weight: f64) -> Self {
        let total = if aux_weight == 1.0 {
            l1_rmse + l2_xent
        } else {
            l1_rmse + aux_weight * l2_xent
        };
        Self {
            l1_rmse,
            l2_xent,
            total,
        }
    }
}

/// Frame-wise RMS error summed over the `k` frames of each chunk and
/// averaged over the batch. Inputs are `[B, k, n]`.
pub fn rmse_loss(y_hat: &Tensor, target: &Tensor) -> Result<f64> {
    let mut g = Graph::new();
    let y = g.constant(y_hat.clone());
    let l = g.rmse_loss(y, target)?;
    g.value(l).item()
}

/// Cross-entropy of `[B, k, P]` logits against `B * k` frame labels,
/// summed over frames and averaged over the batch.
pub fn triphone_xent_loss(logits: &Tensor, labels: &[usize]) -> Result<f64> {
    let mut g = Graph::new();
    let x = g.constant(logits.clone());
    let l = g.cross_entropy(x, labels)?;
    g.value(l).item()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::grad_check;
    use crate::Error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_tensor(seed: u64, shape: &[usize]) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn rmse_hand_cases() {
        let t = rand_tensor(1, &[2, 3, 4]);
        assert_eq!(rmse_loss(&t, &t).unwrap(), 0.0);
        let z = Tensor::zeros(&[1, 1, 4]);
        assert!((rmse_loss(&Tensor::ones(&[1, 1, 4]), &z).unwrap() - 1.0).abs() < 1e-15);
        let c = -0.37;
        let shifted = t.map(|v| v + c);
        assert!((rmse_loss(&shifted, &t).unwrap() - 3.0 * c.abs()).abs() < 1e-12);
        assert!(matches!(
            rmse_loss(&t, &Tensor::zeros(&[2, 3, 5])),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn xent_hand_cases() {
        let p = 7;
        let l = triphone_xent_loss(&Tensor::zeros(&[2, 3, p]), &[0, 1, 2, 3, 4, 5]).unwrap();
        assert!((l - 3.0 * (p as f64).ln()).abs() < 1e-10);

        let labels = [2, 0, 1];
        let sat = Tensor::from_fn(&[1, 3, 3], |i| if i % 3 == labels[i / 3] { 1e4 } else { 0.0 });
        assert!(triphone_xent_loss(&sat, &labels).unwrap() < 1e-12);

        let x = rand_tensor(4, &[2, 3, 5]);
        let lab = [4, 0, 2, 2, 1, 3];
        let mut expect = 0.0;
        for (f, row) in x.data().chunks(5).enumerate() {
            let z: f64 = row.iter().map(|v| v.exp()).sum();
            expect -= (row[lab[f]].exp() / z).ln();
        }
        expect /= 2.0;
        assert!((triphone_xent_loss(&x, &lab).unwrap() - expect).abs() < 1e-10);

        match triphone_xent_loss(&x, &[0, 0, 0, 0, 9, 0]) {
            Err(Error::Data(m)) => assert!(m.contains("frame 4"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn loss_gradients_pass_grad_check() {
        let t = rand_tensor(2, &[2, 3, 4]);
        let e = grad_check(|g, y| g.rmse_loss(y, &t), &rand_tensor(3, &[2, 3, 4]), 1e-5).unwrap();
        assert!(e < 1e-4, "{e}");
        let lab = [1, 0, 3, 2, 2, 0];
        let e = grad_check(|g, x| g.cross_entropy(x, &lab), &rand_tensor(5, &[2, 3, 4]), 1e-5)
            .unwrap();
        assert!(e < 1e-4, "{e}");
    }

    #[test]
    fn breakdown_total_is_exact_sum() {
        let b = LossBreakdown::new(0.1, 0.2, 1.0);
        assert_eq!(b.total, 0.1 + 0.2);
        assert_eq!(LossBreakdown::new(0.5, 0.0, 1.0).total, 0.5);
        assert_eq!(LossBreakdown::new(1.0, 2.0, 0.5).total, 2.0);
    }
}
