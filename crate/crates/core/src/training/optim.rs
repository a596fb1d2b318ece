use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::Tensor;

/// Adam moment estimates and hyper-parameters.
///
/// Moments are kept rounded to `f32`, like the parameters, so a state
/// restored from a checkpoint continues bit-identically.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    /// Number of updates applied so far.
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub warmup_steps: u64,
    m: BTreeMap<String, Tensor>,
    v: BTreeMap<String, Tensor>,
}

const M_PREFIX: &str = "adam.m.";
const V_PREFIX: &str = "adam.v.";

impl OptimizerState {
    pub fn new(warmup_steps: u64) -> Self {
        Self {
            step: 0,
            beta1: 0.9,
            beta2: 0.98,
            eps: 1e-9,
            warmup_steps,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    pub fn first_moment(&self, name: &str) -> Option<&Tensor> {
        self.m.get(name)
    }

    pub fn second_moment(&self, name: &str) -> Option<&Tensor> {
        self.v.get(name)
    }

    /// Moments as named blobs for a checkpoint.
    pub fn to_blobs(&self) -> BTreeMap<String, Tensor> {
        let m = self.m.iter().map(|(k, t)| (format!("{M_PREFIX}{k}"), t.clone()));
        let v = self.v.iter().map(|(k, t)| (format!("{V_PREFIX}{k}"), t.clone()));
        m.chain(v).collect()
    }

    /// Inverse of [`to_blobs`](Self::to_blobs). Unrelated blobs are ignored.
    pub fn from_blobs(step: u64, warmup_steps: u64, blobs: &BTreeMap<String, Tensor>) -> Self {
        let mut s = Self::new(warmup_steps);
        s.step = step;
        for (k, t) in blobs {
            if let Some(name) = k.strip_prefix(M_PREFIX) {
                s.m.insert(name.to_string(), t.round_to_f32());
            } else if let Some(name) = k.strip_prefix(V_PREFIX) {
                s.v.insert(name.to_string(), t.round_to_f32());
            }
        }
        s
    }
}

/// One bias-corrected Adam update of every parameter that has a gradient.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &BTreeMap<String, Tensor>,
    state: &mut OptimizerState,
    lrate: f64,
) -> Result<()> {
    for (name, g) in grads {
        let p = params
            .get(name)
            .ok_or_else(|| Error::Data(format!("gradient for unknown parameter {name}")))?;
        p.check_same_shape(g, name)?;
        if let Some(i) = g.data().iter().position(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite gradient in parameter {name} at element {i}"
            )));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (name, g) in grads {
        let m = state
            .m
            .entry(name.clone())
            .or_insert_with(|| Tensor::zeros(g.shape()));
        let v = state
            .v
            .entry(name.clone())
            .or_insert_with(|| Tensor::zeros(g.shape()));
        let p = params.get_mut(name).expect("checked above");
        for (((pi, mi), vi), &gi) in p
            .data_mut()
            .iter_mut()
            .zip(m.data_mut())
            .zip(v.data_mut())
            .zip(g.data())
        {
            *mi = (b1 * *mi + (1.0 - b1) * gi) as f32 as f64;
            *vi = (b2 * *vi + (1.0 - b2) * gi * gi) as f32 as f64;
            let update = lrate * (*mi / c1) / ((*vi / c2).sqrt() + eps);
            *pi = (*pi - update) as f32 as f64;
        }
    }
    Ok(())
}
