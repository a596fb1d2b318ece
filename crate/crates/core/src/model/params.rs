use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use crate::error::{Error, Result};
use crate::numerics::{Graph, Tensor, Var};

/// Named parameter shapes for `config`, in construction order.
pub fn param_shapes(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let d = config.d_in;
    let mut out = Vec::new();
    let attn = |out: &mut Vec<(String, Vec<usize>)>, p: &str| {
        for m in ["q", "k", "v", "o"] {
            out.push((format!("{p}.w_{m}"), vec![d, d]));
            out.push((format!("{p}.b_{m}"), vec![d]));
        }
    };
    let norm = |out: &mut Vec<(String, Vec<usize>)>, p: &str| {
        out.push((format!("{p}.gamma"), vec![d]));
        out.push((format!("{p}.beta"), vec![d]));
    };
    let ff = |out: &mut Vec<(String, Vec<usize>)>, p: &str| {
        out.push((format!("{p}.w1"), vec![d, config.d_ff]));
        out.push((format!("{p}.b1"), vec![config.d_ff]));
        out.push((format!("{p}.w2"), vec![config.d_ff, d]));
        out.push((format!("{p}.b2"), vec![d]));
    };
    for i in 0..config.n_enc_layers {
        attn(&mut out, &format!("enc.{i}.self_attn"));
        norm(&mut out, &format!("enc.{i}.norm1"));
        ff(&mut out, &format!("enc.{i}.ff"));
        norm(&mut out, &format!("enc.{i}.norm2"));
    }
    let decoder_layer = |out: &mut Vec<(String, Vec<usize>)>, p: &str| {
        attn(out, &format!("{p}.self_attn"));
        norm(out, &format!("{p}.norm1"));
        attn(out, &format!("{p}.cross_attn"));
        norm(out, &format!("{p}.norm2"));
        ff(out, &format!("{p}.ff"));
        norm(out, &format!("{p}.norm3"));
    };
    if config.d_out != d {
        out.push(("dec_in_proj.w".into(), vec![config.d_out, d]));
        out.push(("dec_in_proj.b".into(), vec![d]));
    }
    for i in 0..config.n_dec_layers {
        decoder_layer(&mut out, &format!("dec.{i}"));
    }
    out.push(("out.w".into(), vec![d, config.d_out]));
    out.push(("out.b".into(), vec![config.d_out]));
    if config.has_aux() {
        for i in 0..config.n_aux_layers {
            decoder_layer(&mut out, &format!("aux.{i}"));
        }
        out.push(("aux_out.w".into(), vec![d, config.triphone_vocab]));
        out.push(("aux_out.b".into(), vec![config.triphone_vocab]));
    }
    out
}

/// Learned weights of one conversion model.
///
/// Values are stored rounded to `f32` so checkpoints round-trip bit-exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    tensors: BTreeMap<String, Tensor>,
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases and shifts, unit norm scales.
    pub fn init(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let mut tensors = BTreeMap::new();
        for (name, shape) in param_shapes(config) {
            let t = if name.ends_with(".gamma") {
                Tensor::ones(&shape)
            } else if shape.len() == 2 {
                let limit = (6.0 / (shape[0] + shape[1]) as f64).sqrt();
                Tensor::from_fn(&shape, |_| rng.gen_range(-limit..limit)).round_to_f32()
            } else {
                Tensor::zeros(&shape)
            };
            tensors.insert(name, t);
        }
        Ok(Self { tensors })
    }

    /// Builds params from named tensors, checking names and shapes against `config`.
    pub fn from_tensors(config: &ModelConfig, mut tensors: BTreeMap<String, Tensor>) -> Result<Self> {
        let expected = param_shapes(config);
        if tensors.len() != expected.len() {
            return Err(Error::Dimension(format!(
                "expected {} parameter tensors, got {}",
                expected.len(),
                tensors.len()
            )));
        }
        for (name, shape) in &expected {
            let t = tensors
                .get_mut(name)
                .ok_or_else(|| Error::Dimension(format!("missing parameter {name}")))?;
            if t.shape() != shape.as_slice() {
                return Err(Error::Dimension(format!(
                    "parameter {name} has shape {:?}, config implies {shape:?}",
                    t.shape()
                )));
            }
            *t = t.round_to_f32();
        }
        Ok(Self { tensors })
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.get_mut(name)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total scalar parameter count.
    pub fn count(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    /// Records every parameter on `g`; names for which `trainable` returns
    /// true become gradient-carrying leaves, the rest constants.
    pub fn bind(&self, g: &mut Graph, trainable: impl Fn(&str) -> bool) -> BoundParams {
        let vars = self
            .tensors
            .iter()
            .map(|(name, t)| {
                let v = if trainable(name) {
                    g.param(t.clone())
                } else {
                    g.constant(t.clone())
                };
                (name.clone(), v)
            })
            .collect();
        BoundParams { vars }
    }

    /// Overwrites one tensor, keeping its shape and rounding to `f32`.
    pub fn set(&mut self, name: &str, value: Tensor) -> Result<()> {
        let slot = self
            .tensors
            .get_mut(name)
            .ok_or_else(|| Error::Data(format!("unknown parameter {name}")))?;
        slot.check_same_shape(&value, name)?;
        *slot = value.round_to_f32();
        Ok(())
    }
}

/// Graph handles for every parameter of one forward pass.
#[derive(Debug, Clone)]
pub struct BoundParams {
    vars: HashMap<String, Var>,
}

impl BoundParams {
    /// Wraps existing graph handles, e.g. leaves created by a gradient check.
    pub fn from_vars(vars: impl IntoIterator<Item = (String, Var)>) -> Self {
        Self {
            vars: vars.into_iter().collect(),
        }
    }

    pub fn get(&self, name: &str) -> Result<Var> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| Error::Config(format!("model has no parameter {name}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Var)> {
        self.vars.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_are_a_function_of_config() {
        let c = ModelConfig::tiny(8, 8, 5);
        let p1 = ModelParams::init(&c).unwrap();
        let p2 = ModelParams::init(&c).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(p1.len(), param_shapes(&c).len());
        for (name, shape) in param_shapes(&c) {
            assert_eq!(p1.get(&name).unwrap().shape(), shape.as_slice(), "{name}");
        }
        // no projection when widths agree, no aux head when P = 0
        assert!(p1.get("dec_in_proj.w").is_none());
        let p0 = ModelParams::init(&ModelConfig::tiny(8, 8, 0)).unwrap();
        assert!(p0.get("aux_out.w").is_none());
        assert!(p0.names().all(|n| !n.starts_with("aux")));
        let pf0 = ModelParams::init(&ModelConfig::tiny(8, 1, 0)).unwrap();
        assert_eq!(pf0.get("dec_in_proj.w").unwrap().shape(), &[1, 8]);
    }

    #[test]
    fn init_values_are_f32_representable() {
        let p = ModelParams::init(&ModelConfig::tiny(8, 8, 5)).unwrap();
        for (_, t) in p.iter() {
            assert_eq!(t, &t.round_to_f32());
        }
    }

    #[test]
    fn from_tensors_checks_shapes() {
        let c = ModelConfig::tiny(8, 8, 5);
        let p = ModelParams::init(&c).unwrap();
        let mut map: BTreeMap<String, Tensor> =
            p.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        ModelParams::from_tensors(&c, map.clone()).unwrap();
        map.insert("out.b".into(), Tensor::zeros(&[3]));
        assert!(ModelParams::from_tensors(&c, map).is_err());
    }
}
