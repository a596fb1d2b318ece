use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where along the tap layer's feed-forward sub-layer the auxiliary decoder
/// reads the encoder's residual stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TapPoint {
    /// After the sub-layer's layer norm, i.e. the layer's output.
    #[default]
    AfterNorm,
    /// The residual sum before that layer norm.
    BeforeNorm,
}

/// Architecture hyper-parameters of one conversion model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Input feature width; also the residual width of every stack.
    pub d_in: usize,
    /// Output feature width.
    pub d_out: usize,
    /// Frames per chunk.
    pub k: usize,
    pub n_enc_layers: usize,
    pub n_dec_layers: usize,
    pub n_aux_layers: usize,
    /// 1-based encoder layer feeding the auxiliary decoder.
    pub tap_layer: usize,
    #[serde(default)]
    pub tap_point: TapPoint,
    pub n_heads: usize,
    pub d_ff: usize,
    pub p_drop: f64,
    /// Triphone vocabulary size; 0 disables the auxiliary decoder.
    pub triphone_vocab: usize,
    pub layer_norm_eps: f64,
    pub init_seed: u64,
}

impl ModelConfig {
    /// Full-size configuration: 6 encoder and 6 decoder layers, a 3-layer
    /// auxiliary decoder on encoder layer 3, 8 heads, chunks of 3 frames.
    pub fn new(d_in: usize, d_out: usize, triphone_vocab: usize) -> Self {
        Self {
            d_in,
            d_out,
            k: 3,
            n_enc_layers: 6,
            n_dec_layers: 6,
            n_aux_layers: 3,
            tap_layer: 3,
            tap_point: TapPoint::AfterNorm,
            n_heads: 8,
            d_ff: 4 * d_in,
            p_drop: 0.1,
            triphone_vocab,
            layer_norm_eps: 1e-6,
            init_seed: 0,
        }
    }

    /// A small configuration for fast experiments and tests.
    pub fn tiny(d_in: usize, d_out: usize, triphone_vocab: usize) -> Self {
        Self {
            n_enc_layers: 2,
            n_dec_layers: 2,
            n_aux_layers: 1,
            tap_layer: 1,
            n_heads: 2,
            ..Self::new(d_in, d_out, triphone_vocab)
        }
    }

    pub fn has_aux(&self) -> bool {
        self.triphone_vocab > 0
    }

    pub fn d_head(&self) -> usize {
        self.d_in / self.n_heads
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.d_in == 0 || self.d_out == 0 || self.d_ff == 0 {
            return bad(format!(
                "feature and feed-forward widths must be positive (d_in={}, d_out={}, d_ff={})",
                self.d_in, self.d_out, self.d_ff
            ));
        }
        if self.n_heads == 0 || !self.d_in.is_multiple_of(self.n_heads) {
            return bad(format!(
                "d_in={} must be divisible by n_heads={}",
                self.d_in, self.n_heads
            ));
        }
        if self.k == 0 || self.n_enc_layers == 0 || self.n_dec_layers == 0 || self.n_aux_layers == 0
        {
            return bad("k and all layer counts must be at least 1".into());
        }
        if self.tap_layer == 0 || self.tap_layer > self.n_enc_layers {
            return bad(format!(
                "tap_layer={} must lie in [1, {}]",
                self.tap_layer, self.n_enc_layers
            ));
        }
        if !(0.0..1.0).contains(&self.p_drop) {
            return bad(format!("p_drop={} must lie in [0, 1)", self.p_drop));
        }
        if !(self.layer_norm_eps > 0.0) {
            return bad(format!("layer_norm_eps={} must be > 0", self.layer_norm_eps));
        }
        Ok(())
    }
}
