//! The conversion network: an encoder stack, a causal main decoder and an
//! optional auxiliary triphone decoder reading an intermediate encoder layer.

mod checkpoint;
mod config;
mod params;
mod transformer;

pub use checkpoint::{Checkpoint, CheckpointMeta};
pub use config::{ModelConfig, TapPoint};
pub use params::{param_shapes, BoundParams, ModelParams};
pub use transformer::{
    causal_mask, model_infer, scaled_dot_product_attention, shift_right, AttentionOutput,
    ForwardOutput, Pass,
};
