//! Dense tensors and a tape-based reverse-mode differentiator.
//!
//! All arithmetic is `f64`. Model parameters are stored rounded to `f32`
//! (see [`crate::model::ModelParams`]) but every forward and backward pass
//! runs at full 64-bit precision.

mod gradcheck;
mod graph;
mod tensor;

pub use gradcheck::{grad_check, grad_check_many};
pub use graph::{Gradients, Graph, Var, RMSE_MSE_FLOOR};
pub use tensor::Tensor;
