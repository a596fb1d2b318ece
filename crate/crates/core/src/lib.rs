//! Whispered-to-natural speech feature conversion.
//!
//! The crate bundles everything needed to train and evaluate a compact
//! transformer that maps short chunks of whispered-speech features onto the
//! matching natural-speech features:
//!
//! - [`numerics`]: tensors and reverse-mode differentiation
//! - [`model`]: encoder, decoder and the auxiliary triphone decoder
//! - [`training`]: losses, Adam with warm-up schedule, training loops
//! - [`dsp`]: WAV I/O, resampling, trimming, time stretching, STFT, MFCC
//! - [`corpus`]: parallel-corpus alignment, chunking, labels and shards
//! - [`evaluation`]: Burg formants, F0, GMM fitting, Monte-Carlo KL, WER, BLEU
//! - [`cli`]: the command layer behind the `whisperconv` binary
//!
//! The `examples/` directory next to this crate has one runnable program per
//! capability; `cargo run --example <name>` lists them.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod corpus;
pub mod dsp;
mod error;
pub mod evaluation;
pub mod model;
pub mod numerics;
pub mod synth;
pub mod training;
mod util;

pub use error::{Error, Result};
