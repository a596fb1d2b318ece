//! Parallel-corpus assembly: alignment, chunking, labels and shards.

mod align;
mod build;
mod chunk;
mod example;
mod manifest;
mod shard;
mod vocab;

pub use align::{align_pair, AlignedPair, Stretched, TARGET_RATE};
pub use build::{
    build_dataset, load_dataset, prepare_waveform, waveform_features, Dataset, DatasetSpec, DatasetStats, Direction,
    Rejection, SHARD_SIZE,
};
pub use chunk::chunk;
pub use example::{stack, TrainingExample};
pub use manifest::{Manifest, UtterancePair};
pub use shard::{read_shard, shard_from_bytes, shard_to_bytes, write_shard, ShardHeader};
pub use vocab::{parse_labels, read_labels, TriphoneVocab};
