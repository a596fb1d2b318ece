use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::util::{read_file, BinReader, BinWriter};

const MAGIC: &[u8; 8] = b"WHLT0001";

/// Bookkeeping stored next to the weights.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    /// Optimizer steps taken so far.
    pub step: u64,
    /// Completed epochs.
    #[serde(default)]
    pub epoch: u64,
    pub seed: u64,
    /// Feature kind tags of the source and target sides, when known.
    #[serde(default)]
    pub src_kind: Option<String>,
    #[serde(default)]
    pub tgt_kind: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    config: ModelConfig,
    meta: CheckpointMeta,
}

/// A model snapshot: configuration, weights and named auxiliary state
/// tensors (optimizer moments). All blobs are stored as little-endian `f32`.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub meta: CheckpointMeta,
    pub params: ModelParams,
    pub state: BTreeMap<String, Tensor>,
}

fn write_blobs<'a>(w: &mut BinWriter, blobs: impl ExactSizeIterator<Item = (&'a str, &'a Tensor)>) {
    w.u32(blobs.len() as u32);
    for (name, t) in blobs {
        w.str(name);
        w.u32(t.rank() as u32);
        for &d in t.shape() {
            w.u32(d as u32);
        }
        for &v in t.data() {
            w.f32(v as f32);
        }
    }
}

fn read_blobs(r: &mut BinReader) -> Result<BTreeMap<String, Tensor>> {
    let n = r.u32()? as usize;
    let mut out = BTreeMap::new();
    for _ in 0..n {
        let name = r.str()?;
        let rank = r.u32()? as usize;
        if rank == 0 || rank > 8 {
            return Err(r.err(format!("blob {name}: implausible rank {rank}")));
        }
        let shape = (0..rank)
            .map(|_| r.u32().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let len = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        let len = len.ok_or_else(|| r.err(format!("blob {name}: shape overflow")))?;
        let data = r.f32_vec(len)?.into_iter().map(f64::from).collect();
        let t = Tensor::new(&shape, data).map_err(|e| r.err(format!("blob {name}: {e}")))?;
        if out.insert(name.clone(), t).is_some() {
            return Err(r.err(format!("duplicate blob {name}")));
        }
    }
    Ok(out)
}

impl Checkpoint {
    pub fn new(config: ModelConfig, params: ModelParams) -> Self {
        Self {
            config,
            meta: CheckpointMeta::default(),
            params,
            state: BTreeMap::new(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_string(&Header {
            config: self.config.clone(),
            meta: self.meta.clone(),
        })
        .map_err(|e| Error::Config(format!("cannot serialise checkpoint header: {e}")))?;
        let mut w = BinWriter::new(MAGIC);
        w.str(&header);
        write_blobs(&mut w, self.params.iter());
        write_blobs(&mut w, self.state.iter().map(|(k, v)| (k.as_str(), v)));
        Ok(w.finish())
    }

    pub fn from_bytes(path: &Path, bytes: &[u8]) -> Result<Self> {
        let mut r = BinReader::new(path, bytes, MAGIC)?;
        let header: Header = serde_json::from_str(&r.str()?)
            .map_err(|e| r.err(format!("bad checkpoint header: {e}")))?;
        header.config.validate()?;
        let tensors = read_blobs(&mut r)?;
        let state = read_blobs(&mut r)?;
        r.expect_end()?;
        let params = ModelParams::from_tensors(&header.config, tensors)?;
        Ok(Self {
            config: header.config,
            meta: header.meta,
            params,
            state,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(path, &read_file(path)?)
    }
}
