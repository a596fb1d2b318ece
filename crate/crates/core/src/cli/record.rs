use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputChecksum {
    pub path: String,
    pub bytes: u64,
    /// CRC-32 of the file contents, lowercase hex.
    pub crc32: String,
}

/// Provenance written next to every command's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub versions: BTreeMap<String, String>,
    pub inputs: Vec<InputChecksum>,
}

fn checksum_file(path: &Path) -> Result<InputChecksum> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(InputChecksum {
        path: path.display().to_string(),
        bytes: bytes.len() as u64,
        crc32: format!("{:08x}", crc32fast::hash(&bytes)),
    })
}

/// Checksums the given files; directories contribute each regular file they
/// directly contain, in name order.
pub fn checksum_inputs(paths: &[PathBuf]) -> Result<Vec<InputChecksum>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file())
                .collect();
            files.sort();
            for f in files {
                out.push(checksum_file(&f)?);
            }
        } else {
            out.push(checksum_file(p)?);
        }
    }
    Ok(out)
}

impl RunRecord {
    pub fn new(command: &str, config: &ExperimentConfig, inputs: &[PathBuf]) -> Result<Self> {
        let versions = [
            ("whisperconv", env!("CARGO_PKG_VERSION")),
            ("checkpoint_format", "WHLT0001"),
            ("feature_format", "WFEA0001"),
            ("shard_format", "WEXA0001"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        Ok(Self {
            command: command.to_string(),
            seed: config.train.seed,
            config: config.clone(),
            versions,
            inputs: checksum_inputs(inputs)?,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let json = serde_json::to_string_pretty(self).expect("run record serialises");
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}
