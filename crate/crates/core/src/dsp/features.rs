use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::util::{read_file, BinReader, BinWriter};

const MAGIC: &[u8; 8] = b"WFEA0001";

/// What a feature matrix holds; fixes its width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    /// 80 mel-cepstral coefficients.
    Mfcc80,
    /// 24 smoothed spectral-envelope parameters from an external vocoder.
    Spectral24,
    /// Fundamental frequency, one value per frame.
    F0,
    /// 513 aperiodicity bands from an external vocoder.
    Aperiodic513,
    /// dB spectrogram grid of any width.
    SpecDb,
    /// Any other width (e.g. MFCC with fewer coefficients).
    Custom(usize),
}

impl FeatureKind {
    /// Fixed width of this kind, if any.
    pub fn dim(self) -> Option<usize> {
        match self {
            FeatureKind::Mfcc80 => Some(80),
            FeatureKind::Spectral24 => Some(24),
            FeatureKind::F0 => Some(1),
            FeatureKind::Aperiodic513 => Some(513),
            FeatureKind::SpecDb => None,
            FeatureKind::Custom(d) => Some(d),
        }
    }

    /// Tag stored in feature files and accepted on the command line.
    pub fn tag(self) -> String {
        match self {
            FeatureKind::Mfcc80 => "mfcc80".into(),
            FeatureKind::Spectral24 => "spec24".into(),
            FeatureKind::F0 => "f0_1".into(),
            FeatureKind::Aperiodic513 => "ap513".into(),
            FeatureKind::SpecDb => "specdb".into(),
            FeatureKind::Custom(d) => format!("raw{d}"),
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        Ok(match tag {
            "mfcc80" | "mfcc" => FeatureKind::Mfcc80,
            "spec24" | "spectral24" => FeatureKind::Spectral24,
            "f0_1" | "f0" => FeatureKind::F0,
            "ap513" | "aperiodic513" => FeatureKind::Aperiodic513,
            "specdb" => FeatureKind::SpecDb,
            t => match t.strip_prefix("raw").and_then(|d| d.parse().ok()) {
                Some(d) if d > 0 => FeatureKind::Custom(d),
                _ => return Err(Error::Parameter(format!("unknown feature kind {tag:?}"))),
            },
        })
    }

    /// Kinds computed from audio here rather than ingested from files.
    pub fn is_computed(self) -> bool {
        matches!(self, FeatureKind::Mfcc80)
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

/// A `T x d` frame matrix with framing metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSequence {
    pub kind: FeatureKind,
    /// `[T, d]`
    pub frames: Tensor,
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub sample_rate: u32,
    pub source_id: String,
}

impl FeatureSequence {
    /// Wraps frames with the default 25 ms / 10 ms framing at 16 kHz.
    pub fn new(kind: FeatureKind, frames: Tensor) -> Result<Self> {
        let s = Self {
            kind,
            frames,
            frame_ms: 25.0,
            hop_ms: 10.0,
            sample_rate: 16000,
            source_id: String::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_source(mut self, id: impl Into<String>) -> Self {
        self.source_id = id.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.rank() != 2 {
            return Err(Error::Dimension(format!(
                "feature frames must be [T, d], got {:?}",
                self.frames.shape()
            )));
        }
        if let Some(d) = self.kind.dim() {
            if self.dim() != d {
                return Err(Error::Dimension(format!(
                    "{} features must have width {d}, got {}",
                    self.kind,
                    self.dim()
                )));
            }
        }
        if !self.frames.all_finite() {
            return Err(Error::Data("feature frames contain non-finite values".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.frames.shape()[1]
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let d = self.dim();
        &self.frames.data()[t * d..(t + 1) * d]
    }

    /// Serialised feature file: magic, 8-byte kind tag, `u32` T and d,
    /// little-endian `f32` payload and trailing CRC-32.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = BinWriter::new(MAGIC);
        let mut tag = [0u8; 8];
        let t = self.kind.tag();
        tag[..t.len().min(8)].copy_from_slice(&t.as_bytes()[..t.len().min(8)]);
        w.bytes(&tag);
        w.u32(self.len() as u32);
        w.u32(self.dim() as u32);
        for &v in self.frames.data() {
            w.f32(v as f32);
        }
        w.finish()
    }

    pub fn from_bytes(path: &Path, bytes: &[u8]) -> Result<Self> {
        let mut r = BinReader::new(path, bytes, MAGIC)?;
        let raw = r.bytes(8)?;
        let tag = std::str::from_utf8(raw)
            .map_err(|_| r.err("kind tag is not ASCII"))?
            .trim_end_matches('\0');
        let kind = FeatureKind::parse(tag).map_err(|_| r.err(format!("unknown kind tag {tag:?}")))?;
        let t = r.u32()? as usize;
        let d = r.u32()? as usize;
        if t == 0 || d == 0 {
            return Err(r.err(format!("empty feature matrix {t}x{d}")));
        }
        let n = t.checked_mul(d).ok_or_else(|| r.err("size overflow"))?;
        let data = r.f32_vec(n)?.into_iter().map(f64::from).collect();
        r.expect_end()?;
        let frames = Tensor::new(&[t, d], data)?;
        let source = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let seq = Self::new(kind, frames).map_err(|e| r.err(e.to_string()))?;
        Ok(seq.with_source(source))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(path, &read_file(path)?)
    }
}
