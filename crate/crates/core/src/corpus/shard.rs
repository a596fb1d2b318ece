use std::path::Path;

use super::example::TrainingExample;
use crate::dsp::FeatureKind;
use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::util::{read_file, BinReader, BinWriter};

const MAGIC: &[u8; 8] = b"WEXA0001";

/// Header shared by every example in a shard.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShardHeader {
    pub src_kind: FeatureKind,
    pub tgt_kind: FeatureKind,
    pub k: usize,
    pub d_in: usize,
    pub d_out: usize,
    pub labelled: bool,
}

impl ShardHeader {
    fn check(&self, ex: &TrainingExample) -> Result<()> {
        if ex.k() != self.k || ex.d_in() != self.d_in || ex.d_out() != self.d_out {
            return Err(Error::Dimension(format!(
                "example {}#{} is {}x{}->{} but the shard holds {}x{}->{}",
                ex.utterance,
                ex.chunk_index,
                ex.k(),
                ex.d_in(),
                ex.d_out(),
                self.k,
                self.d_in,
                self.d_out
            )));
        }
        if ex.labels.is_some() != self.labelled {
            return Err(Error::Data(format!(
                "example {}#{}: labels must be present on all examples of a shard or none",
                ex.utterance, ex.chunk_index
            )));
        }
        Ok(())
    }
}

/// Encodes examples as one checksummed shard. Values are stored as `f32`.
pub fn shard_to_bytes(header: &ShardHeader, examples: &[TrainingExample]) -> Result<Vec<u8>> {
    let mut w = BinWriter::new(MAGIC);
    w.str(&header.src_kind.tag());
    w.str(&header.tgt_kind.tag());
    for v in [header.k, header.d_in, header.d_out] {
        w.u32(v as u32);
    }
    w.u8(header.labelled as u8);
    w.u32(examples.len() as u32);
    for ex in examples {
        header.check(ex)?;
        w.str(&ex.utterance);
        w.u32(ex.chunk_index);
        if let Some(l) = &ex.labels {
            for &id in l {
                w.u32(id as u32);
            }
        }
        for &v in ex.src.data().iter().chain(ex.tgt.data()) {
            w.f32(v as f32);
        }
    }
    Ok(w.finish())
}

pub fn shard_from_bytes(path: &Path, bytes: &[u8]) -> Result<(ShardHeader, Vec<TrainingExample>)> {
    let mut r = BinReader::new(path, bytes, MAGIC)?;
    let kind = |r: &mut BinReader| -> Result<FeatureKind> {
        let tag = r.str()?;
        FeatureKind::parse(&tag).map_err(|_| r.err(format!("unknown kind tag {tag:?}")))
    };
    let src_kind = kind(&mut r)?;
    let tgt_kind = kind(&mut r)?;
    let k = r.u32()? as usize;
    let d_in = r.u32()? as usize;
    let d_out = r.u32()? as usize;
    let labelled = match r.u8()? {
        0 => false,
        1 => true,
        b => return Err(r.err(format!("bad label flag {b}"))),
    };
    if k == 0 || d_in == 0 || d_out == 0 {
        return Err(r.err(format!("degenerate shard geometry k={k} d_in={d_in} d_out={d_out}")));
    }
    let header = ShardHeader {
        src_kind,
        tgt_kind,
        k,
        d_in,
        d_out,
        labelled,
    };
    let count = r.u32()? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let utterance = r.str()?;
        let chunk_index = r.u32()?;
        let labels = if labelled {
            Some((0..k).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?)
        } else {
            None
        };
        let to_f64 = |v: Vec<f32>| v.into_iter().map(f64::from).collect();
        let src = Tensor::new(&[k, d_in], to_f64(r.f32_vec(k * d_in)?))?;
        let tgt = Tensor::new(&[k, d_out], to_f64(r.f32_vec(k * d_out)?))?;
        out.push(TrainingExample {
            src,
            tgt,
            labels,
            utterance,
            chunk_index,
        });
    }
    r.expect_end()?;
    Ok((header, out))
}

pub fn write_shard(path: &Path, header: &ShardHeader, examples: &[TrainingExample]) -> Result<()> {
    std::fs::write(path, shard_to_bytes(header, examples)?).map_err(|e| Error::io(path, e))
}

pub fn read_shard(path: &Path) -> Result<(ShardHeader, Vec<TrainingExample>)> {
    shard_from_bytes(path, &read_file(path)?)
}
