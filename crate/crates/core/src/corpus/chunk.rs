use super::example::TrainingExample;
use crate::dsp::FeatureSequence;
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Cuts aligned feature sequences into non-overlapping `k`-frame chunks.
///
/// Both sequences may differ by at most one frame; the shorter length
/// bounds the chunking and a trailing remainder below `k` frames is
/// dropped. Labels, when given, index source frames.
pub fn chunk(
    src: &FeatureSequence,
    tgt: &FeatureSequence,
    labels: Option<&[usize]>,
    k: usize,
    utterance: &str,
) -> Result<Vec<TrainingExample>> {
    if k == 0 {
        return Err(Error::Parameter("chunk length k must be at least 1".into()));
    }
    let (ts, tt) = (src.len(), tgt.len());
    if ts.abs_diff(tt) > 1 {
        return Err(Error::Data(format!(
            "{utterance}: source has {ts} frames, target {tt}; aligned pairs may differ by at most 1"
        )));
    }
    let t = ts.min(tt);
    if let Some(l) = labels {
        if l.len().abs_diff(ts) > 1 || l.len() < t {
            return Err(Error::Data(format!(
                "{utterance}: {} labels for {ts} source frames",
                l.len()
            )));
        }
    }
    let (di, dout) = (src.dim(), tgt.dim());
    (0..t / k)
        .map(|c| {
            let rows = c * k..(c + 1) * k;
            let s = src.frames.data()[rows.start * di..rows.end * di].to_vec();
            let g = tgt.frames.data()[rows.start * dout..rows.end * dout].to_vec();
            Ok(TrainingExample {
                src: Tensor::new(&[k, di], s)?,
                tgt: Tensor::new(&[k, dout], g)?,
                labels: labels.map(|l| l[rows].to_vec()),
                utterance: utterance.to_string(),
                chunk_index: c as u32,
            })
        })
        .collect()
}
