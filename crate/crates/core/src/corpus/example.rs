use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// One aligned chunk: `k` source frames, the matching `k` target frames and
/// optionally the source-side triphone id of every frame.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingExample {
    /// `[k, d_in]`
    pub src: Tensor,
    /// `[k, d_out]`
    pub tgt: Tensor,
    pub labels: Option<Vec<usize>>,
    pub utterance: String,
    pub chunk_index: u32,
}

impl TrainingExample {
    pub fn k(&self) -> usize {
        self.src.shape()[0]
    }

    pub fn d_in(&self) -> usize {
        self.src.shape()[1]
    }

    pub fn d_out(&self) -> usize {
        self.tgt.shape()[1]
    }

    /// Checks shapes, finiteness and label range.
    pub fn validate(&self, vocab: Option<usize>) -> Result<()> {
        let bad = |m: String| Err(Error::Data(format!("{}#{}: {m}", self.utterance, self.chunk_index)));
        if self.src.rank() != 2 || self.tgt.rank() != 2 || self.src.shape()[0] != self.tgt.shape()[0] {
            return bad(format!(
                "source {:?} and target {:?} must be [k, d] with equal k",
                self.src.shape(),
                self.tgt.shape()
            ));
        }
        if !self.src.all_finite() || !self.tgt.all_finite() {
            return bad("non-finite feature value".into());
        }
        if let Some(l) = &self.labels {
            if l.len() != self.k() {
                return bad(format!("{} labels for {} frames", l.len(), self.k()));
            }
            if let (Some(p), Some(&x)) = (vocab, l.iter().max()) {
                if x >= p {
                    return bad(format!("label {x} outside vocabulary of size {p}"));
                }
            }
        }
        Ok(())
    }
}

/// Stacks `[k, d]` tensors into one `[B, k, d]` batch.
pub fn stack<'a>(items: impl IntoIterator<Item = &'a Tensor>) -> Result<Tensor> {
    let mut data = Vec::new();
    let mut shape: Option<Vec<usize>> = None;
    let mut b = 0;
    for t in items {
        match &shape {
            None => shape = Some(t.shape().to_vec()),
            Some(s) if s.as_slice() != t.shape() => {
                return Err(Error::Dimension(format!(
                    "cannot stack {:?} with {:?}",
                    s,
                    t.shape()
                )))
            }
            _ => {}
        }
        data.extend_from_slice(t.data());
        b += 1;
    }
    let mut shape = shape.ok_or_else(|| Error::Data("cannot stack an empty batch".into()))?;
    shape.insert(0, b);
    Tensor::new(&shape, data)
}
