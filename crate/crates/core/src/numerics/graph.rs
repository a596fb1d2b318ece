//! Tape-based reverse-mode differentiation.
//!
//! Every operation on a [`Graph`] evaluates eagerly and appends one node to
//! the tape. [`Graph::backward`] walks the tape from the end, so nodes are
//! visited in exact reverse recording order, and a node that feeds several
//! consumers receives the sum of their contributions.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tensor::{strides, Tensor};
use crate::error::{Error, Result};

/// Handle to a node on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
struct MatMulDims {
    batch: usize,
    m: usize,
    p: usize,
    n: usize,
    a_shared: bool,
    b_shared: bool,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul { a: Var, b: Var, dims: MatMulDims },
    Add(Var, Var),
    AddBias(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Softmax { x: Var, axis: usize },
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Dropout { x: Var, mask: Vec<f64> },
    Permute { x: Var, perm: Vec<usize> },
    Reshape(Var),
    Sum(Var),
    Mean(Var),
    Rmse {
        pred: Var,
        target: Tensor,
        rms: Vec<f64>,
        clamped: Vec<bool>,
        batch: usize,
    },
    CrossEntropy {
        logits: Var,
        labels: Vec<usize>,
        probs: Vec<f64>,
        batch: usize,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Floor applied to the mean squared error before the square root in
/// [`Graph::rmse_loss`]; keeps the derivative finite at an exact match.
pub const RMSE_MSE_FLOOR: f64 = 1e-12;

/// The computation record for one forward/backward pass.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Graph::backward`], indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of the loss with respect to `v`, or `None` when `v` does
    /// not influence the loss or was recorded as a constant.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A leaf that receives a gradient.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Batched matrix product `[.., m, p] x [.., p, n] -> [.., m, n]`.
    ///
    /// Leading batch extents must be equal, or one operand must be a plain
    /// matrix shared across the other's batch.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let sa = self.shape(a).to_vec();
        let sb = self.shape(b).to_vec();
        let err = || {
            Error::Dimension(format!(
                "matmul: incompatible shapes {sa:?} and {sb:?}"
            ))
        };
        if sa.len() < 2 || sb.len() < 2 {
            return Err(err());
        }
        let (m, p) = (sa[sa.len() - 2], sa[sa.len() - 1]);
        let (p2, n) = (sb[sb.len() - 2], sb[sb.len() - 1]);
        if p != p2 {
            return Err(err());
        }
        let ba = &sa[..sa.len() - 2];
        let bb = &sb[..sb.len() - 2];
        let (batch_shape, a_shared, b_shared) = if ba == bb {
            (ba.to_vec(), false, false)
        } else if bb.is_empty() {
            (ba.to_vec(), false, true)
        } else if ba.is_empty() {
            (bb.to_vec(), true, false)
        } else {
            return Err(err());
        };
        let batch: usize = batch_shape.iter().product();
        let dims = MatMulDims {
            batch,
            m,
            p,
            n,
            a_shared,
            b_shared,
        };
        let mut out = vec![0.0; batch * m * n];
        {
            let av = self.value(a).data();
            let bv = self.value(b).data();
            for bi in 0..batch {
                let ao = if a_shared { 0 } else { bi * m * p };
                let bo = if b_shared { 0 } else { bi * p * n };
                mm_acc(
                    &av[ao..ao + m * p],
                    &bv[bo..bo + p * n],
                    &mut out[bi * m * n..(bi + 1) * m * n],
                    m,
                    p,
                    n,
                );
            }
        }
        let mut shape = batch_shape;
        shape.extend([m, n]);
        let value = Tensor::new(&shape, out)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::MatMul { a, b, dims }, rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.value(a).check_same_shape(self.value(b), "add")?;
        let data = zip_map(self.value(a), self.value(b), |x, y| x + y);
        let value = Tensor::new(self.shape(a), data)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.value(a).check_same_shape(self.value(b), "sub")?;
        let data = zip_map(self.value(a), self.value(b), |x, y| x - y);
        let value = Tensor::new(self.shape(a), data)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Sub(a, b), rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.value(a).check_same_shape(self.value(b), "mul")?;
        let data = zip_map(self.value(a), self.value(b), |x, y| x * y);
        let value = Tensor::new(self.shape(a), data)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Mul(a, b), rg))
    }

    /// `a[.., d] + bias[d]`, the bias repeated over every leading index.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let sa = self.shape(a);
        let sb = self.shape(bias);
        if sb.len() != 1 || sa.last() != sb.first() {
            return Err(Error::Dimension(format!(
                "add_bias: bias shape {sb:?} does not match trailing extent of {sa:?}"
            )));
        }
        let d = sb[0];
        let bv = self.value(bias).data();
        let data: Vec<f64> = self
            .value(a)
            .data()
            .iter()
            .enumerate()
            .map(|(i, &x)| x + bv[i % d])
            .collect();
        let value = Tensor::new(self.shape(a), data)?;
        let rg = self.rg(&[a, bias]);
        Ok(self.push(value, Op::AddBias(a, bias), rg))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let value = self.value(a).map(|x| x * s);
        let rg = self.rg(&[a]);
        self.push(value, Op::Scale(a, s), rg)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x.max(0.0));
        let rg = self.rg(&[a]);
        self.push(value, Op::Relu(a), rg)
    }

    /// Max-subtracted softmax along `axis`.
    pub fn softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        if axis >= shape.len() {
            return Err(Error::Dimension(format!(
                "softmax: axis {axis} out of range for shape {shape:?}"
            )));
        }
        let (outer, n, inner) = axis_split(&shape, axis);
        let xv = self.value(x).data();
        let mut out = vec![0.0; xv.len()];
        for o in 0..outer {
            for i in 0..inner {
                let idx = |j: usize| o * n * inner + j * inner + i;
                let mx = (0..n).map(|j| xv[idx(j)]).fold(f64::NEG_INFINITY, f64::max);
                let mut z = 0.0;
                for j in 0..n {
                    let e = (xv[idx(j)] - mx).exp();
                    out[idx(j)] = e;
                    z += e;
                }
                for j in 0..n {
                    out[idx(j)] /= z;
                }
            }
        }
        let value = Tensor::new(&shape, out)?;
        let rg = self.rg(&[x]);
        Ok(self.push(value, Op::Softmax { x, axis }, rg))
    }

    /// Layer normalisation over the trailing extent.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        if !(eps > 0.0) {
            return Err(Error::Parameter(format!("layer_norm: eps must be > 0, got {eps}")));
        }
        let shape = self.shape(x).to_vec();
        let d = *shape.last().ok_or_else(|| {
            Error::Dimension("layer_norm: input must have at least one axis".into())
        })?;
        for (name, v) in [("gamma", gamma), ("beta", beta)] {
            if self.shape(v) != [d] {
                return Err(Error::Dimension(format!(
                    "layer_norm: {name} shape {:?} does not match trailing extent {d} of {shape:?}",
                    self.shape(v)
                )));
            }
        }
        let xv = self.value(x).data();
        let gv = self.value(gamma).data();
        let bv = self.value(beta).data();
        let rows = xv.len() / d;
        let mut xhat = vec![0.0; xv.len()];
        let mut inv_std = vec![0.0; rows];
        let mut out = vec![0.0; xv.len()];
        for r in 0..rows {
            let row = &xv[r * d..(r + 1) * d];
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let is = 1.0 / (var + eps).sqrt();
            inv_std[r] = is;
            for j in 0..d {
                let h = (row[j] - mean) * is;
                xhat[r * d + j] = h;
                out[r * d + j] = gv[j] * h + bv[j];
            }
        }
        let value = Tensor::new(&shape, out)?;
        let rg = self.rg(&[x, gamma, beta]);
        Ok(self.push(
            value,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
            rg,
        ))
    }

    /// Inverted dropout. Identity when `training` is false or `p_drop == 0`.
    pub fn dropout(&mut self, x: Var, p_drop: f64, seed: u64, training: bool) -> Result<Var> {
        if !(0.0..1.0).contains(&p_drop) {
            return Err(Error::Parameter(format!(
                "dropout probability must be in [0, 1), got {p_drop}"
            )));
        }
        if !training || p_drop == 0.0 {
            return Ok(x);
        }
        let keep = 1.0 / (1.0 - p_drop);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mask: Vec<f64> = (0..self.value(x).len())
            .map(|_| if rng.gen::<f64>() < p_drop { 0.0 } else { keep })
            .collect();
        let data = self
            .value(x)
            .data()
            .iter()
            .zip(&mask)
            .map(|(v, m)| v * m)
            .collect();
        let value = Tensor::new(self.shape(x), data)?;
        let rg = self.rg(&[x]);
        Ok(self.push(value, Op::Dropout { x, mask }, rg))
    }

    /// Reorders axes: output axis `i` is input axis `perm[i]`.
    pub fn permute(&mut self, x: Var, perm: &[usize]) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        let mut seen = vec![false; shape.len()];
        if perm.len() != shape.len()
            || perm.iter().any(|&p| p >= shape.len() || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::Dimension(format!(
                "permute: {perm:?} is not a permutation of the axes of {shape:?}"
            )));
        }
        let out = permute_data(self.value(x).data(), &shape, perm);
        let new_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
        let value = Tensor::new(&new_shape, out)?;
        let rg = self.rg(&[x]);
        Ok(self.push(
            value,
            Op::Permute {
                x,
                perm: perm.to_vec(),
            },
            rg,
        ))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(x).reshape(shape)?;
        let rg = self.rg(&[x]);
        Ok(self.push(value, Op::Reshape(x), rg))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        let rg = self.rg(&[x]);
        self.push(Tensor::scalar(s), Op::Sum(x), rg)
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let s = t.data().iter().sum::<f64>() / t.len() as f64;
        let rg = self.rg(&[x]);
        self.push(Tensor::scalar(s), Op::Mean(x), rg)
    }

    /// Sum over frames of the per-frame root-mean-square error, averaged
    /// over the leading batch axis. `pred` and `target` are `[B, k, n]`.
    pub fn rmse_loss(&mut self, pred: Var, target: &Tensor) -> Result<Var> {
        let shape = self.shape(pred).to_vec();
        if shape.len() != 3 || target.shape() != shape.as_slice() {
            return Err(Error::Dimension(format!(
                "rmse_loss: prediction {shape:?} and target {:?} must be equal [B, k, n] shapes",
                target.shape()
            )));
        }
        let (b, n) = (shape[0], shape[2]);
        let pv = self.value(pred).data();
        let tv = target.data();
        let frames = pv.len() / n;
        let mut rms = Vec::with_capacity(frames);
        let mut clamped = Vec::with_capacity(frames);
        let mut total = 0.0;
        for f in 0..frames {
            let mse = (0..n)
                .map(|j| {
                    let d = tv[f * n + j] - pv[f * n + j];
                    d * d
                })
                .sum::<f64>()
                / n as f64;
            let c = mse < RMSE_MSE_FLOOR;
            let r = mse.max(RMSE_MSE_FLOOR).sqrt();
            rms.push(r);
            clamped.push(c);
            // the floor only guards the derivative; an exact match still scores 0
            total += mse.sqrt();
        }
        let loss = total / b as f64;
        let rg = self.rg(&[pred]);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::Rmse {
                pred,
                target: target.clone(),
                rms,
                clamped,
                batch: b,
            },
            rg,
        ))
    }

    /// Cross-entropy of softmax(`logits`) against integer `labels`, summed
    /// over frames and averaged over the batch. `logits` is `[B, k, P]`,
    /// `labels` holds `B * k` class ids in row-major order.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let shape = self.shape(logits).to_vec();
        if shape.len() != 3 || labels.len() != shape[0] * shape[1] {
            return Err(Error::Dimension(format!(
                "cross_entropy: logits {shape:?} need [B, k, P] with B*k labels, got {} labels",
                labels.len()
            )));
        }
        let (b, p) = (shape[0], shape[2]);
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= p) {
            return Err(Error::Data(format!(
                "label {l} at frame {i} is outside the vocabulary of {p} classes"
            )));
        }
        let lv = self.value(logits).data();
        let mut probs = vec![0.0; lv.len()];
        let mut total = 0.0;
        for (f, &label) in labels.iter().enumerate() {
            let row = &lv[f * p..(f + 1) * p];
            let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|v| (v - mx).exp()).sum();
            let lse = mx + z.ln();
            total += lse - row[label];
            for j in 0..p {
                probs[f * p + j] = (row[j] - lse).exp();
            }
        }
        let loss = total / b as f64;
        let rg = self.rg(&[logits]);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                labels: labels.to_vec(),
                probs,
                batch: b,
            },
            rg,
        ))
    }

    /// Reverse pass from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.backprop_node(node, &g, &mut grads);
            grads[i] = Some(g);
        }

        let grads = grads
            .into_iter()
            .zip(&self.nodes)
            .map(|(g, node)| {
                g.filter(|_| node.requires_grad)
                    .map(|d| Tensor::new(node.value.shape(), d).expect("gradient shape"))
            })
            .collect();
        Ok(Gradients { grads })
    }

    fn backprop_node(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        match &node.op {
            Op::Leaf => {}
            Op::MatMul { a, b, dims } => {
                let MatMulDims {
                    batch,
                    m,
                    p,
                    n,
                    a_shared,
                    b_shared,
                } = *dims;
                let av = self.value(*a).data();
                let bv = self.value(*b).data();
                if self.needs(*a) {
                    let ga = acc_slot(grads, *a, self.value(*a).len());
                    for bi in 0..batch {
                        let ao = if a_shared { 0 } else { bi * m * p };
                        let bo = if b_shared { 0 } else { bi * p * n };
                        // dA += dC · Bᵀ
                        let gc = &g[bi * m * n..(bi + 1) * m * n];
                        let bm = &bv[bo..bo + p * n];
                        let out = &mut ga[ao..ao + m * p];
                        for i in 0..m {
                            for k in 0..p {
                                let mut s = 0.0;
                                for j in 0..n {
                                    s += gc[i * n + j] * bm[k * n + j];
                                }
                                out[i * p + k] += s;
                            }
                        }
                    }
                }
                if self.needs(*b) {
                    let gb = acc_slot(grads, *b, self.value(*b).len());
                    for bi in 0..batch {
                        let ao = if a_shared { 0 } else { bi * m * p };
                        let bo = if b_shared { 0 } else { bi * p * n };
                        // dB += Aᵀ · dC
                        let gc = &g[bi * m * n..(bi + 1) * m * n];
                        let am = &av[ao..ao + m * p];
                        let out = &mut gb[bo..bo + p * n];
                        for i in 0..m {
                            for k in 0..p {
                                let a_ik = am[i * p + k];
                                if a_ik == 0.0 {
                                    continue;
                                }
                                let row = &gc[i * n..(i + 1) * n];
                                let dst = &mut out[k * n..(k + 1) * n];
                                for j in 0..n {
                                    dst[j] += a_ik * row[j];
                                }
                            }
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                self.acc_elementwise(grads, *a, g, |_, gi| gi);
                self.acc_elementwise(grads, *b, g, |_, gi| gi);
            }
            Op::Sub(a, b) => {
                self.acc_elementwise(grads, *a, g, |_, gi| gi);
                self.acc_elementwise(grads, *b, g, |_, gi| -gi);
            }
            Op::Mul(a, b) => {
                let av = self.value(*a).data();
                let bv = self.value(*b).data();
                self.acc_elementwise(grads, *a, g, |i, gi| gi * bv[i]);
                self.acc_elementwise(grads, *b, g, |i, gi| gi * av[i]);
            }
            Op::AddBias(a, bias) => {
                self.acc_elementwise(grads, *a, g, |_, gi| gi);
                if self.needs(*bias) {
                    let d = self.value(*bias).len();
                    let gb = acc_slot(grads, *bias, d);
                    for (i, gi) in g.iter().enumerate() {
                        gb[i % d] += gi;
                    }
                }
            }
            Op::Scale(a, s) => self.acc_elementwise(grads, *a, g, |_, gi| gi * s),
            Op::Relu(a) => {
                let av = self.value(*a).data();
                self.acc_elementwise(grads, *a, g, |i, gi| if av[i] > 0.0 { gi } else { 0.0 });
            }
            Op::Softmax { x, axis } => {
                if !self.needs(*x) {
                    return;
                }
                let y = node.value.data();
                let (outer, n, inner) = axis_split(node.value.shape(), *axis);
                let gx = acc_slot(grads, *x, y.len());
                for o in 0..outer {
                    for i in 0..inner {
                        let idx = |j: usize| o * n * inner + j * inner + i;
                        let dot: f64 = (0..n).map(|j| g[idx(j)] * y[idx(j)]).sum();
                        for j in 0..n {
                            gx[idx(j)] += y[idx(j)] * (g[idx(j)] - dot);
                        }
                    }
                }
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            } => {
                let d = self.value(*gamma).len();
                let rows = xhat.len() / d;
                let gv = self.value(*gamma).data();
                if self.needs(*gamma) {
                    let gg = acc_slot(grads, *gamma, d);
                    for (i, gi) in g.iter().enumerate() {
                        gg[i % d] += gi * xhat[i];
                    }
                }
                if self.needs(*beta) {
                    let gb = acc_slot(grads, *beta, d);
                    for (i, gi) in g.iter().enumerate() {
                        gb[i % d] += gi;
                    }
                }
                if self.needs(*x) {
                    let gx = acc_slot(grads, *x, xhat.len());
                    for (r, &istd) in inv_std.iter().enumerate().take(rows) {
                        let o = r * d;
                        let mut s1 = 0.0;
                        let mut s2 = 0.0;
                        for j in 0..d {
                            let dh = g[o + j] * gv[j];
                            s1 += dh;
                            s2 += dh * xhat[o + j];
                        }
                        let c = istd / d as f64;
                        for j in 0..d {
                            let dh = g[o + j] * gv[j];
                            gx[o + j] += c * (d as f64 * dh - s1 - xhat[o + j] * s2);
                        }
                    }
                }
            }
            Op::Dropout { x, mask } => self.acc_elementwise(grads, *x, g, |i, gi| gi * mask[i]),
            Op::Permute { x, perm } => {
                if !self.needs(*x) {
                    return;
                }
                let mut inv = vec![0; perm.len()];
                for (i, &p) in perm.iter().enumerate() {
                    inv[p] = i;
                }
                let back = permute_data(g, node.value.shape(), &inv);
                self.acc_elementwise(grads, *x, &back, |_, gi| gi);
            }
            Op::Reshape(x) => self.acc_elementwise(grads, *x, g, |_, gi| gi),
            Op::Sum(x) => {
                let g0 = g[0];
                self.acc_fill(grads, *x, g0);
            }
            Op::Mean(x) => {
                let g0 = g[0] / self.value(*x).len() as f64;
                self.acc_fill(grads, *x, g0);
            }
            Op::Rmse {
                pred,
                target,
                rms,
                clamped,
                batch,
            } => {
                if !self.needs(*pred) {
                    return;
                }
                let pv = self.value(*pred).data();
                let tv = target.data();
                let n = pv.len() / rms.len();
                let scale = g[0] / *batch as f64;
                let gp = acc_slot(grads, *pred, pv.len());
                for (f, (&r, &c)) in rms.iter().zip(clamped).enumerate() {
                    if c {
                        continue;
                    }
                    for j in 0..n {
                        let i = f * n + j;
                        gp[i] += scale * (pv[i] - tv[i]) / (n as f64 * r);
                    }
                }
            }
            Op::CrossEntropy {
                logits,
                labels,
                probs,
                batch,
            } => {
                if !self.needs(*logits) {
                    return;
                }
                let p = probs.len() / labels.len();
                let scale = g[0] / *batch as f64;
                let gl = acc_slot(grads, *logits, probs.len());
                for (f, &label) in labels.iter().enumerate() {
                    for j in 0..p {
                        let onehot = if j == label { 1.0 } else { 0.0 };
                        gl[f * p + j] += scale * (probs[f * p + j] - onehot);
                    }
                }
            }
        }
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn acc_elementwise(
        &self,
        grads: &mut [Option<Vec<f64>>],
        v: Var,
        g: &[f64],
        f: impl Fn(usize, f64) -> f64,
    ) {
        if !self.needs(v) {
            return;
        }
        let slot = acc_slot(grads, v, g.len());
        for (i, (s, &gi)) in slot.iter_mut().zip(g).enumerate() {
            *s += f(i, gi);
        }
    }

    fn acc_fill(&self, grads: &mut [Option<Vec<f64>>], v: Var, value: f64) {
        if !self.needs(v) {
            return;
        }
        let n = self.value(v).len();
        for s in acc_slot(grads, v, n).iter_mut() {
            *s += value;
        }
    }
}

fn acc_slot(grads: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut Vec<f64> {
    grads[v.0].get_or_insert_with(|| vec![0.0; len])
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect()
}

/// `out += a · b` for row-major `a: m×p`, `b: p×n`.
fn mm_acc(a: &[f64], b: &[f64], out: &mut [f64], m: usize, p: usize, n: usize) {
    for i in 0..m {
        let dst = &mut out[i * n..(i + 1) * n];
        for k in 0..p {
            let a_ik = a[i * p + k];
            if a_ik == 0.0 {
                continue;
            }
            let row = &b[k * n..(k + 1) * n];
            for j in 0..n {
                dst[j] += a_ik * row[j];
            }
        }
    }
}

fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

fn permute_data(data: &[f64], shape: &[usize], perm: &[usize]) -> Vec<f64> {
    let in_strides = strides(shape);
    let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let src_strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let mut out = Vec::with_capacity(data.len());
    let mut idx = vec![0usize; out_shape.len()];
    for _ in 0..data.len() {
        let src: usize = idx.iter().zip(&src_strides).map(|(i, s)| i * s).sum();
        out.push(data[src]);
        for ax in (0..idx.len()).rev() {
            idx[ax] += 1;
            if idx[ax] < out_shape[ax] {
                break;
            }
            idx[ax] = 0;
        }
    }
    out
}
