//! Reverse-mode differentiation over whole matrices.
//!
//! Operations append a node to a [`Tape`] and return a [`Var`] handle.
//! [`Tape::backward`] walks the nodes in reverse and applies each op's
//! backward rule. Only the ops the attention network needs are provided,
//! including three that work on a [`SparsePattern`]:
//!
//! * [`Tape::pair_scores`]: one scalar per pattern entry, `dot(a[row], b[col])`.
//! * [`Tape::masked_softmax`]: softmax over the entries of each pattern row.
//! * [`Tape::spmm`]: `out[row] = sum_e w[e] * v[col(e)]` over the row's entries.
//!
//! Every kernel computes each output row (or entry) on one thread with a
//! fixed summation order, so values and gradients are bit-identical for any
//! thread count.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::{Matrix, SparsePattern};

const PAR_MIN: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Labels, training mask and class weights for [`Tape::cross_entropy`].
#[derive(Debug, Clone)]
pub struct LossTargets {
    pub labels: Vec<usize>,
    pub mask: Vec<bool>,
    pub class_weights: Vec<f64>,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Matmul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    LeakyRelu(Var, f64),
    Dropout(Var, Matrix),
    ReduceSum(Var),
    PairScores(Var, Var, Arc<SparsePattern>),
    MaskedSoftmax(Var, Arc<SparsePattern>),
    Spmm(Var, Arc<SparsePattern>, Var),
    CrossEntropy(Var, Arc<LossTargets>),
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&Matrix> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    /// Gradient of `var`, or zeros of `shape` if nothing flowed into it.
    pub fn get_or_zeros(&self, var: Var, shape: (usize, usize)) -> Matrix {
        self.get(var).cloned().unwrap_or_else(|| Matrix::zeros(shape.0, shape.1))
    }
}

fn same_shape(op: &'static str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            op,
            left: "lhs",
            left_shape: a.shape(),
            right: "rhs",
            right_shape: b.shape(),
        });
    }
    Ok(())
}

fn expect_shape(op: &'static str, name: &'static str, m: &Matrix, shape: (usize, usize), what: &'static str) -> Result<()> {
    if m.shape() != shape {
        return Err(Error::ShapeMismatch {
            op,
            left: name,
            left_shape: m.shape(),
            right: what,
            right_shape: shape,
        });
    }
    Ok(())
}

/// Softmax over the entries of every row of `pattern`, max-shifted.
pub fn masked_softmax(scores: &[f64], pattern: &SparsePattern) -> Vec<f64> {
    let mut out = vec![0.0; scores.len()];
    for r in 0..pattern.rows() {
        let range = pattern.row_range(r);
        if range.is_empty() {
            continue;
        }
        let row = &scores[range.clone()];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (o, &s) in out[range.clone()].iter_mut().zip(row) {
            *o = (s - max).exp();
            total += *o;
        }
        for o in &mut out[range] {
            *o /= total;
        }
    }
    out
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op_name: &'static str, value: Matrix, op: Op, requires_grad: bool) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite { op: op_name });
        }
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// A trainable input; gradients are reported for it.
    pub fn param(&mut self, value: Matrix) -> Result<Var> {
        self.push("param", value, Op::Leaf, true)
    }

    pub fn constant(&mut self, value: Matrix) -> Result<Var> {
        self.push("constant", value, Op::Leaf, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        self.push("matmul", value, Op::Matmul(a, b), rg)
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var> {
        let value = self.value(x).transpose();
        let rg = self.rg(x);
        self.push("transpose", value, Op::Transpose(x), rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("add", self.value(a), self.value(b))?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y);
        let rg = self.rg(a) || self.rg(b);
        self.push("add", value, Op::Add(a, b), rg)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("mul", self.value(a), self.value(b))?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y);
        let rg = self.rg(a) || self.rg(b);
        self.push("mul", value, Op::Mul(a, b), rg)
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Result<Var> {
        let value = self.value(x).map(|v| v * factor);
        let rg = self.rg(x);
        self.push("scale", value, Op::Scale(x, factor), rg)
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        let value = self.value(x).map(|v| v.max(0.0));
        let rg = self.rg(x);
        self.push("relu", value, Op::Relu(x), rg)
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Result<Var> {
        let value = self.value(x).map(|v| if v > 0.0 { v } else { slope * v });
        let rg = self.rg(x);
        self.push("leaky_relu", value, Op::LeakyRelu(x, slope), rg)
    }

    /// Inverted dropout: kept entries are scaled by `1 / (1 - rate)`.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, rate: f64, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!("dropout rate {rate} outside [0, 1)")));
        }
        let (r, c) = self.value(x).shape();
        let keep = 1.0 / (1.0 - rate);
        let mask_data = (0..r * c)
            .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let mask = Matrix::from_vec(r, c, mask_data)?;
        let value = self.value(x).zip_map(&mask, |v, m| v * m);
        let rg = self.rg(x);
        self.push("dropout", value, Op::Dropout(x, mask), rg)
    }

    pub fn reduce_sum(&mut self, x: Var) -> Result<Var> {
        let value = Matrix::scalar(self.value(x).sum());
        let rg = self.rg(x);
        self.push("reduce_sum", value, Op::ReduceSum(x), rg)
    }

    /// `nnz x 1` scores `dot(a[row(e)], b[col(e)])`, where `a` has one row per
    /// pattern row and `b` one row per pattern column.
    pub fn pair_scores(&mut self, a: Var, b: Var, pattern: &Arc<SparsePattern>) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.rows() != pattern.rows() || bv.rows() != pattern.cols() || av.cols() != bv.cols() {
            return Err(Error::ShapeMismatch {
                op: "pair_scores",
                left: "row features",
                left_shape: av.shape(),
                right: "column features",
                right_shape: bv.shape(),
            });
        }
        let rows = pattern.entry_rows();
        let score = |e: usize| -> f64 {
            let (ra, rb) = (av.row(rows[e]), bv.row(pattern.col_of(e)));
            ra.iter().zip(rb).map(|(x, y)| x * y).sum()
        };
        let values: Vec<f64> = if pattern.nnz() >= PAR_MIN {
            (0..pattern.nnz()).into_par_iter().map(score).collect()
        } else {
            (0..pattern.nnz()).map(score).collect()
        };
        let rg = self.rg(a) || self.rg(b);
        self.push("pair_scores", Matrix::column(&values), Op::PairScores(a, b, pattern.clone()), rg)
    }

    pub fn masked_softmax(&mut self, scores: Var, pattern: &Arc<SparsePattern>) -> Result<Var> {
        expect_shape("masked_softmax", "scores", self.value(scores), (pattern.nnz(), 1), "pattern entries")?;
        let values = masked_softmax(self.value(scores).as_slice(), pattern);
        let rg = self.rg(scores);
        self.push("masked_softmax", Matrix::column(&values), Op::MaskedSoftmax(scores, pattern.clone()), rg)
    }

    /// `out[row] = sum over the row's entries e of weights[e] * values[col(e)]`.
    pub fn spmm(&mut self, weights: Var, pattern: &Arc<SparsePattern>, values: Var) -> Result<Var> {
        let (w, v) = (self.value(weights), self.value(values));
        expect_shape("spmm", "weights", w, (pattern.nnz(), 1), "pattern entries")?;
        if v.rows() != pattern.cols() {
            return Err(Error::ShapeMismatch {
                op: "spmm",
                left: "values",
                left_shape: v.shape(),
                right: "pattern",
                right_shape: (pattern.rows(), pattern.cols()),
            });
        }
        let d = v.cols();
        let mut out = Matrix::zeros(pattern.rows(), d);
        if d > 0 {
            let w = w.as_slice();
            let kernel = |(r, out_row): (usize, &mut [f64])| {
                for e in pattern.row_range(r) {
                    let we = w[e];
                    for (o, &x) in out_row.iter_mut().zip(v.row(pattern.col_of(e))) {
                        *o += we * x;
                    }
                }
            };
            if pattern.rows() >= PAR_MIN {
                out.as_mut_slice().par_chunks_mut(d).enumerate().for_each(kernel);
            } else {
                out.as_mut_slice().chunks_mut(d).enumerate().for_each(kernel);
            }
        }
        let rg = self.rg(weights) || self.rg(values);
        self.push("spmm", out, Op::Spmm(weights, pattern.clone(), values), rg)
    }

    /// Class-weighted softmax cross-entropy averaged over masked rows.
    pub fn cross_entropy(&mut self, logits: Var, targets: Arc<LossTargets>) -> Result<Var> {
        let z = self.value(logits);
        let (m, c) = z.shape();
        if targets.labels.len() != m || targets.mask.len() != m {
            return Err(Error::ShapeMismatch {
                op: "cross_entropy",
                left: "logits",
                left_shape: z.shape(),
                right: "labels/mask",
                right_shape: (targets.labels.len(), targets.mask.len()),
            });
        }
        if targets.class_weights.len() != c {
            return Err(Error::InvalidArgument(format!(
                "{} class weights for {c} classes",
                targets.class_weights.len()
            )));
        }
        let count = targets.mask.iter().filter(|&&b| b).count();
        if count == 0 {
            return Err(Error::InvalidArgument("loss mask selects no samples".into()));
        }
        let mut total = 0.0;
        for i in (0..m).filter(|&i| targets.mask[i]) {
            let y = targets.labels[i];
            if y >= c {
                return Err(Error::InvalidArgument(format!("label {y} out of range for {c} classes")));
            }
            let row = z.row(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            total += targets.class_weights[y] * (lse - row[y]);
        }
        let value = Matrix::scalar(total / count as f64);
        let rg = self.rg(logits);
        self.push("cross_entropy", value, Op::CrossEntropy(logits, targets), rg)
    }

    /// Gradients of the scalar `root` with respect to every node that requires
    /// them, intermediate nodes included.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        if self.value(root).shape() != (1, 1) {
            return Err(Error::ShapeMismatch {
                op: "backward",
                left: "root",
                left_shape: self.value(root).shape(),
                right: "scalar",
                right_shape: (1, 1),
            });
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(Matrix::scalar(1.0));

        for idx in (0..=root.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            let mut contribs: Vec<(Var, Matrix)> = Vec::with_capacity(2);
            match &node.op {
                Op::Leaf => {
                    grads[idx] = Some(g);
                    continue;
                }
                &Op::Matmul(a, b) => {
                    if self.rg(a) {
                        contribs.push((a, g.matmul(&self.value(b).transpose())?));
                    }
                    if self.rg(b) {
                        contribs.push((b, self.value(a).transpose().matmul(&g)?));
                    }
                }
                &Op::Transpose(x) => contribs.push((x, g.transpose())),
                &Op::Add(a, b) => {
                    contribs.push((a, g.clone()));
                    contribs.push((b, g.clone()));
                }
                &Op::Mul(a, b) => {
                    contribs.push((a, g.zip_map(self.value(b), |x, y| x * y)));
                    contribs.push((b, g.zip_map(self.value(a), |x, y| x * y)));
                }
                &Op::Scale(x, s) => contribs.push((x, g.map(|v| v * s))),
                &Op::Relu(x) => {
                    contribs.push((x, g.zip_map(self.value(x), |gv, xv| if xv > 0.0 { gv } else { 0.0 })));
                }
                &Op::LeakyRelu(x, slope) => {
                    contribs.push((x, g.zip_map(self.value(x), |gv, xv| if xv > 0.0 { gv } else { slope * gv })));
                }
                Op::Dropout(x, mask) => contribs.push((*x, g.zip_map(mask, |gv, m| gv * m))),
                &Op::ReduceSum(x) => {
                    let (r, c) = self.value(x).shape();
                    contribs.push((x, Matrix::filled(r, c, g.get(0, 0))));
                }
                Op::PairScores(a, b, pattern) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let gs = g.as_slice();
                    if self.rg(*a) {
                        // dA[r] = sum_e g[e] * b[col(e)]
                        let ga = accumulate_rows(pattern.rows(), av.cols(), |r, out| {
                            for e in pattern.row_range(r) {
                                axpy(gs[e], bv.row(pattern.col_of(e)), out);
                            }
                        });
                        contribs.push((*a, ga));
                    }
                    if self.rg(*b) {
                        // dB[c] = sum_e g[e] * a[row(e)]
                        let gb = accumulate_rows(pattern.cols(), bv.cols(), |c, out| {
                            for (&r, &e) in pattern.col(c).iter().zip(pattern.col_entries(c)) {
                                axpy(gs[e], av.row(r), out);
                            }
                        });
                        contribs.push((*b, gb));
                    }
                }
                Op::MaskedSoftmax(x, pattern) => {
                    let y = node.value.as_slice();
                    let gs = g.as_slice();
                    let mut dx = vec![0.0; y.len()];
                    for r in 0..pattern.rows() {
                        let range = pattern.row_range(r);
                        let dot: f64 = range.clone().map(|e| y[e] * gs[e]).sum();
                        for e in range {
                            dx[e] = y[e] * (gs[e] - dot);
                        }
                    }
                    contribs.push((*x, Matrix::column(&dx)));
                }
                Op::Spmm(w, pattern, v) => {
                    let (wv, vv) = (self.value(*w), self.value(*v));
                    let ws = wv.as_slice();
                    if self.rg(*w) {
                        let rows = pattern.entry_rows();
                        let entry = |e: usize| -> f64 {
                            g.row(rows[e]).iter().zip(vv.row(pattern.col_of(e))).map(|(a, b)| a * b).sum()
                        };
                        let dw: Vec<f64> = if pattern.nnz() >= PAR_MIN {
                            (0..pattern.nnz()).into_par_iter().map(entry).collect()
                        } else {
                            (0..pattern.nnz()).map(entry).collect()
                        };
                        contribs.push((*w, Matrix::column(&dw)));
                    }
                    if self.rg(*v) {
                        let dv = accumulate_rows(pattern.cols(), vv.cols(), |c, out| {
                            for (&r, &e) in pattern.col(c).iter().zip(pattern.col_entries(c)) {
                                axpy(ws[e], g.row(r), out);
                            }
                        });
                        contribs.push((*v, dv));
                    }
                }
                Op::CrossEntropy(logits, t) => {
                    let z = self.value(*logits);
                    let count = t.mask.iter().filter(|&&b| b).count() as f64;
                    let upstream = g.get(0, 0);
                    let mut dz = Matrix::zeros(z.rows(), z.cols());
                    for i in (0..z.rows()).filter(|&i| t.mask[i]) {
                        let y = t.labels[i];
                        let row = z.row(i);
                        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        let total: f64 = row.iter().map(|v| (v - max).exp()).sum();
                        let scale = upstream * t.class_weights[y] / count;
                        for (c, out) in dz.row_mut(i).iter_mut().enumerate() {
                            let p = (row[c] - max).exp() / total;
                            *out = scale * (p - if c == y { 1.0 } else { 0.0 });
                        }
                    }
                    contribs.push((*logits, dz));
                }
            }
            for (parent, grad) in contribs {
                if !self.rg(parent) {
                    continue;
                }
                match &mut grads[parent.0] {
                    Some(existing) => existing.add_assign(&grad),
                    slot @ None => *slot = Some(grad),
                }
            }
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }
}

fn axpy(alpha: f64, x: &[f64], out: &mut [f64]) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o += alpha * v;
    }
}

/// Fills a `rows x cols` matrix one row at a time, in parallel for large outputs.
fn accumulate_rows(rows: usize, cols: usize, fill: impl Fn(usize, &mut [f64]) + Sync) -> Matrix {
    let mut out = Matrix::zeros(rows, cols);
    if cols == 0 {
        return out;
    }
    if rows >= PAR_MIN {
        out.as_mut_slice()
            .par_chunks_mut(cols)
            .enumerate()
            .for_each(|(r, row)| fill(r, row));
    } else {
        out.as_mut_slice()
            .chunks_mut(cols)
            .enumerate()
            .for_each(|(r, row)| fill(r, row));
    }
    out
}
