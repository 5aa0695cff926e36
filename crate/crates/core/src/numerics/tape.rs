//! Reverse-mode gradient tape over [`Tensor`] values.
//!
//! Each primitive appends one node holding its output and whatever it needs
//! to replay the backward rule. [`GradTape::backward`] walks the nodes in
//! exact reverse order and accumulates gradients additively, so a value that
//! feeds several consumers receives the sum of their contributions.

use crate::error::{Error, Result};
use crate::numerics::ops;
use crate::numerics::tensor::Tensor;

/// Handle to a value recorded on a [`GradTape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op {
    Leaf,
    Affine { weight: Var, bias: Var, x: Var },
    Sigmoid(Var),
    ReduceMax { x: Var, argmax: Vec<usize> },
    ChannelGate { x: Var, gate: Var },
    Cosine { g: Var, x: Var },
    TopKMean { x: Var, k: usize, picked: Vec<Vec<usize>> },
    ColumnTopP { s: Var, p: usize, picked: Vec<Vec<usize>> },
    NarrowLast { x: Var, start: usize },
    Bce { s: Var, target: Tensor, eps: f64 },
    MulConst { x: Var, factor: Tensor },
    Add(Var, Var),
    Scale(Var, f64),
    Sum(Var),
    Mean(Var),
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Ordered record of executed primitives. Confined to one thread.
#[derive(Default)]
pub struct GradTape {
    nodes: Vec<Node>,
    margin: f64,
}

/// Gradients indexed by [`Var`]; values that received no gradient read as `None`.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient of `v`, or zeros shaped like `like` when none flowed.
    pub fn get_or_zeros(&self, v: Var, like: &Tensor) -> Tensor {
        self.get(v).cloned().unwrap_or_else(|| Tensor::zeros(like.shape()))
    }
}

impl GradTape {
    pub fn new() -> Self {
        GradTape {
            nodes: Vec::new(),
            margin: f64::INFINITY,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Smallest gap between a selected and a rejected candidate across every
    /// max / top-k / top-p executed so far. Near zero means the point is on a tie.
    pub fn selection_margin(&self) -> f64 {
        self.margin
    }

    fn push(&mut self, value: Tensor, op: Op, what: &str) -> Result<Var> {
        if value.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(what.to_string()));
        }
        self.nodes.push(Node { value, op });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf });
        Var(self.nodes.len() - 1)
    }

    pub fn affine(&mut self, weight: Var, bias: Var, x: Var) -> Result<Var> {
        let y = ops::affine(self.value(weight), self.value(bias), self.value(x))?;
        self.push(y, Op::Affine { weight, bias, x }, "affine")
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        let y = ops::sigmoid(self.value(x));
        self.push(y, Op::Sigmoid(x), "sigmoid")
    }

    pub fn reduce_max(&mut self, x: Var, axes: &[usize]) -> Result<Var> {
        let r = ops::reduce_max(self.value(x), axes)?;
        self.margin = self.margin.min(r.margin);
        self.push(r.values, Op::ReduceMax { x, argmax: r.argmax }, "reduce_max")
    }

    pub fn channel_gate(&mut self, x: Var, gate: Var) -> Result<Var> {
        let y = ops::channel_gate(self.value(x), self.value(gate))?;
        self.push(y, Op::ChannelGate { x, gate }, "channel_gate")
    }

    pub fn cosine_relation(&mut self, g: Var, x: Var) -> Result<Var> {
        let y = ops::cosine_relation(self.value(g), self.value(x))?;
        self.push(y, Op::Cosine { g, x }, "cosine_relation")
    }

    /// Top-k spatial mean. The relation scores only steer selection and
    /// receive no gradient.
    pub fn top_k_mean(&mut self, x: Var, relation: Var, k: usize) -> Result<Var> {
        let s = ops::top_k_mean(self.value(x), self.value(relation), k)?;
        self.margin = self.margin.min(s.margin);
        self.push(
            s.values,
            Op::TopKMean {
                x,
                k,
                picked: s.picked,
            },
            "top_k_mean",
        )
    }

    pub fn column_top_p_mean(&mut self, s: Var, p: usize) -> Result<Var> {
        let sel = ops::column_top_p_mean(self.value(s), p)?;
        self.margin = self.margin.min(sel.margin);
        self.push(
            sel.values,
            Op::ColumnTopP {
                s,
                p,
                picked: sel.picked,
            },
            "column_top_p_mean",
        )
    }

    pub fn narrow_last(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let y = ops::narrow_last(self.value(x), start, len)?;
        self.push(y, Op::NarrowLast { x, start }, "narrow")
    }

    pub fn bce(&mut self, s: Var, target: Tensor, eps: f64) -> Result<Var> {
        let y = ops::bce(self.value(s), &target, eps)?;
        self.push(y, Op::Bce { s, target, eps }, "binary cross-entropy")
    }

    pub fn mul_const(&mut self, x: Var, factor: Tensor) -> Result<Var> {
        let y = self.value(x).zip_map(&factor, |a, b| a * b)?;
        self.push(y, Op::MulConst { x, factor }, "mul_const")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let y = self.value(a).zip_map(self.value(b), |u, v| u + v)?;
        self.push(y, Op::Add(a, b), "add")
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var> {
        let y = self.value(x).map(|v| v * c)?;
        self.push(y, Op::Scale(x, c), "scale")
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let y = Tensor::scalar(self.value(x).sum())?;
        self.push(y, Op::Sum(x), "sum")
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        let v = self.value(x);
        let y = Tensor::scalar(v.sum() / v.len() as f64)?;
        self.push(y, Op::Mean(x), "mean")
    }

    /// Backpropagates from `out`, seeding its gradient with ones.
    pub fn backward(&self, out: Var) -> Result<Gradients> {
        let mut grads: Vec<Option<Tensor>> = vec![None; out.0 + 1];
        grads[out.0] = Some(Tensor::full(self.value(out).shape(), 1.0));

        for idx in (0..=out.0).rev() {
            let Some(gy) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            self.propagate(&node.op, &node.value, &gy, &mut grads);
            grads[idx] = Some(gy);
        }
        if let Some(i) = grads
            .iter()
            .flatten()
            .position(|g| g.data().iter().any(|v| !v.is_finite()))
        {
            return Err(Error::NonFinite(format!("gradient of tape node {i}")));
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, op: &Op, y: &Tensor, gy: &Tensor, grads: &mut [Option<Tensor>]) {
        match op {
            Op::Leaf => {}
            Op::Affine { weight, bias, x } => {
                let w = self.value(*weight);
                let xv = self.value(*x);
                let (out_dim, in_dim) = (w.shape()[0], w.shape()[1]);
                let mut gw = vec![0.0; out_dim * in_dim];
                let mut gb = vec![0.0; out_dim];
                let mut gx = vec![0.0; xv.len()];
                for (row, (xr, gr)) in xv
                    .data()
                    .chunks_exact(in_dim)
                    .zip(gy.data().chunks_exact(out_dim))
                    .enumerate()
                {
                    for o in 0..out_dim {
                        let g = gr[o];
                        gb[o] += g;
                        let wr = &w.data()[o * in_dim..(o + 1) * in_dim];
                        let gwr = &mut gw[o * in_dim..(o + 1) * in_dim];
                        let gxr = &mut gx[row * in_dim..(row + 1) * in_dim];
                        for i in 0..in_dim {
                            gwr[i] += g * xr[i];
                            gxr[i] += g * wr[i];
                        }
                    }
                }
                accumulate(grads, *weight, Tensor::from_parts(w.shape().to_vec(), gw));
                accumulate(grads, *bias, Tensor::from_parts(vec![out_dim], gb));
                accumulate(grads, *x, Tensor::from_parts(xv.shape().to_vec(), gx));
            }
            Op::Sigmoid(x) => {
                let gx = y
                    .data()
                    .iter()
                    .zip(gy.data())
                    .map(|(s, g)| g * s * (1.0 - s))
                    .collect();
                accumulate(grads, *x, Tensor::from_parts(y.shape().to_vec(), gx));
            }
            Op::ReduceMax { x, argmax } => {
                let xv = self.value(*x);
                let mut gx = vec![0.0; xv.len()];
                for (&src, g) in argmax.iter().zip(gy.data()) {
                    gx[src] += g;
                }
                accumulate(grads, *x, Tensor::from_parts(xv.shape().to_vec(), gx));
            }
            Op::ChannelGate { x, gate } => {
                let xv = self.value(*x);
                let gv = self.value(*gate);
                let d = gv.len();
                let mut gx = Vec::with_capacity(xv.len());
                let mut ggate = vec![0.0; d];
                for (xr, gr) in xv.data().chunks_exact(d).zip(gy.data().chunks_exact(d)) {
                    for c in 0..d {
                        gx.push(gr[c] * (1.0 + gv.data()[c]));
                        ggate[c] += gr[c] * xr[c];
                    }
                }
                accumulate(grads, *x, Tensor::from_parts(xv.shape().to_vec(), gx));
                accumulate(grads, *gate, Tensor::from_parts(vec![d], ggate));
            }
            Op::Cosine { g, x } => {
                let gvec = self.value(*g).data();
                let xv = self.value(*x);
                let d = gvec.len();
                let gn = ops::norm(gvec);
                let mut gx = vec![0.0; xv.len()];
                let mut gg = vec![0.0; d];
                for ((xr, &r), (gxr, &up)) in xv
                    .data()
                    .chunks_exact(d)
                    .zip(y.data())
                    .zip(gx.chunks_exact_mut(d).zip(gy.data()))
                {
                    let xn = ops::norm(xr);
                    if gn < ops::ZERO_NORM_GUARD || xn < ops::ZERO_NORM_GUARD {
                        continue;
                    }
                    let inv = 1.0 / (gn * xn);
                    for c in 0..d {
                        gxr[c] += up * (gvec[c] * inv - r * xr[c] / (xn * xn));
                        gg[c] += up * (xr[c] * inv - r * gvec[c] / (gn * gn));
                    }
                }
                accumulate(grads, *x, Tensor::from_parts(xv.shape().to_vec(), gx));
                accumulate(grads, *g, Tensor::from_parts(vec![d], gg));
            }
            Op::TopKMean { x, k, picked } => {
                let xv = self.value(*x);
                let sh = xv.shape();
                let (cells, d) = (sh[1] * sh[2], sh[3]);
                let mut gx = vec![0.0; xv.len()];
                let inv = 1.0 / *k as f64;
                for (seg, cells_picked) in picked.iter().enumerate() {
                    let up = &gy.data()[seg * d..(seg + 1) * d];
                    for &cell in cells_picked {
                        let base = (seg * cells + cell) * d;
                        for c in 0..d {
                            gx[base + c] += up[c] * inv;
                        }
                    }
                }
                accumulate(grads, *x, Tensor::from_parts(sh.to_vec(), gx));
            }
            Op::ColumnTopP { s, p, picked } => {
                let sv = self.value(*s);
                let m = sv.shape()[1];
                let mut gs = vec![0.0; sv.len()];
                let inv = 1.0 / *p as f64;
                for (c, rows) in picked.iter().enumerate() {
                    for &r in rows {
                        gs[r * m + c] += gy.data()[c] * inv;
                    }
                }
                accumulate(grads, *s, Tensor::from_parts(sv.shape().to_vec(), gs));
            }
            Op::NarrowLast { x, start } => {
                let xv = self.value(*x);
                let last = *xv.shape().last().unwrap();
                let len = *y.shape().last().unwrap();
                let mut gx = vec![0.0; xv.len()];
                for (dst, src) in gx.chunks_exact_mut(last).zip(gy.data().chunks_exact(len)) {
                    dst[*start..*start + len].copy_from_slice(src);
                }
                accumulate(grads, *x, Tensor::from_parts(xv.shape().to_vec(), gx));
            }
            Op::Bce { s, target, eps } => {
                let sv = self.value(*s);
                let gs = sv
                    .data()
                    .iter()
                    .zip(target.data())
                    .zip(gy.data())
                    .map(|((&p, &t), g)| g * ops::bce_grad_scalar(p, t, *eps))
                    .collect();
                accumulate(grads, *s, Tensor::from_parts(sv.shape().to_vec(), gs));
            }
            Op::MulConst { x, factor } => {
                let gx = gy
                    .data()
                    .iter()
                    .zip(factor.data())
                    .map(|(g, f)| g * f)
                    .collect();
                accumulate(grads, *x, Tensor::from_parts(y.shape().to_vec(), gx));
            }
            Op::Add(a, b) => {
                accumulate(grads, *a, gy.clone());
                accumulate(grads, *b, gy.clone());
            }
            Op::Scale(x, c) => {
                let gx = gy.data().iter().map(|g| g * c).collect();
                accumulate(grads, *x, Tensor::from_parts(y.shape().to_vec(), gx));
            }
            Op::Sum(x) => {
                let shape = self.value(*x).shape();
                accumulate(grads, *x, Tensor::full(shape, gy.item()));
            }
            Op::Mean(x) => {
                let xv = self.value(*x);
                accumulate(
                    grads,
                    *x,
                    Tensor::full(xv.shape(), gy.item() / xv.len() as f64),
                );
            }
        }
    }
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}
