//! Forward kernels shared by the value-level API and the gradient tape.
//!
//! Selection kernels also report the indices they picked and the gap to the
//! nearest rejected candidate; the tape uses both for its backward pass and
//! for flagging evaluation points that sit on a tie.

use crate::error::{Error, Result};
use crate::numerics::tensor::{strides_of, Tensor};

/// Norms below this are treated as zero by the cosine relation.
pub const ZERO_NORM_GUARD: f64 = 1e-12;

pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    Tensor::from_parts(
        x.shape().to_vec(),
        x.data().iter().map(|&v| sigmoid_scalar(v)).collect(),
    )
}

/// `W·x + b` for `x` of shape `[in]` or a batch of rows `[n, in]`.
pub fn affine(weight: &Tensor, bias: &Tensor, x: &Tensor) -> Result<Tensor> {
    let (out_dim, in_dim) = match weight.shape() {
        [o, i] => (*o, *i),
        s => return Err(Error::dim(format!("affine weight must be a matrix, got {s:?}"))),
    };
    bias.expect_shape(&[out_dim])?;
    let (rows, out_shape) = match x.shape() {
        [i] if *i == in_dim => (1, vec![out_dim]),
        [n, i] if *i == in_dim => (*n, vec![*n, out_dim]),
        s => {
            return Err(Error::dim(format!(
                "affine input {s:?} does not match weight {:?}",
                weight.shape()
            )))
        }
    };
    let w = weight.data();
    let mut out = Vec::with_capacity(rows * out_dim);
    for row in x.data().chunks_exact(in_dim) {
        for o in 0..out_dim {
            let wr = &w[o * in_dim..(o + 1) * in_dim];
            let dot: f64 = wr.iter().zip(row).map(|(a, b)| a * b).sum();
            out.push(dot + bias.data()[o]);
        }
    }
    debug_assert_eq!(out.len() / out_dim, rows);
    Tensor::new(out_shape, out)
}

/// Result of a max reduction: values, the flat input index that won each
/// group, and the smallest best-minus-runner-up gap over all groups.
pub struct MaxReduction {
    pub values: Tensor,
    pub argmax: Vec<usize>,
    pub margin: f64,
}

/// Maximum over `axes`, which are removed from the output shape.
/// Ties resolve to the first element in row-major order.
pub fn reduce_max(x: &Tensor, axes: &[usize]) -> Result<MaxReduction> {
    let rank = x.rank();
    let mut reduced = vec![false; rank];
    for &a in axes {
        if a >= rank {
            return Err(Error::dim(format!("axis {a} out of range for rank {rank}")));
        }
        if reduced[a] {
            return Err(Error::dim(format!("axis {a} listed twice")));
        }
        reduced[a] = true;
    }
    let out_shape: Vec<usize> = (0..rank)
        .filter(|&a| !reduced[a])
        .map(|a| x.shape()[a])
        .collect();
    let out_len: usize = out_shape.iter().product();
    let group_len = x.len() / out_len;

    // Output stride contributed by each input axis (0 on reduced axes).
    let kept_strides = strides_of(&out_shape);
    let mut axis_stride = vec![0; rank];
    let mut k = 0;
    for a in 0..rank {
        if !reduced[a] {
            axis_stride[a] = kept_strides[k];
            k += 1;
        }
    }

    let mut best = vec![f64::NEG_INFINITY; out_len];
    let mut second = vec![f64::NEG_INFINITY; out_len];
    let mut argmax = vec![usize::MAX; out_len];
    let mut coord = vec![0usize; rank];
    for (flat, &v) in x.data().iter().enumerate() {
        let o: usize = coord.iter().zip(&axis_stride).map(|(c, s)| c * s).sum();
        if argmax[o] == usize::MAX || v > best[o] {
            second[o] = best[o];
            best[o] = v;
            argmax[o] = flat;
        } else if v > second[o] {
            second[o] = v;
        }
        for a in (0..rank).rev() {
            coord[a] += 1;
            if coord[a] < x.shape()[a] {
                break;
            }
            coord[a] = 0;
        }
    }
    let margin = if group_len > 1 {
        best.iter()
            .zip(&second)
            .map(|(b, s)| b - s)
            .fold(f64::INFINITY, f64::min)
    } else {
        f64::INFINITY
    };
    Ok(MaxReduction {
        values: Tensor::from_parts(out_shape, best),
        argmax,
        margin,
    })
}

/// `(1 + gate[c])·x` along the trailing channel axis, i.e. `gate·x + x` with
/// the factor formed first.
pub fn channel_gate(x: &Tensor, gate: &Tensor) -> Result<Tensor> {
    let d = channel_extent(x, gate)?;
    let g = gate.data();
    let data = x
        .data()
        .chunks_exact(d)
        .flat_map(|v| v.iter().zip(g).map(|(xv, gv)| (1.0 + gv) * xv))
        .collect();
    Tensor::new(x.shape().to_vec(), data)
}

fn channel_extent(x: &Tensor, g: &Tensor) -> Result<usize> {
    let d = match g.shape() {
        [d] => *d,
        s => return Err(Error::dim(format!("channel vector must be rank 1, got {s:?}"))),
    };
    if x.shape().last() != Some(&d) {
        return Err(Error::dim(format!(
            "channel extent {d} does not match trailing axis of {:?}",
            x.shape()
        )));
    }
    Ok(d)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Cosine similarity of `g` with every trailing-axis vector of `x`.
/// Output drops the trailing axis. Returns 0 where either norm is below the guard.
pub fn cosine_relation(g: &Tensor, x: &Tensor) -> Result<Tensor> {
    let d = channel_extent(x, g)?;
    let gn = norm(g.data());
    let shape = x.shape()[..x.rank() - 1].to_vec();
    let data = x
        .data()
        .chunks_exact(d)
        .map(|v| {
            let vn = norm(v);
            if gn < ZERO_NORM_GUARD || vn < ZERO_NORM_GUARD {
                0.0
            } else {
                let dot: f64 = v.iter().zip(g.data()).map(|(a, b)| a * b).sum();
                (dot / (gn * vn)).clamp(-1.0, 1.0)
            }
        })
        .collect();
    Tensor::new(shape, data)
}

/// Indices of the `k` largest values, ordered by value descending then index
/// ascending, plus the gap between the k-th pick and the best rejected value.
pub fn top_k_indices(values: &[f64], k: usize) -> (Vec<usize>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    // Stable sort keeps the lower index first among equal values.
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let margin = if k < values.len() {
        values[order[k - 1]] - values[order[k]]
    } else {
        f64::INFINITY
    };
    order.truncate(k);
    (order, margin)
}

pub struct Selection {
    pub values: Tensor,
    /// Chosen indices per output group.
    pub picked: Vec<Vec<usize>>,
    pub margin: f64,
}

/// Per segment: mean of the `k` spatial vectors with the highest relation score.
/// `x` is `[T, w, h, d]` and `relation` is `[T, w, h]`; output is `[T, d]`.
pub fn top_k_mean(x: &Tensor, relation: &Tensor, k: usize) -> Result<Selection> {
    let (t, w, h, d) = match x.shape() {
        [t, w, h, d] => (*t, *w, *h, *d),
        s => return Err(Error::dim(format!("feature maps must be rank 4, got {s:?}"))),
    };
    relation.expect_shape(&[t, w, h])?;
    let cells = w * h;
    if k == 0 || k > cells {
        return Err(Error::config(format!("top-k needs 1 <= k <= {cells}, got {k}")));
    }
    let mut out = Vec::with_capacity(t * d);
    let mut picked = Vec::with_capacity(t);
    let mut margin = f64::INFINITY;
    for seg in 0..t {
        let r = &relation.data()[seg * cells..(seg + 1) * cells];
        let (idx, m) = top_k_indices(r, k);
        margin = margin.min(m);
        let mut acc = vec![0.0; d];
        for &cell in &idx {
            let base = (seg * cells + cell) * d;
            for (a, v) in acc.iter_mut().zip(&x.data()[base..base + d]) {
                *a += v;
            }
        }
        out.extend(acc.into_iter().map(|a| a / k as f64));
        picked.push(idx);
    }
    Ok(Selection {
        values: Tensor::new(vec![t, d], out)?,
        picked,
        margin,
    })
}

/// Per column of a `[T, m]` matrix: mean of the `p` largest entries. Output `[m]`.
pub fn column_top_p_mean(s: &Tensor, p: usize) -> Result<Selection> {
    let (t, m) = match s.shape() {
        [t, m] => (*t, *m),
        sh => return Err(Error::dim(format!("segment scores must be a matrix, got {sh:?}"))),
    };
    if p == 0 || p > t {
        return Err(Error::config(format!("top-p needs 1 <= p <= {t}, got {p}")));
    }
    let mut out = Vec::with_capacity(m);
    let mut picked = Vec::with_capacity(m);
    let mut margin = f64::INFINITY;
    let mut column = vec![0.0; t];
    for c in 0..m {
        for (row, v) in column.iter_mut().enumerate() {
            *v = s.data()[row * m + c];
        }
        let (rows, gap) = top_k_indices(&column, p);
        margin = margin.min(gap);
        out.push(rows.iter().map(|&r| column[r]).sum::<f64>() / p as f64);
        picked.push(rows);
    }
    Ok(Selection {
        values: Tensor::new(vec![m], out)?,
        picked,
        margin,
    })
}

/// Slice `[start, start+len)` of the trailing axis.
pub fn narrow_last(x: &Tensor, start: usize, len: usize) -> Result<Tensor> {
    let last = *x
        .shape()
        .last()
        .ok_or_else(|| Error::dim("cannot narrow a scalar"))?;
    if len == 0 || start + len > last {
        return Err(Error::dim(format!(
            "narrow [{start}, {}) outside trailing extent {last}",
            start + len
        )));
    }
    let mut shape = x.shape().to_vec();
    *shape.last_mut().unwrap() = len;
    let data = x
        .data()
        .chunks_exact(last)
        .flat_map(|row| row[start..start + len].iter().copied())
        .collect();
    Ok(Tensor::from_parts(shape, data))
}

pub fn bce_scalar(s: f64, y: f64, eps: f64) -> f64 {
    let s = s.clamp(eps, 1.0 - eps);
    -(y * s.ln() + (1.0 - y) * (1.0 - s).ln())
}

/// d/ds of [`bce_scalar`]; zero where the clamp is active.
pub fn bce_grad_scalar(s: f64, y: f64, eps: f64) -> f64 {
    if s < eps || s > 1.0 - eps {
        0.0
    } else {
        -y / s + (1.0 - y) / (1.0 - s)
    }
}

/// Elementwise binary cross-entropy against a same-shaped target.
pub fn bce(s: &Tensor, target: &Tensor, eps: f64) -> Result<Tensor> {
    s.zip_map(target, |p, y| bce_scalar(p, y, eps))
}
