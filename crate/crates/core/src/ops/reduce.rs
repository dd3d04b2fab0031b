//! Sum, mean and max reductions.
//!
//! Summation order is fixed: along reduced axes each output element accumulates
//! its inputs sequentially in row-major order. A reduction over every axis sums
//! fixed 16384-element chunks sequentially and then adds the chunk partials in
//! chunk order; chunk partials may be computed on several threads, but the
//! result does not depend on how many.

use crate::autograd::record;
use crate::error::{Error, Result};
use crate::layout::{for_each_offsets, Layout};
use crate::parallel::{chunk_partials, fill_chunks, REDUCE_CHUNK};
use crate::shape::{normalize_axes, Shape};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReduceOp {
    Sum,
    Mean,
    /// Ties resolve to the first maximal element in row-major order; the
    /// gradient flows to that element only.
    Max,
}

impl ReduceOp {
    pub fn name(self) -> &'static str {
        match self {
            ReduceOp::Sum => "sum",
            ReduceOp::Mean => "mean",
            ReduceOp::Max => "max",
        }
    }
}

/// Kept and reduced axes of a tensor, with actual and canonical strides for each.
struct AxisSplit {
    kept_dims: Vec<usize>,
    kept_strides: Vec<usize>,
    kept_canon: Vec<usize>,
    red_dims: Vec<usize>,
    red_strides: Vec<usize>,
    red_canon: Vec<usize>,
}

impl AxisSplit {
    fn new(t: &Tensor, reduced: &[bool]) -> Self {
        let canon = t.shape().contiguous_strides();
        let mut s = AxisSplit {
            kept_dims: Vec::new(),
            kept_strides: Vec::new(),
            kept_canon: Vec::new(),
            red_dims: Vec::new(),
            red_strides: Vec::new(),
            red_canon: Vec::new(),
        };
        for (axis, &d) in t.dims().iter().enumerate() {
            if reduced[axis] {
                s.red_dims.push(d);
                s.red_strides.push(t.strides()[axis]);
                s.red_canon.push(canon[axis]);
            } else {
                s.kept_dims.push(d);
                s.kept_strides.push(t.strides()[axis]);
                s.kept_canon.push(canon[axis]);
            }
        }
        s
    }

    /// Storage offset and logical flat index of the first input element feeding output `pos`.
    fn bases(&self, pos: usize, offset: usize) -> (usize, usize) {
        let mut rem = pos;
        let (mut off, mut flat) = (offset, 0);
        for i in (0..self.kept_dims.len()).rev() {
            let idx = rem % self.kept_dims[i];
            rem /= self.kept_dims[i];
            off += idx * self.kept_strides[i];
            flat += idx * self.kept_canon[i];
        }
        (off, flat)
    }

    fn reduced_count(&self) -> usize {
        self.red_dims.iter().product()
    }
}

fn out_shape(dims: &[usize], reduced: &[bool], keepdim: bool) -> Shape {
    let mut out = Vec::with_capacity(dims.len());
    for (&d, &r) in dims.iter().zip(reduced) {
        if !r {
            out.push(d);
        } else if keepdim {
            out.push(1);
        }
    }
    Shape::new(out)
}

fn sum_values(t: &Tensor, split: &AxisSplit, full: bool, n_out: usize) -> Vec<f32> {
    if full {
        let total = t.with_values(|v| {
            chunk_partials(v.len(), REDUCE_CHUNK, |r| {
                v[r].iter().fold(0.0f32, |acc, &x| acc + x)
            })
            .into_iter()
            .fold(0.0f32, |acc, p| acc + p)
        });
        return vec![total; n_out];
    }
    let mut out = vec![0.0f32; n_out];
    let data = t.storage.read();
    let count = split.reduced_count();
    fill_chunks(&mut out, |start, chunk| {
        for (i, o) in chunk.iter_mut().enumerate() {
            let (base, _) = split.bases(start + i, t.layout.offset);
            let mut acc = 0.0f32;
            for_each_offsets(&split.red_dims, [&split.red_strides], [base], 0, count, |_, [off]| {
                acc += data[off]
            });
            *o = acc;
        }
    });
    out
}

fn max_values(t: &Tensor, split: &AxisSplit, n_out: usize) -> Result<(Vec<f32>, Vec<usize>)> {
    let count = split.reduced_count();
    if count == 0 && n_out > 0 {
        return Err(Error::EmptyReduction { op: "max" });
    }
    let data = t.storage.read();
    let mut values = Vec::with_capacity(n_out);
    let mut argmax = Vec::with_capacity(n_out);
    for pos in 0..n_out {
        let (base, flat) = split.bases(pos, t.layout.offset);
        let mut best = (f32::NEG_INFINITY, usize::MAX);
        for_each_offsets(
            &split.red_dims,
            [&split.red_strides, &split.red_canon],
            [base, flat],
            0,
            count,
            |_, [off, idx]| {
                let v = data[off];
                // NaN propagates.
                if best.1 == usize::MAX || v > best.0 || (v.is_nan() && !best.0.is_nan()) {
                    best = (v, idx);
                }
            },
        );
        values.push(best.0);
        argmax.push(best.1);
    }
    Ok((values, argmax))
}

/// Broadcast a reduced cotangent back over the input shape.
fn expand_back(g: &Tensor, in_shape: &Shape, reduced: &[bool]) -> Tensor {
    let keep = out_shape(in_shape.dims(), reduced, true);
    let g = g.compact();
    let as_keep = g.view_with(Layout {
        strides: keep.contiguous_strides(),
        shape: keep,
        offset: g.layout.offset,
    });
    let expanded = as_keep.view_with(as_keep.layout.broadcast_to(in_shape));
    Tensor::from_parts(expanded.to_vec(), in_shape.clone())
}

impl Tensor {
    /// Reduce over `axes` (all axes when `None`), dropping them unless `keepdim`.
    pub fn reduce(&self, op: ReduceOp, axes: Option<&[usize]>, keepdim: bool) -> Result<Tensor> {
        let reduced = normalize_axes(axes, self.rank())?;
        let full = reduced.iter().all(|&r| r);
        let shape = out_shape(self.dims(), &reduced, keepdim);
        let n_out = shape.numel();
        let split = AxisSplit::new(self, &reduced);
        let count = split.reduced_count();
        let in_shape = self.shape().clone();

        match op {
            ReduceOp::Sum | ReduceOp::Mean => {
                let mut values = sum_values(self, &split, full, n_out);
                let scale = if op == ReduceOp::Mean { 1.0 / count as f32 } else { 1.0 };
                if op == ReduceOp::Mean {
                    // 0/0 for an empty extent gives NaN.
                    for v in &mut values {
                        *v /= count as f32;
                    }
                }
                let out = Tensor::from_parts(values, shape);
                Ok(record(op.name(), &[self], out, move |g| {
                    let mut gx = expand_back(g, &in_shape, &reduced);
                    if op == ReduceOp::Mean {
                        gx = super::map(&gx, |v| v * scale);
                    }
                    Ok(vec![Some(gx)])
                }))
            }
            ReduceOp::Max => {
                let (values, argmax) = max_values(self, &split, n_out)?;
                let out = Tensor::from_parts(values, shape);
                Ok(record("max", &[self], out, move |g| {
                    let gv = g.to_vec();
                    let mut gx = vec![0.0f32; in_shape.numel()];
                    for (&idx, &v) in argmax.iter().zip(&gv) {
                        gx[idx] += v;
                    }
                    Ok(vec![Some(Tensor::from_parts(gx, in_shape.clone()))])
                }))
            }
        }
    }

    pub fn sum(&self, axes: Option<&[usize]>, keepdim: bool) -> Result<Tensor> {
        self.reduce(ReduceOp::Sum, axes, keepdim)
    }

    pub fn mean(&self, axes: Option<&[usize]>, keepdim: bool) -> Result<Tensor> {
        self.reduce(ReduceOp::Mean, axes, keepdim)
    }

    pub fn max(&self, axes: Option<&[usize]>, keepdim: bool) -> Result<Tensor> {
        self.reduce(ReduceOp::Max, axes, keepdim)
    }

    pub fn sum_all(&self) -> Result<Tensor> {
        self.sum(None, false)
    }

    pub fn mean_all(&self) -> Result<Tensor> {
        self.mean(None, false)
    }
}
