//! Tensor operations. Every public op computes its value with an untracked
//! kernel and then hands the result to [`crate::autograd::record`] together
//! with its pullback.

mod binary;
mod linalg;
mod reduce;
mod unary;
mod view;

pub use binary::BinaryOp;
pub use reduce::ReduceOp;
pub use unary::UnaryOp;

use std::sync::Arc;

use crate::error::Result;
use crate::layout::for_each_offsets;
use crate::parallel::fill_chunks;
use crate::shape::{broadcast_dims, Shape};
use crate::tensor::Tensor;

/// Apply `f` to every element. Untracked.
pub(crate) fn map(a: &Tensor, f: impl Fn(f32) -> f32 + Sync) -> Tensor {
    let n = a.numel();
    let mut out = vec![0.0f32; n];
    {
        let data = a.storage.read();
        if a.is_contiguous() {
            let src = &data[a.layout.offset..a.layout.offset + n];
            fill_chunks(&mut out, |start, chunk| {
                let end = start + chunk.len();
                for (o, &x) in chunk.iter_mut().zip(&src[start..end]) {
                    *o = f(x);
                }
            });
        } else {
            let layout = &a.layout;
            fill_chunks(&mut out, |start, chunk| {
                for_each_offsets(
                    layout.dims(),
                    [&layout.strides],
                    [layout.offset],
                    start,
                    start + chunk.len(),
                    |p, [o]| chunk[p - start] = f(data[o]),
                );
            });
        }
    }
    Tensor::from_parts(out, a.shape().clone())
}

/// Combine two tensors through their broadcast plan. Neither operand is expanded
/// in memory: broadcast axes are walked with stride 0. Untracked.
pub(crate) fn zip(a: &Tensor, b: &Tensor, f: impl Fn(f32, f32) -> f32 + Sync) -> Result<Tensor> {
    let shape = Shape::new(broadcast_dims(a.dims(), b.dims())?);
    let n = shape.numel();
    let mut out = vec![0.0f32; n];
    {
        let ga = a.storage.read();
        let gb_owned;
        let db: &[f32] = if Arc::ptr_eq(&a.storage, &b.storage) {
            &ga
        } else {
            gb_owned = b.storage.read();
            &gb_owned
        };
        let da: &[f32] = &ga;
        if a.dims() == b.dims() && a.is_contiguous() && b.is_contiguous() {
            let (oa, ob) = (a.layout.offset, b.layout.offset);
            let (sa, sb) = (&da[oa..oa + n], &db[ob..ob + n]);
            fill_chunks(&mut out, |start, chunk| {
                let end = start + chunk.len();
                for ((o, &x), &y) in chunk.iter_mut().zip(&sa[start..end]).zip(&sb[start..end]) {
                    *o = f(x, y);
                }
            });
        } else {
            let la = a.layout.broadcast_to(&shape);
            let lb = b.layout.broadcast_to(&shape);
            fill_chunks(&mut out, |start, chunk| {
                for_each_offsets(
                    shape.dims(),
                    [&la.strides, &lb.strides],
                    [la.offset, lb.offset],
                    start,
                    start + chunk.len(),
                    |p, [oa, ob]| chunk[p - start] = f(da[oa], db[ob]),
                );
            });
        }
    }
    Ok(Tensor::from_parts(out, shape))
}
