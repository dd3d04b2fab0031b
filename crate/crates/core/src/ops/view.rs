use crate::autograd::record;
use crate::error::{shape_err, Error, Result};
use crate::layout::Layout;
use crate::shape::{broadcast_dims, Shape};
use crate::tensor::Tensor;

impl Tensor {
    /// Same elements under a new shape.
    ///
    /// A contiguous input yields a view over the same storage; a strided input is
    /// first compacted, so the result owns a fresh buffer. Use
    /// [`Tensor::shares_storage`] to tell which happened.
    pub fn reshape(&self, shape: impl Into<Shape>) -> Result<Tensor> {
        let shape = shape.into();
        if shape.numel() != self.numel() {
            return Err(shape_err(
                "reshape",
                format!("cannot reshape {} into {shape}", self.shape()),
            ));
        }
        let out = if self.is_contiguous() {
            self.view_with(Layout {
                strides: shape.contiguous_strides(),
                shape,
                offset: self.layout.offset,
            })
        } else {
            Tensor::from_parts(self.to_vec(), shape)
        };
        let in_shape = self.shape().clone();
        Ok(record("reshape", &[self], out, move |g| {
            Ok(vec![Some(g.reshape(in_shape.clone())?)])
        }))
    }

    /// Swap the two axes of a matrix. Always a zero-copy strided view.
    pub fn transpose2d(&self) -> Result<Tensor> {
        if self.rank() != 2 {
            return Err(Error::Rank {
                op: "transpose2d",
                expected: 2,
                got: self.rank(),
            });
        }
        let out = self.view_with(self.layout.transposed2d());
        Ok(record("transpose2d", &[self], out, |g| {
            Ok(vec![Some(g.transpose2d()?)])
        }))
    }

    /// Virtually expand to `shape` (stride 0 on broadcast axes). Zero-copy.
    pub fn broadcast_to(&self, shape: impl Into<Shape>) -> Result<Tensor> {
        let shape = shape.into();
        let dims = broadcast_dims(self.dims(), shape.dims())?;
        if dims != shape.dims() {
            return Err(shape_err(
                "broadcast_to",
                format!("{} does not broadcast to {shape}", self.shape()),
            ));
        }
        let out = self.view_with(self.layout.broadcast_to(&shape));
        let in_shape = self.shape().clone();
        Ok(record("broadcast_to", &[self], out, move |g| {
            Ok(vec![Some(g.reduce_to_shape(&in_shape)?)])
        }))
    }

    /// Sum `self` over every axis that broadcasting `target` up to `self.shape()`
    /// would have expanded (left-padded axes included), then reshape to `target`.
    /// This is the pullback of broadcasting.
    pub fn reduce_to_shape(&self, target: &Shape) -> Result<Tensor> {
        if self.shape() == target {
            return Ok(self.clone());
        }
        let dims = broadcast_dims(target.dims(), self.dims())
            .ok()
            .filter(|d| d == self.dims())
            .ok_or_else(|| {
                shape_err(
                    "reduce_to_shape",
                    format!("{target} does not broadcast to {}", self.shape()),
                )
            })?;
        let pad = dims.len() - target.rank();
        let axes: Vec<usize> = (0..dims.len())
            .filter(|&a| a < pad || (target.dims()[a - pad] == 1 && dims[a] != 1))
            .collect();
        let summed = if axes.is_empty() {
            self.clone()
        } else {
            self.sum(Some(&axes), true)?
        };
        summed.reshape(target.clone())
    }

    /// Row-major copy of a strided tensor; a contiguous tensor is returned as is.
    pub fn contiguous(&self) -> Result<Tensor> {
        if self.is_contiguous() {
            return Ok(self.clone());
        }
        let out = self.compact();
        Ok(record("contiguous", &[self], out, |g| Ok(vec![Some(g.clone())])))
    }
}
