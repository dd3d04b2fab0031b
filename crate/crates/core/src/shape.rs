use std::fmt;

use crate::error::{Error, Result};

/// Ordered list of extents. An empty list is a scalar with one element.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Self {
        Shape(dims.into())
    }

    pub fn scalar() -> Self {
        Shape(Vec::new())
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    /// Product of extents; 1 for a scalar, 0 when any extent is 0.
    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }

    /// Canonical row-major strides.
    pub fn contiguous_strides(&self) -> Vec<usize> {
        let mut strides = vec![0; self.0.len()];
        let mut acc = 1;
        for (s, &d) in strides.iter_mut().zip(&self.0).rev() {
            *s = acc;
            acc *= d.max(1);
        }
        strides
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<usize>> for Shape {
    fn from(v: Vec<usize>) -> Self {
        Shape(v)
    }
}

impl From<&[usize]> for Shape {
    fn from(v: &[usize]) -> Self {
        Shape(v.to_vec())
    }
}

impl<const N: usize> From<[usize; N]> for Shape {
    fn from(v: [usize; N]) -> Self {
        Shape(v.to_vec())
    }
}

impl From<&Shape> for Shape {
    fn from(s: &Shape) -> Self {
        s.clone()
    }
}

/// Result of pairing two shapes under NumPy broadcasting.
///
/// The strides are the canonical row-major strides of each operand re-expressed
/// over `result_shape`: left-padded axes and expanded size-1 axes get stride 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BroadcastPlan {
    pub result_shape: Shape,
    pub left_strides: Vec<usize>,
    pub right_strides: Vec<usize>,
}

/// Pair two shapes: left-pad the shorter with 1s, then each axis pairs when the
/// extents are equal or either is 1.
pub fn broadcast_shapes(a: &Shape, b: &Shape) -> Result<BroadcastPlan> {
    let result = broadcast_dims(a.dims(), b.dims())?;
    let result_shape = Shape::new(result);
    Ok(BroadcastPlan {
        left_strides: expand_strides(a.dims(), &a.contiguous_strides(), result_shape.dims()),
        right_strides: expand_strides(b.dims(), &b.contiguous_strides(), result_shape.dims()),
        result_shape,
    })
}

pub(crate) fn broadcast_dims(a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = Vec::with_capacity(rank);
    for axis in 0..rank {
        let da = padded(a, rank, axis);
        let db = padded(b, rank, axis);
        let d = if da == db || db == 1 {
            da
        } else if da == 1 {
            db
        } else {
            return Err(Error::Broadcast {
                lhs: a.to_vec(),
                rhs: b.to_vec(),
                axis,
            });
        };
        out.push(d);
    }
    Ok(out)
}

fn padded(dims: &[usize], rank: usize, axis: usize) -> usize {
    let pad = rank - dims.len();
    if axis < pad {
        1
    } else {
        dims[axis - pad]
    }
}

/// Re-express `strides` of an operand with extents `dims` over the broadcast
/// `target`. Caller guarantees `dims` broadcasts to `target`.
pub(crate) fn expand_strides(dims: &[usize], strides: &[usize], target: &[usize]) -> Vec<usize> {
    let pad = target.len() - dims.len();
    let mut out = vec![0; target.len()];
    for (i, (&d, &s)) in dims.iter().zip(strides).enumerate() {
        out[pad + i] = if d == 1 && target[pad + i] != 1 { 0 } else { s };
    }
    out
}

/// Validate and normalize an axis set for a tensor of the given rank.
pub(crate) fn normalize_axes(axes: Option<&[usize]>, rank: usize) -> Result<Vec<bool>> {
    let mut reduced = vec![axes.is_none(); rank];
    if let Some(axes) = axes {
        for &axis in axes {
            if axis >= rank {
                return Err(Error::AxisOutOfRange { axis, rank });
            }
            reduced[axis] = true;
        }
    }
    Ok(reduced)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(a: &[usize], b: &[usize]) -> Result<BroadcastPlan> {
        broadcast_shapes(&Shape::from(a), &Shape::from(b))
    }

    #[test]
    fn scalar_and_empty_counts() {
        assert_eq!(Shape::scalar().numel(), 1);
        assert_eq!(Shape::from([2, 0, 3]).numel(), 0);
        assert_eq!(Shape::from([2, 3, 4]).contiguous_strides(), vec![12, 4, 1]);
    }

    #[test]
    fn row_broadcast() {
        let p = plan(&[2, 3], &[3]).unwrap();
        assert_eq!(p.result_shape.dims(), &[2, 3]);
        assert_eq!(p.left_strides, vec![3, 1]);
        assert_eq!(p.right_strides, vec![0, 1]);
    }

    #[test]
    fn both_sides_expand() {
        let p = plan(&[4, 1, 5], &[3, 1]).unwrap();
        assert_eq!(p.result_shape.dims(), &[4, 3, 5]);
        assert_eq!(p.left_strides, vec![5, 0, 1]);
        assert_eq!(p.right_strides, vec![0, 1, 0]);
    }

    #[test]
    fn incompatible_names_axis() {
        match plan(&[2, 3], &[4]) {
            Err(Error::Broadcast { axis, .. }) => assert_eq!(axis, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn commutative_result() {
        let pairs: [(&[usize], &[usize]); 4] = [
            (&[2, 3], &[3]),
            (&[4, 1, 5], &[3, 1]),
            (&[1], &[7, 2]),
            (&[], &[2, 2]),
        ];
        for (a, b) in pairs {
            assert_eq!(
                plan(a, b).unwrap().result_shape,
                plan(b, a).unwrap().result_shape
            );
        }
    }

    #[test]
    fn zero_extent_broadcasts_against_one() {
        let p = plan(&[0, 3], &[1, 3]).unwrap();
        assert_eq!(p.result_shape.dims(), &[0, 3]);
    }
}
