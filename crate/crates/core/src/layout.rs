//! Strided views over flat storage and the odometer used by every non-contiguous kernel.

use crate::shape::{expand_strides, Shape};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Layout {
    pub shape: Shape,
    pub strides: Vec<usize>,
    pub offset: usize,
}

impl Layout {
    pub fn contiguous(shape: Shape) -> Self {
        let strides = shape.contiguous_strides();
        Layout {
            shape,
            strides,
            offset: 0,
        }
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn numel(&self) -> usize {
        self.shape.numel()
    }

    /// Row-major with no gaps. Strides on extent-1 axes are irrelevant.
    pub fn is_contiguous(&self) -> bool {
        let canonical = self.shape.contiguous_strides();
        self.dims()
            .iter()
            .zip(self.strides.iter().zip(&canonical))
            .all(|(&d, (&s, &c))| d <= 1 || s == c)
    }

    /// Largest flat index reachable, or `None` for an empty view.
    pub fn max_index(&self) -> Option<usize> {
        if self.numel() == 0 {
            return None;
        }
        Some(
            self.offset
                + self
                    .dims()
                    .iter()
                    .zip(&self.strides)
                    .map(|(&d, &s)| (d - 1) * s)
                    .sum::<usize>(),
        )
    }

    pub fn broadcast_to(&self, target: &Shape) -> Layout {
        Layout {
            strides: expand_strides(self.dims(), &self.strides, target.dims()),
            shape: target.clone(),
            offset: self.offset,
        }
    }

    pub fn transposed2d(&self) -> Layout {
        let d = self.dims();
        Layout {
            shape: Shape::new(vec![d[1], d[0]]),
            strides: vec![self.strides[1], self.strides[0]],
            offset: self.offset,
        }
    }

    pub fn offset_of(&self, index: &[usize]) -> usize {
        self.offset
            + index
                .iter()
                .zip(&self.strides)
                .map(|(&i, &s)| i * s)
                .sum::<usize>()
    }
}

/// Walk logical positions `start..end` of a row-major iteration over `dims`,
/// handing `f` the position and the storage offset of each of `N` operands.
pub(crate) fn for_each_offsets<const N: usize>(
    dims: &[usize],
    strides: [&[usize]; N],
    bases: [usize; N],
    start: usize,
    end: usize,
    mut f: impl FnMut(usize, [usize; N]),
) {
    if start >= end {
        return;
    }
    let rank = dims.len();
    if rank == 0 {
        f(0, bases);
        return;
    }
    let mut index = vec![0usize; rank];
    let mut rem = start;
    for axis in (0..rank).rev() {
        index[axis] = rem % dims[axis];
        rem /= dims[axis];
    }
    let last = rank - 1;
    let mut pos = start;
    while pos < end {
        let mut offs = bases;
        for k in 0..N {
            offs[k] += index
                .iter()
                .zip(strides[k])
                .map(|(&i, &s)| i * s)
                .sum::<usize>();
        }
        let run = (dims[last] - index[last]).min(end - pos);
        for _ in 0..run {
            f(pos, offs);
            for k in 0..N {
                offs[k] += strides[k][last];
            }
            pos += 1;
        }
        index[last] += run;
        let mut axis = last;
        while index[axis] == dims[axis] && axis > 0 {
            index[axis] = 0;
            axis -= 1;
            index[axis] += 1;
        }
    }
}
