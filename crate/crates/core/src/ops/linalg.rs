use crate::autograd::record;
use crate::error::{shape_err, Error, Result};
use crate::parallel::fill_chunks;
use crate::shape::Shape;
use crate::tensor::Tensor;

/// `Y = X Wᵀ` for row-major `X (m×k)` and `W (d×k)`. Both operands are read
/// along contiguous rows; each output accumulates over `k` in order.
fn matmul_kernel(x: &Tensor, w: &Tensor) -> Tensor {
    let (m, k) = (x.dims()[0], x.dims()[1]);
    let d = w.dims()[0];
    let (x, w) = (x.compact(), w.compact());
    let mut out = vec![0.0f32; m * d];
    {
        let xd = x.storage.read();
        let wd = w.storage.read();
        let xs = &xd[x.layout.offset..x.layout.offset + m * k];
        let ws = &wd[w.layout.offset..w.layout.offset + d * k];
        fill_chunks(&mut out, |start, chunk| {
            for (p, o) in chunk.iter_mut().enumerate() {
                let (i, j) = ((start + p) / d, (start + p) % d);
                let xr = &xs[i * k..(i + 1) * k];
                let wr = &ws[j * k..(j + 1) * k];
                let mut acc = 0.0f32;
                for (a, b) in xr.iter().zip(wr) {
                    acc += a * b;
                }
                *o = acc;
            }
        });
    }
    Tensor::from_parts(out, Shape::new(vec![m, d]))
}

impl Tensor {
    /// Matrix product against a row-major weight: `self (m×k)` times `wᵀ` for
    /// `w (d×k)`, giving `m×d`. Only 2-D operands are supported.
    pub fn matmul(&self, w: &Tensor) -> Result<Tensor> {
        for t in [self, w] {
            if t.rank() != 2 {
                return Err(Error::Rank {
                    op: "matmul",
                    expected: 2,
                    got: t.rank(),
                });
            }
        }
        if self.dims()[1] != w.dims()[1] {
            return Err(shape_err(
                "matmul",
                format!(
                    "inner extents differ: x is {} and w is {}",
                    self.shape(),
                    w.shape()
                ),
            ));
        }
        let out = matmul_kernel(self, w);
        let (x, w_saved) = (self.clone(), w.clone());
        let (need_x, need_w) = (self.requires_grad(), w.requires_grad());
        Ok(record("matmul", &[self, w], out, move |g| {
            // X̄ = Ȳ W and W̄ = Ȳᵀ X, both expressed through the X Wᵀ kernel.
            let gx = if need_x {
                Some(matmul_kernel(g, &w_saved.transpose2d()?))
            } else {
                None
            };
            let gw = if need_w {
                Some(matmul_kernel(&g.transpose2d()?, &x.transpose2d()?))
            } else {
                None
            };
            Ok(vec![gx, gw])
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_small_case() {
        let i2 = Tensor::eye(2);
        assert_eq!(i2.matmul(&i2).unwrap().to_vec(), i2.to_vec());
        let x = Tensor::from_vec(vec![1.0, 2.0], [1, 2]).unwrap();
        let w = Tensor::from_vec(vec![3.0, 4.0, 5.0, 6.0], [2, 2]).unwrap();
        assert_eq!(x.matmul(&w).unwrap().to_vec(), vec![11.0, 17.0]);
    }

    #[test]
    fn zeros_in_zeros_out() {
        let y = Tensor::zeros([3, 4]).matmul(&Tensor::uniform([5, 4], -1.0, 1.0, 2)).unwrap();
        assert_eq!(y.dims(), &[3, 5]);
        assert!(y.to_vec().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            Tensor::ones([2, 3]).matmul(&Tensor::ones([2, 4])),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            Tensor::ones([3]).matmul(&Tensor::ones([2, 3])),
            Err(Error::Rank { .. })
        ));
    }

    #[test]
    fn strided_operands() {
        let a = Tensor::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], [3, 2]).unwrap();
        // aᵀ is 2×3; aᵀ (aᵀ)ᵀ = aᵀ a
        let at = a.transpose2d().unwrap();
        let y = at.matmul(&at).unwrap();
        assert_eq!(y.to_vec(), vec![35.0, 44.0, 44.0, 56.0]);
    }
}
