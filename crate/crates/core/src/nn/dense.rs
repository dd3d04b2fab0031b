use crate::error::{shape_err, Result};
use crate::tensor::Tensor;

use super::{init_param, Layer, Mode};

/// `x Wᵀ + 1 bᵀ` for `x (b×d_in)`, `W (d_out×d_in)`, `b (d_out)`.
pub fn dense(x: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    if x.rank() != 2 || weight.rank() != 2 || x.dims()[1] != weight.dims()[1] {
        return Err(shape_err(
            "dense",
            format!("input {} does not match weight {}", x.shape(), weight.shape()),
        ));
    }
    if bias.dims() != [weight.dims()[0]] {
        return Err(shape_err(
            "dense",
            format!("bias {} does not match weight {}", bias.shape(), weight.shape()),
        ));
    }
    x.matmul(weight)?.add(bias)
}

/// Fully connected layer.
#[derive(Clone, Debug)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
    mode: Mode,
}

impl Dense {
    pub fn new(d_in: usize, d_out: usize, seed: u64) -> Self {
        Dense {
            weight: init_param(&[d_out, d_in], d_in, seed),
            bias: init_param(&[d_out], d_in, seed ^ 0x5bd1_e995),
            mode: Mode::Train,
        }
    }

    /// Wrap existing tensors; both are marked as parameters.
    pub fn from_tensors(weight: Tensor, bias: Tensor) -> Self {
        Dense {
            weight: weight.requires_grad_(true),
            bias: bias.requires_grad_(true),
            mode: Mode::Train,
        }
    }

    pub fn in_features(&self) -> usize {
        self.weight.dims()[1]
    }

    pub fn out_features(&self) -> usize {
        self.weight.dims()[0]
    }
}

impl Layer for Dense {
    fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        dense(x, &self.weight, &self.bias)
    }

    fn parameters(&self) -> Vec<(String, Tensor)> {
        vec![
            ("weight".into(), self.weight.clone()),
            ("bias".into(), self.bias.clone()),
        ]
    }

    fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    fn mode(&self) -> Mode {
        self.mode
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_expansion() {
        let x = Tensor::from_vec(vec![1.0, 0.0], [1, 2]).unwrap();
        let w = Tensor::from_vec(vec![2.0, 3.0], [1, 2]).unwrap();
        let b = Tensor::from_vec(vec![5.0], [1]).unwrap();
        assert_eq!(dense(&x, &w, &b).unwrap().to_vec(), vec![7.0]);
    }

    #[test]
    fn identity_layer() {
        let x = Tensor::uniform([3, 4], -2.0, 2.0, 5);
        let y = dense(&x, &Tensor::eye(4), &Tensor::zeros([4])).unwrap();
        assert_eq!(y.to_vec(), x.to_vec());
    }

    #[test]
    fn shape_errors() {
        let w = Tensor::ones([2, 3]);
        assert!(dense(&Tensor::ones([1, 4]), &w, &Tensor::ones([2])).is_err());
        assert!(dense(&Tensor::ones([1, 3]), &w, &Tensor::ones([3])).is_err());
    }

    #[test]
    fn init_bounds() {
        let layer = Dense::new(16, 4, 3);
        assert!(layer.weight.requires_grad());
        assert!(layer.weight.to_vec().iter().all(|v| v.abs() <= 0.25));
        assert_eq!(layer.parameters().len(), 2);
    }
}
