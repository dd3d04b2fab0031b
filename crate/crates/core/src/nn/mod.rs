//! Layers, activations and losses built on the differentiable tensor ops.
//!
//! Parameters are leaf tensors with `requires_grad = true`. Layer-local
//! parameter names are `weight`, `bias`, `gamma` and `beta`; a [`Sequential`]
//! prefixes them with `layer{i}.`, which gives the stable names optimizers key
//! their state on.

mod activation;
mod batchnorm;
mod conv;
mod dense;
mod dropout;
mod loss;
mod sequential;

pub use activation::{activation, erf, gelu, relu, sigmoid, tanh, Activation, ActivationKind};
pub use batchnorm::{batchnorm, BatchNorm1d, BatchNormConfig};
pub use conv::{conv2d, Conv2d, ConvSpec};
pub use dense::{dense, Dense};
pub use dropout::{dropout, Dropout};
pub use loss::{cross_entropy, mse};
pub use sequential::Sequential;

use crate::error::Result;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Train,
    Eval,
}

/// Snapshot of a layer's learnable parameters, non-learnable buffers and mode.
#[derive(Clone, Debug)]
pub struct LayerState {
    pub params: Vec<(String, Tensor)>,
    pub buffers: Vec<(String, Tensor)>,
    pub mode: Mode,
}

pub trait Layer {
    fn forward(&mut self, x: &Tensor) -> Result<Tensor>;

    fn parameters(&self) -> Vec<(String, Tensor)> {
        Vec::new()
    }

    fn buffers(&self) -> Vec<(String, Tensor)> {
        Vec::new()
    }

    /// Switch train/eval behavior. Never touches parameters.
    fn set_mode(&mut self, _mode: Mode) {}

    fn mode(&self) -> Mode {
        Mode::Train
    }

    fn state(&self) -> LayerState {
        LayerState {
            params: self.parameters(),
            buffers: self.buffers(),
            mode: self.mode(),
        }
    }
}

/// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, marked as parameters.
pub(crate) fn init_param(shape: &[usize], fan_in: usize, seed: u64) -> Tensor {
    let bound = 1.0 / (fan_in.max(1) as f32).sqrt();
    Tensor::uniform(shape, -bound, bound, seed).requires_grad_(true)
}
