use crate::autograd::record;
use crate::error::Result;
use crate::ops::{map, zip};
use crate::tensor::Tensor;

use super::{Layer, Mode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActivationKind {
    Relu,
    Sigmoid,
    Tanh,
    /// Exact form `x·Φ(x)` with `Φ(x) = ½(1 + erf(x/√2))`.
    Gelu,
}

impl ActivationKind {
    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::Sigmoid => "sigmoid",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Gelu => "gelu",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "relu" => Some(ActivationKind::Relu),
            "sigmoid" => Some(ActivationKind::Sigmoid),
            "tanh" => Some(ActivationKind::Tanh),
            "gelu" => Some(ActivationKind::Gelu),
            _ => None,
        }
    }
}

/// Error function, via the Chebyshev-fitted complementary error function
/// (fractional error below 1.2e-7 everywhere).
pub fn erf(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98
                                + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let erfc = t * poly.exp();
    if x >= 0.0 {
        1.0 - erfc
    } else {
        erfc - 1.0
    }
}

fn sigmoid_scalar(x: f32) -> f32 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn gelu_scalar(x: f32) -> f32 {
    let x = x as f64;
    (x * std_normal_cdf(x)) as f32
}

fn gelu_grad(x: f32) -> f32 {
    let x = x as f64;
    (std_normal_cdf(x) + x * std_normal_pdf(x)) as f32
}

/// Pointwise nonlinearity with its analytic pullback.
pub fn activation(kind: ActivationKind, x: &Tensor) -> Result<Tensor> {
    let out = match kind {
        ActivationKind::Relu => map(x, |v| if v > 0.0 { v } else { 0.0 }),
        ActivationKind::Sigmoid => map(x, sigmoid_scalar),
        ActivationKind::Tanh => map(x, f32::tanh),
        ActivationKind::Gelu => map(x, gelu_scalar),
    };
    let saved_x = x.clone();
    let saved_y = out.clone();
    Ok(record(kind.name(), &[x], out, move |g| {
        let gx = match kind {
            ActivationKind::Relu => zip(g, &saved_x, |g, x| if x > 0.0 { g } else { 0.0 })?,
            ActivationKind::Sigmoid => zip(g, &saved_y, |g, s| g * s * (1.0 - s))?,
            ActivationKind::Tanh => zip(g, &saved_y, |g, t| g * (1.0 - t * t))?,
            ActivationKind::Gelu => zip(g, &saved_x, |g, x| g * gelu_grad(x))?,
        };
        Ok(vec![Some(gx)])
    }))
}

pub fn relu(x: &Tensor) -> Result<Tensor> {
    activation(ActivationKind::Relu, x)
}

pub fn sigmoid(x: &Tensor) -> Result<Tensor> {
    activation(ActivationKind::Sigmoid, x)
}

pub fn tanh(x: &Tensor) -> Result<Tensor> {
    activation(ActivationKind::Tanh, x)
}

pub fn gelu(x: &Tensor) -> Result<Tensor> {
    activation(ActivationKind::Gelu, x)
}

/// Parameter-free activation layer.
#[derive(Clone, Debug)]
pub struct Activation {
    kind: ActivationKind,
    mode: Mode,
}

impl Activation {
    pub fn new(kind: ActivationKind) -> Self {
        Activation {
            kind,
            mode: Mode::Train,
        }
    }

    pub fn kind(&self) -> ActivationKind {
        self.kind
    }
}

impl Layer for Activation {
    fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        activation(self.kind, x)
    }

    fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    fn mode(&self) -> Mode {
        self.mode
    }
}
