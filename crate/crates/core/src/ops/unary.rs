use crate::autograd::record;
use crate::error::Result;
use crate::tensor::Tensor;

use super::{map, zip};

/// Pointwise functions. Out-of-domain inputs follow IEEE-754 (log(0) = -inf, sqrt(-1) = NaN).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }

    pub fn apply(self, x: f32) -> f32 {
        match self {
            UnaryOp::Neg => -x,
            UnaryOp::Exp => x.exp(),
            UnaryOp::Log => x.ln(),
            UnaryOp::Sqrt => x.sqrt(),
            UnaryOp::Abs => x.abs(),
        }
    }
}

fn sign(x: f32) -> f32 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Tensor {
    pub fn unary(&self, op: UnaryOp) -> Result<Tensor> {
        let out = map(self, |x| op.apply(x));
        let x = self.clone();
        let y = out.clone();
        Ok(record(op.name(), &[self], out, move |g| {
            let gx = match op {
                UnaryOp::Neg => map(g, |v| -v),
                UnaryOp::Exp => zip(g, &y, |g, y| g * y)?,
                UnaryOp::Log => zip(g, &x, |g, x| g / x)?,
                UnaryOp::Sqrt => zip(g, &y, |g, y| g * 0.5 / y)?,
                UnaryOp::Abs => zip(g, &x, |g, x| g * sign(x))?,
            };
            Ok(vec![Some(gx)])
        }))
    }

    pub fn neg(&self) -> Result<Tensor> {
        self.unary(UnaryOp::Neg)
    }

    pub fn exp(&self) -> Result<Tensor> {
        self.unary(UnaryOp::Exp)
    }

    pub fn log(&self) -> Result<Tensor> {
        self.unary(UnaryOp::Log)
    }

    pub fn sqrt(&self) -> Result<Tensor> {
        self.unary(UnaryOp::Sqrt)
    }

    pub fn abs(&self) -> Result<Tensor> {
        self.unary(UnaryOp::Abs)
    }
}
