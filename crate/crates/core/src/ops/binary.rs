use crate::autograd::record;
use crate::error::Result;
use crate::tensor::Tensor;

use super::{map, zip};

/// Broadcasting binary arithmetic. Division follows IEEE-754 (x/0 is ±inf or NaN).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::Div => "div",
        }
    }

    pub fn apply(self, x: f32, y: f32) -> f32 {
        match self {
            BinaryOp::Add => x + y,
            BinaryOp::Sub => x - y,
            BinaryOp::Mul => x * y,
            BinaryOp::Div => x / y,
        }
    }
}

impl Tensor {
    pub fn binary(&self, op: BinaryOp, other: &Tensor) -> Result<Tensor> {
        let out = match op {
            BinaryOp::Add => zip(self, other, |x, y| x + y)?,
            BinaryOp::Sub => zip(self, other, |x, y| x - y)?,
            BinaryOp::Mul => zip(self, other, |x, y| x * y)?,
            BinaryOp::Div => zip(self, other, |x, y| x / y)?,
        };
        let (a, b) = (self.clone(), other.clone());
        Ok(record(op.name(), &[self, other], out, move |g| {
            let (ga, gb) = match op {
                BinaryOp::Add => (g.clone(), g.clone()),
                BinaryOp::Sub => (g.clone(), g.neg()?),
                BinaryOp::Mul => (g.mul(&b)?, g.mul(&a)?),
                BinaryOp::Div => {
                    let ga = g.div(&b)?;
                    let gb = zip(&g.mul(&a)?, &b, |ga_x, y| -ga_x / (y * y))?;
                    (ga, gb)
                }
            };
            Ok(vec![
                Some(ga.reduce_to_shape(a.shape())?),
                Some(gb.reduce_to_shape(b.shape())?),
            ])
        }))
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(BinaryOp::Add, other)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(BinaryOp::Sub, other)
    }

    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(BinaryOp::Mul, other)
    }

    pub fn div(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(BinaryOp::Div, other)
    }

    pub fn add_scalar(&self, c: f32) -> Result<Tensor> {
        let out = map(self, |x| x + c);
        Ok(record("add_scalar", &[self], out, |g| Ok(vec![Some(g.clone())])))
    }

    pub fn mul_scalar(&self, c: f32) -> Result<Tensor> {
        let out = map(self, |x| x * c);
        Ok(record("mul_scalar", &[self], out, move |g| {
            Ok(vec![Some(map(g, |v| v * c))])
        }))
    }
}
