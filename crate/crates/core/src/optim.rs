//! Parameter update rules.
//!
//! The `*_step` functions are the raw rules on slices. The optimizer structs
//! keep zero-initialized per-parameter slots keyed by parameter name and
//! update parameters in place from a [`GradStore`].
//!
//! SGD weight decay is coupled: `λθ` is added into the velocity, not applied
//! to `θ` after the step. Adam adds `ε` outside the square root.

use std::collections::HashMap;

use crate::autograd::GradStore;
use crate::error::{shape_err, Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SgdConfig {
    pub lr: f32,
    pub momentum: f32,
    pub weight_decay: f32,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            lr: 0.01,
            momentum: 0.0,
            weight_decay: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RmsPropConfig {
    pub lr: f32,
    pub rho: f32,
    pub eps: f32,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        RmsPropConfig {
            lr: 0.01,
            rho: 0.99,
            eps: 1e-8,
        }
    }
}

/// `v ← μv + g + λθ`, `θ ← θ − ηv`.
pub fn sgd_step(theta: &mut [f32], grad: &[f32], velocity: &mut [f32], c: &SgdConfig) {
    for ((t, &g), v) in theta.iter_mut().zip(grad).zip(velocity) {
        *v = c.momentum * *v + g + c.weight_decay * *t;
        *t -= c.lr * *v;
    }
}

/// One Adam step at 1-based step count `t`. The bias corrections and the
/// final update are evaluated in f64.
pub fn adam_step(theta: &mut [f32], grad: &[f32], m: &mut [f32], v: &mut [f32], t: u64, c: &AdamConfig) {
    let (b1, b2) = (c.beta1 as f64, c.beta2 as f64);
    let exp = t.min(i32::MAX as u64) as i32;
    let (bc1, bc2) = (1.0 - b1.powi(exp), 1.0 - b2.powi(exp));
    for (((th, &g), m), v) in theta.iter_mut().zip(grad).zip(m).zip(v) {
        *m = c.beta1 * *m + (1.0 - c.beta1) * g;
        *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
        let m_hat = *m as f64 / bc1;
        let v_hat = *v as f64 / bc2;
        *th = (*th as f64 - c.lr as f64 * m_hat / (v_hat.sqrt() + c.eps as f64)) as f32;
    }
}

/// `v ← ρv + (1−ρ)g²`, `θ ← θ − ηg/√(v+ε)`.
pub fn rmsprop_step(theta: &mut [f32], grad: &[f32], v: &mut [f32], c: &RmsPropConfig) {
    for ((th, &g), v) in theta.iter_mut().zip(grad).zip(v) {
        *v = c.rho * *v + (1.0 - c.rho) * g * g;
        *th = (*th as f64 - c.lr as f64 * g as f64 / (*v as f64 + c.eps as f64).sqrt()) as f32;
    }
}

pub trait Optimizer {
    /// Update one parameter in place with its gradient.
    fn step(&mut self, name: &str, param: &Tensor, grad: &Tensor) -> Result<()>;

    fn learning_rate(&self) -> f32;

    /// Update every parameter that has a gradient in `grads`; others and their
    /// slots are left alone. Returns how many were updated.
    fn step_all(&mut self, params: &[(String, Tensor)], grads: &GradStore) -> Result<usize> {
        let mut updated = 0;
        for (name, p) in params {
            if let Some(g) = grads.get(p) {
                self.step(name, p, g)?;
                updated += 1;
            }
        }
        Ok(updated)
    }
}

fn check_grad(name: &str, param: &Tensor, grad: &Tensor) -> Result<Vec<f32>> {
    if param.shape() != grad.shape() {
        return Err(shape_err(
            "optimizer",
            format!("gradient {} for parameter {name} {}", grad.shape(), param.shape()),
        ));
    }
    Ok(grad.to_vec())
}

/// Slot vectors for a parameter, created zeroed on first use.
fn slot<'a, S>(slots: &'a mut HashMap<String, S>, name: &str, param: &Tensor, make: impl FnOnce(usize) -> S) -> &'a mut S {
    slots
        .entry(name.to_string())
        .or_insert_with(|| make(param.numel()))
}

#[derive(Clone, Debug, Default)]
pub struct Sgd {
    pub config: SgdConfig,
    velocity: HashMap<String, Vec<f32>>,
}

impl Sgd {
    pub fn new(config: SgdConfig) -> Self {
        Sgd {
            config,
            velocity: HashMap::new(),
        }
    }

    pub fn velocity(&self, name: &str) -> Option<&[f32]> {
        self.velocity.get(name).map(Vec::as_slice)
    }
}

impl Optimizer for Sgd {
    fn step(&mut self, name: &str, param: &Tensor, grad: &Tensor) -> Result<()> {
        let g = check_grad(name, param, grad)?;
        let v = slot(&mut self.velocity, name, param, |n| vec![0.0; n]);
        let c = self.config;
        param.update_contiguous(|theta| sgd_step(theta, &g, v, &c))
    }

    fn learning_rate(&self) -> f32 {
        self.config.lr
    }
}

#[derive(Clone, Debug, Default)]
pub struct AdamSlot {
    pub m: Vec<f32>,
    pub v: Vec<f32>,
    pub t: u64,
}

#[derive(Clone, Debug, Default)]
pub struct Adam {
    pub config: AdamConfig,
    slots: HashMap<String, AdamSlot>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            slots: HashMap::new(),
        }
    }

    pub fn slot(&self, name: &str) -> Option<&AdamSlot> {
        self.slots.get(name)
    }
}

impl Optimizer for Adam {
    fn step(&mut self, name: &str, param: &Tensor, grad: &Tensor) -> Result<()> {
        let g = check_grad(name, param, grad)?;
        let s = slot(&mut self.slots, name, param, |n| AdamSlot {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        });
        s.t += 1;
        let c = self.config;
        param.update_contiguous(|theta| adam_step(theta, &g, &mut s.m, &mut s.v, s.t, &c))
    }

    fn learning_rate(&self) -> f32 {
        self.config.lr
    }
}

#[derive(Clone, Debug, Default)]
pub struct RmsProp {
    pub config: RmsPropConfig,
    sq_avg: HashMap<String, Vec<f32>>,
}

impl RmsProp {
    pub fn new(config: RmsPropConfig) -> Self {
        RmsProp {
            config,
            sq_avg: HashMap::new(),
        }
    }

    pub fn sq_avg(&self, name: &str) -> Option<&[f32]> {
        self.sq_avg.get(name).map(Vec::as_slice)
    }
}

impl Optimizer for RmsProp {
    fn step(&mut self, name: &str, param: &Tensor, grad: &Tensor) -> Result<()> {
        let g = check_grad(name, param, grad)?;
        let v = slot(&mut self.sq_avg, name, param, |n| vec![0.0; n]);
        let c = self.config;
        param.update_contiguous(|theta| rmsprop_step(theta, &g, v, &c))
    }

    fn learning_rate(&self) -> f32 {
        self.config.lr
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
    RmsProp,
}

impl OptimizerKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            "rmsprop" => Ok(OptimizerKind::RmsProp),
            other => Err(Error::InvalidArgument(format!("unknown optimizer {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
            OptimizerKind::RmsProp => "rmsprop",
        }
    }

    /// Optimizer with default hyperparameters, optionally overriding the learning rate.
    pub fn build(self, lr: Option<f32>) -> Box<dyn Optimizer> {
        match self {
            OptimizerKind::Sgd => {
                let d = SgdConfig::default();
                Box::new(Sgd::new(SgdConfig { lr: lr.unwrap_or(d.lr), ..d }))
            }
            OptimizerKind::Adam => {
                let d = AdamConfig::default();
                Box::new(Adam::new(AdamConfig { lr: lr.unwrap_or(d.lr), ..d }))
            }
            OptimizerKind::RmsProp => {
                let d = RmsPropConfig::default();
                Box::new(RmsProp::new(RmsPropConfig { lr: lr.unwrap_or(d.lr), ..d }))
            }
        }
    }
}
