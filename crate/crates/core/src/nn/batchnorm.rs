use crate::autograd::no_grad;
use crate::error::{shape_err, Error, Result};
use crate::tensor::Tensor;

use super::{Layer, Mode};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchNormConfig {
    pub eps: f32,
    pub momentum: f32,
}

impl Default for BatchNormConfig {
    fn default() -> Self {
        BatchNormConfig {
            eps: 1e-5,
            momentum: 0.1,
        }
    }
}

/// Per-feature normalization of `x (b×d)`: `γ ⊙ (x − μ) / √(σ² + ε) + β`.
///
/// Train mode uses the biased batch statistics and, when `running` is given,
/// moves the buffers toward them in place. Eval mode reads the buffers, which
/// never enter the graph.
pub fn batchnorm(
    x: &Tensor,
    gamma: &Tensor,
    beta: &Tensor,
    running: Option<(&Tensor, &Tensor)>,
    mode: Mode,
    config: BatchNormConfig,
) -> Result<Tensor> {
    if x.rank() != 2 {
        return Err(Error::Rank {
            op: "batchnorm",
            expected: 2,
            got: x.rank(),
        });
    }
    let d = x.dims()[1];
    for (what, t) in [("gamma", gamma), ("beta", beta)] {
        if t.dims() != [d] {
            return Err(shape_err(
                "batchnorm",
                format!("{what} {} for {d} features", t.shape()),
            ));
        }
    }
    if let Some((m, v)) = running {
        if m.dims() != [d] || v.dims() != [d] {
            return Err(shape_err("batchnorm", format!("running stats for {d} features")));
        }
    }

    let (centered, var) = match mode {
        Mode::Train => {
            if x.dims()[0] == 0 {
                return Err(Error::InvalidArgument(
                    "batchnorm needs at least one row in train mode".into(),
                ));
            }
            let mean = x.mean(Some(&[0]), true)?;
            let centered = x.sub(&mean)?;
            let var = centered.mul(&centered)?.mean(Some(&[0]), true)?;
            if let Some((rm, rv)) = running {
                let m = config.momentum;
                let (bm, bv) = (mean.to_vec(), var.to_vec());
                no_grad(|| -> Result<()> {
                    rm.update_contiguous(|r| blend(r, &bm, m))?;
                    rv.update_contiguous(|r| blend(r, &bv, m))
                })?;
            }
            (centered, var)
        }
        Mode::Eval => {
            let Some((rm, rv)) = running else {
                return Err(Error::InvalidArgument(
                    "batchnorm eval mode needs running statistics".into(),
                ));
            };
            (x.sub(&rm.detach())?, rv.detach())
        }
    };
    let scale = var.add_scalar(config.eps)?.sqrt()?;
    centered.div(&scale)?.mul(gamma)?.add(beta)
}

fn blend(running: &mut [f32], batch: &[f32], momentum: f32) {
    for (r, &b) in running.iter_mut().zip(batch) {
        *r = (1.0 - momentum) * *r + momentum * b;
    }
}

/// BatchNorm over the feature axis of 2-D activations.
#[derive(Clone, Debug)]
pub struct BatchNorm1d {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Tensor,
    pub running_var: Tensor,
    pub config: BatchNormConfig,
    mode: Mode,
}

impl BatchNorm1d {
    pub fn new(features: usize) -> Self {
        Self::with_config(features, BatchNormConfig::default())
    }

    pub fn with_config(features: usize, config: BatchNormConfig) -> Self {
        BatchNorm1d {
            gamma: Tensor::ones([features]).requires_grad_(true),
            beta: Tensor::zeros([features]).requires_grad_(true),
            running_mean: Tensor::zeros([features]),
            running_var: Tensor::ones([features]),
            config,
            mode: Mode::Train,
        }
    }
}

impl Layer for BatchNorm1d {
    fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        batchnorm(
            x,
            &self.gamma,
            &self.beta,
            Some((&self.running_mean, &self.running_var)),
            self.mode,
            self.config,
        )
    }

    fn parameters(&self) -> Vec<(String, Tensor)> {
        vec![
            ("gamma".into(), self.gamma.clone()),
            ("beta".into(), self.beta.clone()),
        ]
    }

    fn buffers(&self) -> Vec<(String, Tensor)> {
        vec![
            ("running_mean".into(), self.running_mean.clone()),
            ("running_var".into(), self.running_var.clone()),
        ]
    }

    fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    fn mode(&self) -> Mode {
        self.mode
    }
}
