use crate::autograd::record;
use crate::error::{Error, Result};
use crate::ops::zip;
use crate::rng::Rng;
use crate::tensor::Tensor;

use super::{Layer, Mode};

/// Inverted dropout: in train mode each element is zeroed with probability `p`
/// and survivors are scaled by `1/(1−p)`. Eval mode and `p = 0` return `x` as is.
/// The mask is a pure function of `seed`.
pub fn dropout(x: &Tensor, p: f32, mode: Mode, seed: u64) -> Result<Tensor> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "dropout probability {p} outside [0, 1)"
        )));
    }
    if mode == Mode::Eval || p == 0.0 {
        return Ok(x.clone());
    }
    let scale = 1.0 / (1.0 - p);
    let mut rng = Rng::new(seed);
    let mask: Vec<f32> = (0..x.numel())
        .map(|_| if rng.bernoulli(p as f64) { 0.0 } else { scale })
        .collect();
    let mask = Tensor::from_vec(mask, x.shape().clone())?;
    let out = zip(x, &mask, |v, m| v * m)?;
    Ok(record("dropout", &[x], out, move |g| {
        Ok(vec![Some(zip(g, &mask, |g, m| g * m)?)])
    }))
}

/// Dropout layer; every train-mode forward draws a fresh mask from its own stream.
#[derive(Clone, Debug)]
pub struct Dropout {
    pub p: f32,
    rng: Rng,
    mode: Mode,
}

impl Dropout {
    pub fn new(p: f32, seed: u64) -> Self {
        Dropout {
            p,
            rng: Rng::new(seed),
            mode: Mode::Train,
        }
    }
}

impl Layer for Dropout {
    fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let seed = match self.mode {
            Mode::Train => self.rng.next_u64(),
            Mode::Eval => 0,
        };
        dropout(x, self.p, self.mode, seed)
    }

    fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    fn mode(&self) -> Mode {
        self.mode
    }
}
