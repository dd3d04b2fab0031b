//! The standard gradient-check suite: every differentiable primitive, layer
//! and loss, each on small seeded random shapes.
//!
//! Inputs are drawn away from non-differentiable points: relu and abs inputs
//! keep `|x| ≥ 0.05`, max inputs are spaced 0.1 apart, and log, sqrt and
//! division see magnitudes in `[0.5, 2]`. Non-scalar outputs are contracted
//! with a seeded random projection.

use std::fmt;

use crate::autograd::no_grad;
use crate::error::{Error, Result};
use crate::nn::{self, ActivationKind, ConvSpec, Mode};
use crate::rng::Rng;
use crate::tensor::Tensor;

use super::{check_gradients, GradReport, Tolerances};

pub const DEFAULT_SEEDS: [u64; 3] = [0, 1, 2];

type Forward = Box<dyn FnMut() -> Result<Tensor>>;

/// Parameters under test plus the computation over them.
struct Setup {
    params: Vec<(String, Tensor)>,
    forward: Forward,
}

pub struct Case {
    pub name: &'static str,
    /// Primitive or layer this case exercises; `--only` matches either.
    pub family: &'static str,
    build: fn(&mut Rng) -> Result<Setup>,
}

fn dims(rng: &mut Rng, lo: usize, hi: usize) -> usize {
    lo + rng.below(hi - lo + 1)
}

fn values(rng: &mut Rng, n: usize, lo: f32, hi: f32) -> Vec<f32> {
    (0..n).map(|_| rng.uniform(lo, hi)).collect()
}

fn param(shape: &[usize], lo: f32, hi: f32, rng: &mut Rng) -> Result<Tensor> {
    let n = shape.iter().product();
    Ok(Tensor::from_vec(values(rng, n, lo, hi), shape)?.requires_grad_(true))
}

/// Uniform in ±[margin, margin + 1].
fn away_from_zero(shape: &[usize], margin: f32, rng: &mut Rng) -> Result<Tensor> {
    let n: usize = shape.iter().product();
    let v = (0..n)
        .map(|_| {
            let m = margin + rng.next_f32();
            if rng.bernoulli(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    Ok(Tensor::from_vec(v, shape)?.requires_grad_(true))
}

/// Distinct values on a 0.1 grid in random order, so every max is strict.
fn separated(shape: &[usize], rng: &mut Rng) -> Result<Tensor> {
    let n: usize = shape.iter().product();
    let mut v: Vec<f32> = (0..n).map(|i| (i as f32 - n as f32 / 2.0) * 0.1).collect();
    rng.shuffle(&mut v);
    Ok(Tensor::from_vec(v, shape)?.requires_grad_(true))
}

fn named(list: &[(&str, &Tensor)]) -> Vec<(String, Tensor)> {
    list.iter().map(|(n, t)| (n.to_string(), (*t).clone())).collect()
}

fn unary_setup(x: Tensor, f: fn(&Tensor) -> Result<Tensor>) -> Setup {
    Setup {
        params: named(&[("x", &x)]),
        forward: Box::new(move || f(&x)),
    }
}

fn binary_setup(x: Tensor, y: Tensor, f: fn(&Tensor, &Tensor) -> Result<Tensor>) -> Setup {
    Setup {
        params: named(&[("x", &x), ("y", &y)]),
        forward: Box::new(move || f(&x, &y)),
    }
}

fn same_shape(rng: &mut Rng) -> (Vec<usize>, Vec<usize>) {
    let s = vec![dims(rng, 2, 4), dims(rng, 2, 5)];
    (s.clone(), s)
}

/// Pairs that broadcast along different axes, including rank extension.
fn broadcast_pair(rng: &mut Rng) -> (Vec<usize>, Vec<usize>) {
    let (a, b, c) = (dims(rng, 2, 3), dims(rng, 2, 4), dims(rng, 2, 3));
    match rng.below(3) {
        0 => (vec![a, b, c], vec![b, 1]),
        1 => (vec![a, 1, c], vec![b, 1]),
        _ => (vec![b], vec![a, c, 1]),
    }
}

fn binary_case(rng: &mut Rng, broadcast: bool, f: fn(&Tensor, &Tensor) -> Result<Tensor>) -> Result<Setup> {
    let (sx, sy) = if broadcast { broadcast_pair(rng) } else { same_shape(rng) };
    Ok(binary_setup(param(&sx, -1.0, 1.0, rng)?, param(&sy, -1.0, 1.0, rng)?, f))
}

fn div_case(rng: &mut Rng, broadcast: bool) -> Result<Setup> {
    let (sx, sy) = if broadcast { broadcast_pair(rng) } else { same_shape(rng) };
    let x = param(&sx, -1.0, 1.0, rng)?;
    let n: usize = sy.iter().product();
    let y: Vec<f32> = (0..n)
        .map(|_| rng.uniform(0.5, 2.0) * if rng.bernoulli(0.5) { 1.0 } else { -1.0 })
        .collect();
    let y = Tensor::from_vec(y, sy)?.requires_grad_(true);
    Ok(binary_setup(x, y, |x, y| x.div(y)))
}

fn rank3(rng: &mut Rng) -> Vec<usize> {
    vec![dims(rng, 2, 3), dims(rng, 2, 4), dims(rng, 2, 4)]
}

fn activation_case(rng: &mut Rng, kind: ActivationKind) -> Result<Setup> {
    let shape = [dims(rng, 2, 5), dims(rng, 2, 5)];
    let x = match kind {
        ActivationKind::Relu => away_from_zero(&shape, 0.05, rng)?,
        _ => param(&shape, -3.0, 3.0, rng)?,
    };
    Ok(Setup {
        params: named(&[("x", &x)]),
        forward: Box::new(move || nn::activation(kind, &x)),
    })
}

fn conv_case(rng: &mut Rng) -> Result<Setup> {
    let (stride, padding, kernel) = match rng.below(3) {
        0 => (1, 0, (3, 3)),
        1 => (2, 1, (3, 3)),
        _ => (1, 1, (2, 3)),
    };
    let spec = ConvSpec::new(dims(rng, 1, 2), dims(rng, 1, 3), kernel, stride, padding);
    let x = param(&[2, spec.in_channels, dims(rng, 4, 6), dims(rng, 4, 6)], -1.0, 1.0, rng)?;
    let w = param(&spec.weight_shape(), -1.0, 1.0, rng)?;
    let b = param(&[spec.out_channels], -1.0, 1.0, rng)?;
    Ok(Setup {
        params: named(&[("x", &x), ("weight", &w), ("bias", &b)]),
        forward: Box::new(move || nn::conv2d(&x, &w, Some(&b), spec)),
    })
}

fn dense_case(rng: &mut Rng) -> Result<Setup> {
    let (b, din, dout) = (dims(rng, 2, 5), dims(rng, 2, 5), dims(rng, 2, 5));
    let x = param(&[b, din], -1.0, 1.0, rng)?;
    let w = param(&[dout, din], -1.0, 1.0, rng)?;
    let bias = param(&[dout], -1.0, 1.0, rng)?;
    Ok(Setup {
        params: named(&[("x", &x), ("weight", &w), ("bias", &bias)]),
        forward: Box::new(move || nn::dense(&x, &w, &bias)),
    })
}

fn batchnorm_case(rng: &mut Rng) -> Result<Setup> {
    let (b, d) = (dims(rng, 4, 6), dims(rng, 3, 4));
    let x = param(&[b, d], -2.0, 2.0, rng)?;
    let gamma = param(&[d], 0.5, 1.5, rng)?;
    let beta = param(&[d], -1.0, 1.0, rng)?;
    Ok(Setup {
        params: named(&[("x", &x), ("gamma", &gamma), ("beta", &beta)]),
        forward: Box::new(move || {
            nn::batchnorm(&x, &gamma, &beta, None, Mode::Train, nn::BatchNormConfig::default())
        }),
    })
}

fn dropout_case(rng: &mut Rng) -> Result<Setup> {
    let x = param(&[dims(rng, 3, 6), dims(rng, 3, 6)], -1.0, 1.0, rng)?;
    let p = [0.2, 0.5, 0.7][rng.below(3)];
    // Frozen mask: the same seed on every evaluation.
    let seed = rng.next_u64();
    Ok(Setup {
        params: named(&[("x", &x)]),
        forward: Box::new(move || nn::dropout(&x, p, Mode::Train, seed)),
    })
}

fn cross_entropy_case(rng: &mut Rng) -> Result<Setup> {
    let (b, c) = (dims(rng, 3, 5), dims(rng, 2, 5));
    let z = param(&[b, c], -3.0, 3.0, rng)?;
    let labels: Vec<usize> = (0..b).map(|_| rng.below(c)).collect();
    Ok(Setup {
        params: named(&[("logits", &z)]),
        forward: Box::new(move || nn::cross_entropy(&z, &labels)),
    })
}

fn mse_case(rng: &mut Rng) -> Result<Setup> {
    let n = dims(rng, 3, 8);
    let x = param(&[n], -2.0, 2.0, rng)?;
    let t = param(&[n], -2.0, 2.0, rng)?;
    Ok(binary_setup(x, t, nn::mse))
}

macro_rules! case {
    ($name:expr, $family:expr, $build:expr) => {
        Case {
            name: $name,
            family: $family,
            build: $build,
        }
    };
}

/// Every case in the suite, in run order.
pub fn cases() -> Vec<Case> {
    vec![
        case!("add", "add", |r| binary_case(r, false, |x, y| x.add(y))),
        case!("add_broadcast", "add", |r| binary_case(r, true, |x, y| x.add(y))),
        case!("sub", "sub", |r| binary_case(r, false, |x, y| x.sub(y))),
        case!("sub_broadcast", "sub", |r| binary_case(r, true, |x, y| x.sub(y))),
        case!("mul", "mul", |r| binary_case(r, false, |x, y| x.mul(y))),
        case!("mul_broadcast", "mul", |r| binary_case(r, true, |x, y| x.mul(y))),
        case!("div", "div", |r| div_case(r, false)),
        case!("div_broadcast", "div", |r| div_case(r, true)),
        case!("add_scalar", "add", |r| {
            let c = r.uniform(-2.0, 2.0);
            let x = param(&rank3(r), -1.0, 1.0, r)?;
            Ok(Setup {
                params: named(&[("x", &x)]),
                forward: Box::new(move || x.add_scalar(c)),
            })
        }),
        case!("mul_scalar", "mul", |r| {
            let c = r.uniform(-2.0, 2.0);
            let x = param(&rank3(r), -1.0, 1.0, r)?;
            Ok(Setup {
                params: named(&[("x", &x)]),
                forward: Box::new(move || x.mul_scalar(c)),
            })
        }),
        case!("neg", "neg", |r| Ok(unary_setup(param(&rank3(r), -1.0, 1.0, r)?, |x| x.neg()))),
        case!("exp", "exp", |r| Ok(unary_setup(param(&rank3(r), -2.0, 2.0, r)?, |x| x.exp()))),
        case!("log", "log", |r| Ok(unary_setup(param(&rank3(r), 0.5, 2.0, r)?, |x| x.log()))),
        case!("sqrt", "sqrt", |r| Ok(unary_setup(param(&rank3(r), 0.5, 2.0, r)?, |x| x.sqrt()))),
        case!("abs", "abs", |r| Ok(unary_setup(away_from_zero(&rank3(r), 0.05, r)?, |x| x.abs()))),
        case!("sum", "sum", |r| Ok(unary_setup(param(&rank3(r), -1.0, 1.0, r)?, |x| x.sum_all()))),
        case!("sum_axis", "sum", |r| {
            Ok(unary_setup(param(&rank3(r), -1.0, 1.0, r)?, |x| x.sum(Some(&[1]), false)))
        }),
        case!("mean", "mean", |r| Ok(unary_setup(param(&rank3(r), -1.0, 1.0, r)?, |x| x.mean_all()))),
        case!("mean_axes", "mean", |r| {
            Ok(unary_setup(param(&rank3(r), -1.0, 1.0, r)?, |x| x.mean(Some(&[0, 2]), true)))
        }),
        case!("max", "max", |r| Ok(unary_setup(separated(&rank3(r), r)?, |x| x.max(None, false)))),
        case!("max_axis", "max", |r| {
            Ok(unary_setup(separated(&rank3(r), r)?, |x| x.max(Some(&[2]), true)))
        }),
        case!("matmul", "matmul", |r| {
            let (b, k, n) = (dims(r, 2, 5), dims(r, 2, 5), dims(r, 2, 5));
            let x = param(&[b, k], -1.0, 1.0, r)?;
            let w = param(&[n, k], -1.0, 1.0, r)?;
            Ok(binary_setup(x, w, |x, w| x.matmul(w)))
        }),
        case!("reshape", "reshape", |r| {
            Ok(unary_setup(param(&[dims(r, 2, 4), 6], -1.0, 1.0, r)?, |x| {
                let n = x.dims()[0];
                x.reshape([3, 2 * n])?.exp()
            }))
        }),
        case!("transpose", "transpose", |r| {
            Ok(unary_setup(param(&[dims(r, 2, 4), dims(r, 2, 5)], -1.0, 1.0, r)?, |x| {
                x.transpose2d()?.exp()
            }))
        }),
        case!("broadcast", "broadcast", |r| {
            Ok(unary_setup(param(&[dims(r, 2, 4), 1], -1.0, 1.0, r)?, |x| {
                x.broadcast_to([2, x.dims()[0], 3])
            }))
        }),
        case!("dense", "dense", dense_case),
        case!("conv2d", "conv2d", conv_case),
        case!("relu", "relu", |r| activation_case(r, ActivationKind::Relu)),
        case!("sigmoid", "sigmoid", |r| activation_case(r, ActivationKind::Sigmoid)),
        case!("tanh", "tanh", |r| activation_case(r, ActivationKind::Tanh)),
        case!("gelu", "gelu", |r| activation_case(r, ActivationKind::Gelu)),
        case!("batchnorm", "batchnorm", batchnorm_case),
        case!("dropout", "dropout", dropout_case),
        case!("cross_entropy", "cross_entropy", cross_entropy_case),
        case!("mse", "mse", mse_case),
    ]
}

/// Names accepted by `--only`: case names and families.
pub fn selectable_names() -> Vec<&'static str> {
    let mut names: Vec<&'static str> = cases().iter().flat_map(|c| [c.family, c.name]).collect();
    names.sort_unstable();
    names.dedup();
    names
}

impl Case {
    /// Run this case once with inputs drawn from `seed`.
    pub fn run(&self, seed: u64, tol: Tolerances) -> Result<GradReport> {
        let mut rng = Rng::new(seed ^ fnv1a(self.name));
        let Setup { params, mut forward } = (self.build)(&mut rng)?;
        let out = no_grad(&mut forward)?;
        let projection = if out.numel() == 1 {
            None
        } else {
            Some(Tensor::from_vec(
                values(&mut rng, out.numel(), -1.0, 1.0),
                out.shape().clone(),
            )?)
        };
        check_gradients(forward, &params, projection.as_ref(), tol)
    }
}

/// Stable per-case seed offset, so cases do not share input streams.
fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

pub struct SuiteEntry {
    pub case: &'static str,
    pub seed: u64,
    pub outcome: Result<GradReport>,
}

impl SuiteEntry {
    pub fn pass(&self) -> bool {
        matches!(&self.outcome, Ok(r) if r.pass())
    }
}

pub struct SuiteReport {
    pub entries: Vec<SuiteEntry>,
    pub tolerances: Tolerances,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(SuiteEntry::pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &SuiteEntry> {
        self.entries.iter().filter(|e| !e.pass())
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            let prefix = format!("{}/seed{}", e.case, e.seed);
            match &e.outcome {
                Ok(report) => {
                    for p in &report.params {
                        writeln!(f, "{prefix}/{p}")?;
                    }
                }
                Err(err) => {
                    let msg = err.to_string().replace(char::is_whitespace, "_");
                    writeln!(f, "{prefix}/error:{msg} NaN NaN 0 FAIL")?;
                }
            }
        }
        write!(f, "OVERALL {}", if self.pass() { "PASS" } else { "FAIL" })
    }
}

/// Run the suite, optionally restricted to one case or family name.
pub fn run_suite(only: Option<&str>, seeds: &[u64], tol: Tolerances) -> Result<SuiteReport> {
    let selected: Vec<Case> = cases()
        .into_iter()
        .filter(|c| only.is_none_or(|o| c.name == o || c.family == o))
        .collect();
    if selected.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no gradcheck case named {:?}; choose from {}",
            only.unwrap_or_default(),
            selectable_names().join(", ")
        )));
    }
    let mut entries = Vec::new();
    for case in &selected {
        for &seed in seeds {
            entries.push(SuiteEntry {
                case: case.name,
                seed,
                outcome: case.run(seed, tol),
            });
        }
    }
    Ok(SuiteReport {
        entries,
        tolerances: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_required_family_is_covered() {
        let families: Vec<&str> = cases().iter().map(|c| c.family).collect();
        for f in [
            "add", "sub", "mul", "div", "neg", "exp", "log", "sqrt", "abs", "sum", "mean", "max",
            "matmul", "reshape", "transpose", "broadcast", "dense", "conv2d", "relu", "sigmoid",
            "tanh", "gelu", "batchnorm", "dropout", "cross_entropy", "mse",
        ] {
            assert!(families.contains(&f), "{f}");
        }
    }

    #[test]
    fn unknown_name_is_rejected() {
        assert!(run_suite(Some("softplus"), &DEFAULT_SEEDS, Tolerances::default()).is_err());
    }

    #[test]
    fn family_filter_selects_variants() {
        let r = run_suite(Some("div"), &[0], Tolerances::default()).unwrap();
        let names: Vec<&str> = r.entries.iter().map(|e| e.case).collect();
        assert_eq!(names, ["div", "div_broadcast"]);
        assert!(r.pass(), "{r}");
    }
}
