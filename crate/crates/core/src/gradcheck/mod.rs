//! Finite-difference oracle for analytic gradients.
//!
//! The numeric side only ever runs forward passes, with recording disabled.
//! Each parameter element is probed with the central difference
//! `(L(θ+h) − L(θ−h)) / ((θ+h) − (θ−h))`, where `h = ε·max(1, |θ|)` and the
//! denominator is the difference of the perturbed values as actually stored.
//! `L` is accumulated in f64. For a non-scalar output a fixed projection `R`
//! turns it into the scalar `Σ R ⊙ out`, and the analytic side seeds backward
//! with the same `R`.

pub mod suite;

use std::fmt;

use crate::autograd::{backward, no_grad, reset_tape};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub eps: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-2,
            atol: 1e-3,
            eps: 1e-3,
        }
    }
}

impl Tolerances {
    /// Whether one analytic/numeric pair agrees. NaN never does.
    pub fn accepts(&self, analytic: f64, numeric: f64) -> bool {
        (analytic - numeric).abs() <= self.atol + self.rtol * analytic.abs().max(numeric.abs())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamReport {
    pub name: String,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    /// Flat index of the element with the largest absolute error (or the first NaN).
    pub worst_index: usize,
    /// Elements whose analytic or numeric value is NaN.
    pub nan_elements: usize,
    pub pass: bool,
}

impl fmt::Display for ParamReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:.3e} {:.3e} {} {}",
            self.name,
            self.max_abs_err,
            self.max_rel_err,
            self.worst_index,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradReport {
    pub params: Vec<ParamReport>,
    pub tolerances: Tolerances,
}

impl GradReport {
    pub fn pass(&self) -> bool {
        self.params.iter().all(|p| p.pass)
    }

    pub fn param(&self, name: &str) -> Option<&ParamReport> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Prefix every parameter name, e.g. with the op under test.
    pub fn prefixed(mut self, prefix: &str) -> Self {
        for p in &mut self.params {
            p.name = format!("{prefix}{}", p.name);
        }
        self
    }
}

impl fmt::Display for GradReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.params {
            writeln!(f, "{p}")?;
        }
        write!(f, "OVERALL {}", if self.pass() { "PASS" } else { "FAIL" })
    }
}

/// Scalar objective: the output itself, or `Σ R ⊙ out` under a projection.
fn objective(out: &Tensor, projection: Option<&Tensor>) -> Result<f64> {
    match projection {
        Some(r) => {
            if r.shape() != out.shape() {
                return Err(crate::error::shape_err(
                    "gradcheck",
                    format!("projection {} for output {}", r.shape(), out.shape()),
                ));
            }
            Ok(out
                .to_vec()
                .iter()
                .zip(r.to_vec())
                .map(|(&o, r)| o as f64 * r as f64)
                .sum())
        }
        None if out.numel() == 1 => Ok(out.to_vec()[0] as f64),
        None => Err(Error::NonScalar {
            shape: out.dims().to_vec(),
        }),
    }
}

/// Central-difference gradient of `f` (through `projection` when given) with
/// respect to every element of every parameter. Parameters are perturbed in
/// place and restored bit for bit. A NaN objective at any probe yields NaN for
/// that element.
pub fn finite_difference_gradient<F>(
    mut f: F,
    params: &[(String, Tensor)],
    projection: Option<&Tensor>,
    eps: f64,
) -> Result<Vec<(String, Tensor)>>
where
    F: FnMut() -> Result<Tensor>,
{
    no_grad(|| {
        let mut grads = Vec::with_capacity(params.len());
        for (name, p) in params {
            let mut g = vec![0.0f32; p.numel()];
            for (i, gi) in g.iter_mut().enumerate() {
                let orig = p.get_flat(i);
                let h = eps * (orig.abs() as f64).max(1.0);
                let plus = (orig as f64 + h) as f32;
                let minus = (orig as f64 - h) as f32;
                p.set_flat(i, plus);
                let up = f().and_then(|o| objective(&o, projection));
                p.set_flat(i, minus);
                let down = f().and_then(|o| objective(&o, projection));
                p.set_flat(i, orig);
                let (up, down) = (up?, down?);
                *gi = ((up - down) / (plus as f64 - minus as f64)) as f32;
            }
            grads.push((name.clone(), Tensor::from_vec(g, p.shape().clone())?));
        }
        Ok(grads)
    })
}

/// Compare the analytic gradient of `f` with the finite-difference oracle.
///
/// `f` must be deterministic at fixed parameters; it is evaluated twice at the
/// base point first and a mismatch is a `NonDeterministic` error. Resets the
/// calling thread's tape.
pub fn check_gradients<F>(
    mut f: F,
    params: &[(String, Tensor)],
    projection: Option<&Tensor>,
    tol: Tolerances,
) -> Result<GradReport>
where
    F: FnMut() -> Result<Tensor>,
{
    if params.is_empty() {
        return Ok(GradReport {
            params: Vec::new(),
            tolerances: tol,
        });
    }
    let first = no_grad(|| f().and_then(|o| objective(&o, projection)))?;
    let second = no_grad(|| f().and_then(|o| objective(&o, projection)))?;
    if first.to_bits() != second.to_bits() && !(first.is_nan() && second.is_nan()) {
        return Err(Error::NonDeterministic { first, second });
    }

    reset_tape();
    let out = f()?;
    objective(&out, projection)?;
    let analytic: Vec<Vec<f32>> = match backward(&out, projection) {
        Ok(grads) => params
            .iter()
            .map(|(_, p)| grads.get(p).map_or_else(|| vec![0.0; p.numel()], Tensor::to_vec))
            .collect(),
        // Output independent of every parameter.
        Err(Error::NoGraph) => params.iter().map(|(_, p)| vec![0.0; p.numel()]).collect(),
        Err(e) => return Err(e),
    };
    reset_tape();

    let numeric = finite_difference_gradient(&mut f, params, projection, tol.eps)?;
    let reports = params
        .iter()
        .zip(analytic)
        .zip(numeric)
        .map(|(((name, _), a), (_, n))| compare(name, &a, &n.to_vec(), &tol))
        .collect();
    Ok(GradReport {
        params: reports,
        tolerances: tol,
    })
}

fn compare(name: &str, analytic: &[f32], numeric: &[f32], tol: &Tolerances) -> ParamReport {
    let mut report = ParamReport {
        name: name.to_string(),
        max_abs_err: 0.0,
        max_rel_err: 0.0,
        worst_index: 0,
        nan_elements: 0,
        pass: true,
    };
    for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let (a, n) = (a as f64, n as f64);
        if a.is_nan() || n.is_nan() {
            if report.nan_elements == 0 {
                report.worst_index = i;
            }
            report.nan_elements += 1;
            report.pass = false;
            continue;
        }
        let abs = (a - n).abs();
        let scale = a.abs().max(n.abs());
        let rel = if scale > 0.0 { abs / scale } else { 0.0 };
        if abs > report.max_abs_err && report.nan_elements == 0 {
            report.worst_index = i;
        }
        report.max_abs_err = report.max_abs_err.max(abs);
        report.max_rel_err = report.max_rel_err.max(rel);
        report.pass &= tol.accepts(a, n);
    }
    if report.nan_elements > 0 {
        report.max_abs_err = f64::NAN;
        report.max_rel_err = f64::NAN;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn param(name: &str, values: Vec<f32>) -> (String, Tensor) {
        let n = values.len();
        (name.into(), Tensor::from_vec(values, [n]).unwrap().requires_grad_(true))
    }

    #[test]
    fn quadratic_is_exact() {
        let (name, t) = param("t", vec![3.0]);
        let p = vec![(name, t.clone())];
        let g = finite_difference_gradient(|| t.mul(&t), &p, None, 1e-3).unwrap();
        assert!((g[0].1.to_vec()[0] - 6.0).abs() < 1e-3);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let p = vec![param("t", vec![1.0, -2.0])];
        let g = finite_difference_gradient(|| Ok(Tensor::scalar(4.0)), &p, None, 1e-3).unwrap();
        assert_eq!(g[0].1.to_vec(), vec![0.0, 0.0]);
        let report = check_gradients(|| Ok(Tensor::scalar(4.0)), &p, None, Tolerances::default()).unwrap();
        assert!(report.pass());
    }

    #[test]
    fn parameters_are_restored_exactly() {
        let values = vec![0.1f32, -7.3, 1e-20, 3.0e5];
        let (name, t) = param("t", values.clone());
        let p = vec![(name, t.clone())];
        finite_difference_gradient(|| t.mul(&t)?.sum_all(), &p, None, 1e-3).unwrap();
        let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&t.to_vec()), bits(&values));
    }

    #[test]
    fn non_scalar_without_projection_is_an_error() {
        let (name, t) = param("t", vec![1.0, 2.0]);
        let p = vec![(name, t.clone())];
        let err = finite_difference_gradient(|| t.exp(), &p, None, 1e-3).unwrap_err();
        assert!(matches!(err, Error::NonScalar { .. }));
    }

    #[test]
    fn nondeterminism_is_detected() {
        let (name, t) = param("t", vec![1.0]);
        let p = vec![(name, t.clone())];
        let mut calls = 0.0;
        let err = check_gradients(
            || {
                calls += 1.0;
                t.add_scalar(calls)?.sum_all()
            },
            &p,
            None,
            Tolerances::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonDeterministic { .. }));
    }

    #[test]
    fn nan_probe_is_flagged() {
        // sqrt at 0: the lower probe is NaN.
        let (name, t) = param("t", vec![0.0]);
        let p = vec![(name, t.clone())];
        let report = check_gradients(|| t.sqrt()?.sum_all(), &p, None, Tolerances::default()).unwrap();
        assert!(!report.pass());
        assert_eq!(report.params[0].nan_elements, 1);
    }

    #[test]
    fn empty_parameter_list_is_vacuous() {
        let report = check_gradients(|| Ok(Tensor::scalar(1.0)), &[], None, Tolerances::default()).unwrap();
        assert!(report.pass());
        assert_eq!(report.to_string(), "OVERALL PASS");
    }

    #[test]
    fn report_format() {
        let (name, t) = param("w", vec![0.5, -1.5]);
        let p = vec![(name, t.clone())];
        let report = check_gradients(|| t.mul(&t)?.sum_all(), &p, None, Tolerances::default()).unwrap();
        let text = report.to_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let fields: Vec<&str> = lines[0].split(' ').collect();
        assert_eq!(fields.len(), 5);
        assert_eq!(fields[0], "w");
        assert_eq!(fields[4], "PASS");
        assert_eq!(lines[1], "OVERALL PASS");
    }
}
