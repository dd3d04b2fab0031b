//! The finite-difference oracle against the analytic engine, plus mutation
//! tests: ops with deliberately wrong pullbacks must be caught.

use tensorlite::autograd::{record, Cotangents};
use tensorlite::gradcheck::suite::{run_suite, DEFAULT_SEEDS};
use tensorlite::gradcheck::{check_gradients, finite_difference_gradient, Tolerances};
use tensorlite::{Result, Tensor};

fn leaf(values: Vec<f32>, shape: &[usize]) -> Tensor {
    Tensor::from_vec(values, shape).unwrap().requires_grad_(true)
}

fn named(list: &[(&str, &Tensor)]) -> Vec<(String, Tensor)> {
    list.iter().map(|(n, t)| (n.to_string(), (*t).clone())).collect()
}

#[test]
fn full_suite_passes_at_default_tolerances() {
    let report = run_suite(None, &DEFAULT_SEEDS, Tolerances::default()).unwrap();
    assert!(report.pass(), "{report}");
    assert!(report.entries.len() >= 26 * 3);
}

#[test]
fn tight_tolerance_exposes_the_f32_floor() {
    let tol = Tolerances {
        rtol: 1e-9,
        atol: 0.0,
        eps: 1e-3,
    };
    let report = run_suite(Some("exp"), &DEFAULT_SEEDS, tol).unwrap();
    assert!(!report.pass());
}

#[test]
fn relu_gradient_is_indicator_away_from_kink() {
    let x = leaf(vec![-1.5, -0.2, 0.3, 2.0, -0.05, 0.07], &[6]);
    let params = named(&[("x", &x)]);
    let g = finite_difference_gradient(|| tensorlite::nn::relu(&x)?.sum_all(), &params, None, 1e-3).unwrap();
    let expect: Vec<f32> = x.to_vec().iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
    for (n, e) in g[0].1.to_vec().iter().zip(expect) {
        assert!((n - e).abs() < 1e-3);
    }
}

#[test]
fn central_difference_error_is_second_order() {
    // f(θ) = θ³ at θ = 1: the central difference overshoots by exactly ε².
    let err = |eps: f64| {
        let t = leaf(vec![1.0], &[1]);
        let params = named(&[("t", &t)]);
        let g = finite_difference_gradient(|| t.mul(&t)?.mul(&t)?.sum_all(), &params, None, eps).unwrap();
        (g[0].1.to_vec()[0] as f64 - 3.0).abs()
    };
    let ratio = err(1e-2) / err(5e-3);
    assert!(ratio >= 3.0, "ratio {ratio}");
}

#[test]
fn oracle_never_records() {
    let x = leaf(vec![0.5, 1.5], &[2]);
    let params = named(&[("x", &x)]);
    tensorlite::reset_tape();
    finite_difference_gradient(|| x.exp()?.sum_all(), &params, None, 1e-3).unwrap();
    assert_eq!(tensorlite::autograd::tape_len(), 0);
}

// Mutations. Each op computes the correct forward value and a wrong pullback.

fn mul_grad_passthrough(x: &Tensor, y: &Tensor) -> Result<Tensor> {
    let out = x.detach().mul(&y.detach())?;
    Ok(record("mul_mutant", &[x, y], out, |g| -> Result<Cotangents> {
        Ok(vec![Some(g.clone()), Some(g.clone())])
    }))
}

fn exp_sign_flip(x: &Tensor) -> Result<Tensor> {
    let out = x.detach().exp()?;
    let y = out.clone();
    Ok(record("exp_mutant", &[x], out, move |g| Ok(vec![Some(g.mul(&y)?.neg()?)])))
}

fn matmul_missing_transpose(x: &Tensor, w: &Tensor) -> Result<Tensor> {
    let out = x.detach().matmul(&w.detach())?;
    let (xs, ws) = (x.detach(), w.detach());
    Ok(record("matmul_mutant", &[x, w], out, move |g| {
        // Correct: x̄ = ḡ W. `matmul` multiplies by the transpose of its
        // argument, so passing W gives ḡ Wᵀ.
        let gx = g.matmul(&ws)?;
        let gw = g.transpose2d()?.matmul(&xs.transpose2d()?)?;
        Ok(vec![Some(gx), Some(gw)])
    }))
}

fn mean_without_scale(x: &Tensor) -> Result<Tensor> {
    let out = x.detach().mean_all()?;
    let shape = x.shape().clone();
    Ok(record("mean_mutant", &[x], out, move |g| {
        Ok(vec![Some(g.broadcast_to(shape.clone())?.contiguous()?)])
    }))
}

fn div_missing_negation(x: &Tensor, y: &Tensor) -> Result<Tensor> {
    let out = x.detach().div(&y.detach())?;
    let (xs, ys) = (x.detach(), y.detach());
    Ok(record("div_mutant", &[x, y], out, move |g| {
        let gx = g.div(&ys)?;
        let gy = g.mul(&xs)?.div(&ys.mul(&ys)?)?;
        Ok(vec![Some(gx), Some(gy)])
    }))
}

fn sigmoid_grad_from_input(x: &Tensor) -> Result<Tensor> {
    let out = tensorlite::nn::sigmoid(&x.detach())?;
    let xs = x.detach();
    Ok(record("sigmoid_mutant", &[x], out, move |g| {
        let one_minus = xs.neg()?.add_scalar(1.0)?;
        Ok(vec![Some(g.mul(&xs)?.mul(&one_minus)?)])
    }))
}

fn caught(report: tensorlite::gradcheck::GradReport) {
    assert!(!report.pass(), "mutation not caught:\n{report}");
    assert!(report.params.iter().any(|p| p.max_rel_err > 0.0));
}

#[test]
fn mutation_mul_passthrough_is_caught() {
    let x = leaf(vec![0.3, -1.2, 2.0, 0.7], &[2, 2]);
    let y = leaf(vec![1.5, 0.4, -0.8, 2.2], &[2, 2]);
    let p = named(&[("x", &x), ("y", &y)]);
    caught(check_gradients(|| mul_grad_passthrough(&x, &y)?.sum_all(), &p, None, Tolerances::default()).unwrap());
}

#[test]
fn mutation_exp_sign_flip_is_caught() {
    let x = leaf(vec![0.1, -0.5, 1.0], &[3]);
    let p = named(&[("x", &x)]);
    caught(check_gradients(|| exp_sign_flip(&x)?.sum_all(), &p, None, Tolerances::default()).unwrap());
}

#[test]
fn mutation_matmul_missing_transpose_is_caught() {
    let x = leaf((0..6).map(|i| i as f32 * 0.3 - 0.8).collect(), &[2, 3]);
    let w = leaf((0..9).map(|i| (i as f32 * 0.7).sin()).collect(), &[3, 3]);
    let p = named(&[("x", &x), ("w", &w)]);
    let r = Tensor::from_vec(vec![0.5, -1.0, 0.25, 1.0, 0.75, -0.5], [2, 3]).unwrap();
    caught(check_gradients(|| matmul_missing_transpose(&x, &w), &p, Some(&r), Tolerances::default()).unwrap());
}

#[test]
fn mutation_mean_dropped_scale_is_caught() {
    let x = leaf(vec![0.2, 0.4, -0.6, 1.0, 0.0, 2.0], &[6]);
    let p = named(&[("x", &x)]);
    caught(check_gradients(|| mean_without_scale(&x), &p, None, Tolerances::default()).unwrap());
}

#[test]
fn mutation_div_sign_is_caught() {
    let x = leaf(vec![0.5, -1.0, 1.5], &[3]);
    let y = leaf(vec![1.2, 0.8, -2.0], &[3]);
    let p = named(&[("x", &x), ("y", &y)]);
    caught(check_gradients(|| div_missing_negation(&x, &y)?.sum_all(), &p, None, Tolerances::default()).unwrap());
}

#[test]
fn mutation_sigmoid_uses_input_is_caught() {
    let x = leaf(vec![-2.0, 0.5, 1.5], &[3]);
    let p = named(&[("x", &x)]);
    caught(check_gradients(|| sigmoid_grad_from_input(&x)?.sum_all(), &p, None, Tolerances::default()).unwrap());
}

#[test]
fn correct_versions_of_the_mutants_pass() {
    let x = leaf(vec![0.3, -1.2, 2.0, 0.7], &[2, 2]);
    let y = leaf(vec![1.5, 0.4, -0.8, 2.2], &[2, 2]);
    let p = named(&[("x", &x), ("y", &y)]);
    let tol = Tolerances::default();
    assert!(check_gradients(|| x.mul(&y)?.sum_all(), &p, None, tol).unwrap().pass());
    assert!(check_gradients(|| x.div(&y)?.sum_all(), &p, None, tol).unwrap().pass());
    assert!(check_gradients(|| x.matmul(&y), &p, Some(&Tensor::ones([2, 2])), tol).unwrap().pass());
}
