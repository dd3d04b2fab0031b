use proptest::prelude::*;
use tensorlite::optim::{
    adam_step, rmsprop_step, sgd_step, Adam, AdamConfig, Optimizer, RmsProp, RmsPropConfig, Sgd,
    SgdConfig,
};
use tensorlite::{reset_tape, Tensor};

/// Minimize θ² from θ = 1; returns the step at which |θ| < 1e-3 first holds.
fn quadratic(opt: &mut dyn Optimizer, steps: usize) -> Option<usize> {
    let theta = Tensor::from_vec(vec![1.0], [1]).unwrap().requires_grad_(true);
    let params = vec![("theta".to_string(), theta.clone())];
    for step in 0..steps {
        if theta.to_vec()[0].abs() < 1e-3 {
            return Some(step);
        }
        reset_tape();
        let loss = theta.mul(&theta).unwrap().sum_all().unwrap();
        let grads = loss.backward().unwrap();
        opt.step_all(&params, &grads).unwrap();
    }
    (theta.to_vec()[0].abs() < 1e-3).then_some(steps)
}

#[test]
fn quadratic_descent_sgd() {
    let mut opt = Sgd::new(SgdConfig {
        lr: 0.1,
        ..SgdConfig::default()
    });
    assert!(quadratic(&mut opt, 1000).is_some());
}

#[test]
fn quadratic_descent_adam() {
    // At η = 1e-3 the update is sign-like and at most ~η per step, so the walk
    // from θ = 1 needs about 2.7k steps; θ is still ≈ 0.26 at step 1000.
    let mut opt = Adam::new(AdamConfig::default());
    let reached = quadratic(&mut opt, 3000).expect("default Adam converges");
    assert!(reached > 1000);
    let mut fast = Adam::new(AdamConfig {
        lr: 0.01,
        ..AdamConfig::default()
    });
    assert!(quadratic(&mut fast, 1000).is_some());
}

#[test]
fn quadratic_descent_rmsprop() {
    let mut opt = RmsProp::new(RmsPropConfig::default());
    assert!(quadratic(&mut opt, 1000).is_some());
}

#[test]
fn rmsprop_long_run_is_sign_like() {
    let c = RmsPropConfig::default();
    let (mut th, mut v) = ([0.0f32], [0.0f32]);
    let mut last = 0.0;
    for _ in 0..1000 {
        let before = th[0];
        rmsprop_step(&mut th, &[0.5], &mut v, &c);
        last = th[0] - before;
    }
    let g2 = 0.25f64;
    let limit = -(c.lr as f64) / (1.0 + c.eps as f64 / g2).sqrt();
    // v_1000 = (1 − ρ^1000) g², still 4e-5 short of g².
    assert!((last as f64 - limit).abs() < 1e-3 * c.lr as f64);
}

proptest! {
    #[test]
    fn weight_decay_is_coupled(
        theta in -64i32..64, g in -64i32..64, lr_exp in 1u32..6, wd_exp in 1u32..6
    ) {
        // Dyadic values keep both sides exact in f32.
        let (theta, g) = (theta as f32 / 4.0, g as f32 / 4.0);
        let lr = 0.5f32.powi(lr_exp as i32);
        let wd = 0.5f32.powi(wd_exp as i32);
        let mut th = [theta];
        sgd_step(&mut th, &[g], &mut [0.0], &SgdConfig { lr, momentum: 0.0, weight_decay: wd });
        prop_assert_eq!(th[0], theta * (1.0 - lr * wd) - lr * g);
    }

    #[test]
    fn adam_step_is_bounded(grads in prop::collection::vec(-100.0f32..100.0, 1..40)) {
        let c = AdamConfig::default();
        let (mut th, mut m, mut v) = ([0.0f32], [0.0f32], [0.0f32]);
        for (t, g) in grads.iter().enumerate() {
            let before = th[0];
            adam_step(&mut th, &[*g], &mut m, &mut v, t as u64 + 1, &c);
            prop_assert!((th[0] - before).abs() <= 10.0 * c.lr);
        }
    }

    #[test]
    fn adam_first_step_closed_form(g in prop_oneof![-1e3f32..-1e-3, 1e-3f32..1e3]) {
        let c = AdamConfig::default();
        let mut th = [0.0f32];
        adam_step(&mut th, &[g], &mut [0.0], &mut [0.0], 1, &c);
        let gd = g as f64;
        let expect = -(c.lr as f64) * gd / (gd.abs() + c.eps as f64);
        prop_assert!((th[0] as f64 - expect).abs() <= 1e-6 * c.lr as f64);
    }

    #[test]
    fn adam_first_step_scale_invariant(g in prop_oneof![-1e2f32..-1e-2, 1e-2f32..1e2]) {
        let c = AdamConfig::default();
        let (mut a, mut b) = ([0.0f32], [0.0f32]);
        adam_step(&mut a, &[g], &mut [0.0], &mut [0.0], 1, &c);
        adam_step(&mut b, &[2.0 * g], &mut [0.0], &mut [0.0], 1, &c);
        prop_assert!((a[0] - b[0]).abs() <= 1e-6 * c.lr);
    }

    #[test]
    fn updates_are_deterministic_and_order_free(
        vals in prop::collection::vec(-5.0f32..5.0, 6), order in any::<bool>()
    ) {
        let run = |flip: bool| {
            let a = Tensor::from_vec(vals[..3].to_vec(), [3]).unwrap().requires_grad_(true);
            let b = Tensor::from_vec(vals[3..].to_vec(), [3]).unwrap().requires_grad_(true);
            let mut opt = Adam::new(AdamConfig::default());
            for _ in 0..3 {
                let (ga, gb) = (Tensor::ones([3]), Tensor::full([3], -0.5));
                if flip {
                    opt.step("b", &b, &gb).unwrap();
                    opt.step("a", &a, &ga).unwrap();
                } else {
                    opt.step("a", &a, &ga).unwrap();
                    opt.step("b", &b, &gb).unwrap();
                }
            }
            (a.to_vec(), b.to_vec())
        };
        prop_assert_eq!(run(order), run(false));
    }
}
