//! Browser bindings for the demo page in `www/`.

use tensorlite::demo::{self, DemoConfig, Targets, Task};
use tensorlite::gradcheck::{suite, Tolerances};
use tensorlite::nn::{activation, ActivationKind};
use tensorlite::optim::OptimizerKind;
use tensorlite::{backward, reset_tape, Tensor};
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Result of a training run. Grid values are row-major, `grid_size²` long,
/// covering `[lo, hi]²` with y increasing downwards.
#[wasm_bindgen]
pub struct Training {
    losses: Vec<f32>,
    grid: Vec<f32>,
    grid_size: usize,
    lo: f32,
    hi: f32,
    points: Vec<f32>,
    labels: Vec<f32>,
    accuracy: f32,
}

#[wasm_bindgen]
impl Training {
    pub fn losses(&self) -> Vec<f32> {
        self.losses.clone()
    }
    pub fn grid(&self) -> Vec<f32> {
        self.grid.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn grid_size(&self) -> usize {
        self.grid_size
    }
    #[wasm_bindgen(getter)]
    pub fn lo(&self) -> f32 {
        self.lo
    }
    #[wasm_bindgen(getter)]
    pub fn hi(&self) -> f32 {
        self.hi
    }
    /// Interleaved x, y.
    pub fn points(&self) -> Vec<f32> {
        self.points.clone()
    }
    pub fn labels(&self) -> Vec<f32> {
        self.labels.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn accuracy(&self) -> f32 {
        self.accuracy
    }
}

pub fn train_native(
    task: &str,
    seed: u64,
    epochs: usize,
    lr: Option<f32>,
    optimizer: Option<&str>,
    grid_size: usize,
) -> tensorlite::Result<Training> {
    let task = Task::parse(task)?;
    let mut config = DemoConfig::new(task);
    config.seed = seed;
    config.epochs = epochs;
    if let Some(lr) = lr {
        config.lr = lr;
    }
    if let Some(name) = optimizer {
        config.optimizer = OptimizerKind::parse(name)?;
    }
    let mut outcome = demo::run(config, |_| {})?;
    let (lo, hi) = match task {
        Task::Xor => (-0.5, 1.5),
        Task::Blobs => (-5.0, 5.0),
    };
    let n = grid_size.max(2);
    let step = (hi - lo) / (n - 1) as f32;
    let mut coords = Vec::with_capacity(2 * n * n);
    for r in 0..n {
        for c in 0..n {
            coords.push(lo + c as f32 * step);
            coords.push(lo + r as f32 * step);
        }
    }
    let grid = demo::predict(task, &mut outcome.model, &Tensor::from_vec(coords, [n * n, 2])?)?;
    let labels = match &outcome.data.targets {
        Targets::Values(t) => t.to_vec(),
        Targets::Classes(c) => c.iter().map(|&c| c as f32).collect(),
    };
    reset_tape();
    Ok(Training {
        losses: outcome.records.iter().map(|r| r.loss).collect(),
        grid,
        grid_size: n,
        lo,
        hi,
        points: outcome.data.inputs.to_vec(),
        labels,
        accuracy: outcome.accuracy,
    })
}

/// Train the xor or blobs classifier and sample its output on a grid.
#[wasm_bindgen]
pub fn train(
    task: &str,
    seed: u32,
    epochs: u32,
    lr: Option<f32>,
    optimizer: Option<String>,
    grid_size: u32,
) -> Result<Training, JsError> {
    train_native(task, seed as u64, epochs as usize, lr, optimizer.as_deref(), grid_size as usize)
        .map_err(js_err)
}

pub fn activation_curve_native(name: &str, lo: f32, hi: f32, n: usize) -> tensorlite::Result<Vec<f32>> {
    let kind = ActivationKind::from_name(name)
        .ok_or_else(|| tensorlite::Error::InvalidArgument(format!("unknown activation {name}")))?;
    let n = n.max(2);
    let xs: Vec<f32> = (0..n).map(|i| lo + (hi - lo) * i as f32 / (n - 1) as f32).collect();
    reset_tape();
    let x = Tensor::from_vec(xs.clone(), [n])?.requires_grad_(true);
    let y = activation(kind, &x)?;
    let grads = backward(&y, Some(&Tensor::ones([n])))?;
    let dy = grads.get(&x).map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let ys = y.to_vec();
    reset_tape();
    Ok((0..n).flat_map(|i| [xs[i], ys[i], dy[i]]).collect())
}

/// `n` samples of an activation over `[lo, hi]`, interleaved as x, f(x), f'(x).
/// The derivative comes from the autograd pullback.
#[wasm_bindgen]
pub fn activation_curve(name: &str, lo: f32, hi: f32, n: u32) -> Result<Vec<f32>, JsError> {
    activation_curve_native(name, lo, hi, n as usize).map_err(js_err)
}

/// Case and family names accepted by [`gradcheck`], newline separated.
#[wasm_bindgen]
pub fn gradcheck_names() -> String {
    suite::selectable_names().join("\n")
}

pub fn gradcheck_native(only: Option<&str>, seed: u64, rtol: f64, atol: f64) -> tensorlite::Result<String> {
    let tol = Tolerances {
        rtol,
        atol,
        ..Tolerances::default()
    };
    let seeds = [seed, seed + 1, seed + 2];
    Ok(suite::run_suite(only.filter(|s| !s.is_empty()), &seeds, tol)?.to_string())
}

/// Run the gradient-check suite and return its report text.
#[wasm_bindgen]
pub fn gradcheck(only: Option<String>, seed: u32, rtol: f64, atol: f64) -> Result<String, JsError> {
    gradcheck_native(only.as_deref(), seed as u64, rtol, atol).map_err(js_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_training_is_repeatable() {
        let t = train_native("xor", 0, 5000, None, None, 3).unwrap();
        assert_eq!(t.losses.len(), 5001);
        assert_eq!(t.grid.len(), 9);
        let again = train_native("xor", 0, 5000, None, None, 3).unwrap();
        assert_eq!(t.grid, again.grid);
        assert_eq!(t.accuracy, 1.0);
    }

    #[test]
    fn blobs_overrides() {
        let t = train_native("blobs", 1, 10, Some(0.05), Some("sgd"), 4).unwrap();
        assert_eq!(t.losses.len(), 11);
        assert_eq!(t.points.len(), 2 * t.labels.len());
        assert!(t.grid.iter().all(|p| (0.0..=1.0).contains(p)));
        assert!(train_native("spiral", 0, 1, None, None, 4).is_err());
        assert!(train_native("xor", 0, 1, None, Some("lbfgs"), 4).is_err());
    }

    #[test]
    fn relu_curve() {
        let c = activation_curve_native("relu", -1.0, 1.0, 5).unwrap();
        assert_eq!(c, vec![-1.0, 0.0, 0.0, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5, 1.0, 1.0, 1.0, 1.0]);
        assert!(activation_curve_native("swish", -1.0, 1.0, 5).is_err());
    }

    #[test]
    fn sigmoid_derivative() {
        let c = activation_curve_native("sigmoid", -3.0, 3.0, 7).unwrap();
        for p in c.chunks(3) {
            let s = 1.0 / (1.0 + (-p[0] as f64).exp());
            assert!((p[2] as f64 - s * (1.0 - s)).abs() < 1e-6);
        }
    }

    #[test]
    fn gradcheck_report() {
        let text = gradcheck_native(Some("matmul"), 0, 1e-2, 1e-3).unwrap();
        assert!(text.ends_with("OVERALL PASS"));
        assert!(gradcheck_native(Some("nope"), 0, 1e-2, 1e-3).is_err());
        assert!(gradcheck_names().lines().any(|l| l == "matmul"));
    }
}
