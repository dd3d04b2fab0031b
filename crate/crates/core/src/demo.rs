//! Two small synthetic training tasks used to check end-to-end loss descent.
//!
//! * `xor`: the four XOR points, a 2-8-1 network (dense, tanh, dense,
//!   sigmoid) trained on MSE.
//! * `blobs`: two isotropic Gaussians (std 1) centred at (−2, −2) and (2, 2),
//!   a dense-relu-dense classifier trained on cross-entropy.
//!
//! Training is full batch. Record `e` holds the loss (and, for blobs, the
//! accuracy) before update `e`; one extra record after the last update holds
//! the final values, so `epochs = 0` yields just the initial loss.

use std::fmt;

use crate::autograd::{no_grad, reset_tape};
use crate::error::{Error, Result};
use crate::nn::{self, Activation, ActivationKind, Dense, Layer, Sequential};
use crate::optim::OptimizerKind;
use crate::rng::Rng;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Xor,
    Blobs,
}

impl Task {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "xor" => Ok(Task::Xor),
            "blobs" => Ok(Task::Blobs),
            other => Err(Error::InvalidArgument(format!("unknown demo task {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Xor => "xor",
            Task::Blobs => "blobs",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DemoConfig {
    pub task: Task,
    pub seed: u64,
    pub epochs: usize,
    pub lr: f32,
    pub optimizer: OptimizerKind,
    /// Points per blob (blobs only).
    pub points_per_class: usize,
    /// Hidden width (blobs only; xor is fixed at 8).
    pub hidden: usize,
}

impl DemoConfig {
    /// Reference configuration: xor uses SGD η=0.5 for 5000 epochs, blobs
    /// uses Adam η=0.01 for 200 steps on 100 points per class.
    pub fn new(task: Task) -> Self {
        match task {
            Task::Xor => DemoConfig {
                task,
                seed: 0,
                epochs: 5000,
                lr: 0.5,
                optimizer: OptimizerKind::Sgd,
                points_per_class: 0,
                hidden: 8,
            },
            Task::Blobs => DemoConfig {
                task,
                seed: 0,
                epochs: 200,
                lr: 0.01,
                optimizer: OptimizerKind::Adam,
                points_per_class: 100,
                hidden: 16,
            },
        }
    }

    /// Whether this run is long enough for the task's threshold to apply.
    pub fn threshold_applies(&self) -> bool {
        self.epochs >= DemoConfig::new(self.task).epochs
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f32,
    pub accuracy: Option<f32>,
}

impl fmt::Display for EpochRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.epoch, self.loss)?;
        if let Some(a) = self.accuracy {
            write!(f, ",{a}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub enum Targets {
    /// One regression target per row, shape `n×1`.
    Values(Tensor),
    Classes(Vec<usize>),
}

#[derive(Clone, Debug)]
pub struct Dataset {
    /// `n×2`
    pub inputs: Tensor,
    pub targets: Targets,
}

impl Dataset {
    pub fn xor() -> Self {
        Dataset {
            inputs: Tensor::from_vec(vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0], [4, 2])
                .expect("static shape"),
            targets: Targets::Values(
                Tensor::from_vec(vec![0.0, 1.0, 1.0, 0.0], [4, 1]).expect("static shape"),
            ),
        }
    }

    /// Class `c` is drawn around `(4c − 2, 4c − 2)`; rows alternate classes.
    pub fn blobs(points_per_class: usize, seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let mut xs = Vec::with_capacity(points_per_class * 4);
        let mut labels = Vec::with_capacity(points_per_class * 2);
        for _ in 0..points_per_class {
            for class in 0..2 {
                let centre = if class == 0 { -2.0 } else { 2.0 };
                xs.push((centre + rng.normal()) as f32);
                xs.push((centre + rng.normal()) as f32);
                labels.push(class);
            }
        }
        Dataset {
            inputs: Tensor::from_vec(xs, [points_per_class * 2, 2]).expect("consistent length"),
            targets: Targets::Classes(labels),
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.dims()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub struct DemoOutcome {
    pub config: DemoConfig,
    pub records: Vec<EpochRecord>,
    /// Final training-set accuracy; xor outputs are thresholded at 0.5.
    pub accuracy: f32,
    pub model: Sequential,
    pub data: Dataset,
}

impl DemoOutcome {
    pub fn final_record(&self) -> EpochRecord {
        *self.records.last().expect("at least the initial record")
    }

    pub fn final_loss(&self) -> f32 {
        self.final_record().loss
    }

    /// Task threshold: xor MSE < 0.05, blobs accuracy ≥ 0.95.
    pub fn threshold_met(&self) -> bool {
        let last = self.final_record();
        match self.config.task {
            Task::Xor => last.loss < 0.05,
            Task::Blobs => last.accuracy.is_some_and(|a| a >= 0.95),
        }
    }

    /// `done task=… epochs=… final_loss=… accuracy=…`
    pub fn summary(&self) -> String {
        let last = self.final_record();
        format!(
            "done task={} epochs={} final_loss={} accuracy={}",
            self.config.task.name(),
            self.config.epochs,
            last.loss,
            self.accuracy
        )
    }
}

fn build_model(config: &DemoConfig) -> Sequential {
    let mut seeds = Rng::new(config.seed);
    match config.task {
        Task::Xor => Sequential::new()
            .push(Dense::new(2, 8, seeds.next_u64()))
            .push(Activation::new(ActivationKind::Tanh))
            .push(Dense::new(8, 1, seeds.next_u64()))
            .push(Activation::new(ActivationKind::Sigmoid)),
        Task::Blobs => Sequential::new()
            .push(Dense::new(2, config.hidden, seeds.next_u64()))
            .push(Activation::new(ActivationKind::Relu))
            .push(Dense::new(config.hidden, 2, seeds.next_u64())),
    }
}

fn loss_of(model: &mut Sequential, data: &Dataset) -> Result<(Tensor, Tensor)> {
    let out = model.forward(&data.inputs)?;
    let loss = match &data.targets {
        Targets::Values(t) => nn::mse(&out, t)?,
        Targets::Classes(labels) => nn::cross_entropy(&out, labels)?,
    };
    Ok((out, loss))
}

fn xor_accuracy(out: &Tensor, targets: &Tensor) -> f32 {
    let hits = out
        .to_vec()
        .iter()
        .zip(targets.to_vec())
        .filter(|&(&o, t)| (o > 0.5) == (t > 0.5))
        .count();
    hits as f32 / targets.numel().max(1) as f32
}

fn accuracy(out: &Tensor, targets: &Targets) -> Option<f32> {
    let Targets::Classes(labels) = targets else {
        return None;
    };
    let logits = out.to_vec();
    let c = out.dims()[1];
    let correct = labels
        .iter()
        .enumerate()
        .filter(|&(i, &label)| {
            let row = &logits[i * c..(i + 1) * c];
            let best = (0..c).fold(0, |b, j| if row[j] > row[b] { j } else { b });
            best == label
        })
        .count();
    Some(correct as f32 / labels.len().max(1) as f32)
}

/// Train per `config`, calling `on_record` as each record is produced.
/// A NaN loss stops training with [`Error::Divergence`].
pub fn run(config: DemoConfig, mut on_record: impl FnMut(&EpochRecord)) -> Result<DemoOutcome> {
    let data = match config.task {
        Task::Xor => Dataset::xor(),
        Task::Blobs => Dataset::blobs(config.points_per_class, config.seed.wrapping_add(0x000b_10b5)),
    };
    let mut model = build_model(&config);
    let params = model.parameters();
    let mut opt = config.optimizer.build(Some(config.lr));
    let mut records = Vec::with_capacity(config.epochs + 1);
    let mut final_accuracy = f32::NAN;

    for epoch in 0..=config.epochs {
        reset_tape();
        let (out, loss) = loss_of(&mut model, &data)?;
        let record = EpochRecord {
            epoch,
            loss: loss.item()?,
            accuracy: accuracy(&out, &data.targets),
        };
        on_record(&record);
        records.push(record);
        if record.loss.is_nan() {
            return Err(Error::Divergence {
                epoch,
                loss: record.loss,
            });
        }
        if epoch == config.epochs {
            final_accuracy = match (&data.targets, record.accuracy) {
                (_, Some(a)) => a,
                (Targets::Values(t), None) => xor_accuracy(&out, t),
                (Targets::Classes(_), None) => unreachable!("class targets always score"),
            };
            break;
        }
        let grads = loss.backward()?;
        opt.step_all(&params, &grads)?;
    }
    reset_tape();
    Ok(DemoOutcome {
        config,
        records,
        accuracy: final_accuracy,
        model,
        data,
    })
}

/// Model output for each row of `points (n×2)`: the sigmoid output for xor,
/// the class-1 softmax probability for blobs.
pub fn predict(task: Task, model: &mut Sequential, points: &Tensor) -> Result<Vec<f32>> {
    let out = no_grad(|| model.forward(points))?;
    Ok(match task {
        Task::Xor => out.to_vec(),
        Task::Blobs => out
            .to_vec()
            .chunks(2)
            .map(|z| 1.0 / (1.0 + (z[0] - z[1]).exp()))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_epochs_gives_initial_loss_only() {
        let mut cfg = DemoConfig::new(Task::Xor);
        cfg.epochs = 0;
        let out = run(cfg, |_| {}).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].epoch, 0);
        assert!(out.records[0].loss > 0.0);
    }

    #[test]
    fn record_format() {
        let r = EpochRecord {
            epoch: 3,
            loss: 0.25,
            accuracy: Some(0.5),
        };
        assert_eq!(r.to_string(), "3,0.25,0.5");
        let r = EpochRecord {
            epoch: 0,
            loss: 1.5,
            accuracy: None,
        };
        assert_eq!(r.to_string(), "0,1.5");
    }

    #[test]
    fn blobs_are_balanced() {
        let d = Dataset::blobs(10, 0);
        assert_eq!(d.len(), 20);
        match d.targets {
            Targets::Classes(l) => assert_eq!(l.iter().filter(|&&c| c == 1).count(), 10),
            _ => unreachable!(),
        }
    }

    #[test]
    fn huge_learning_rate_diverges() {
        let mut cfg = DemoConfig::new(Task::Blobs);
        cfg.optimizer = OptimizerKind::Sgd;
        cfg.lr = 1e30;
        cfg.epochs = 50;
        assert!(matches!(run(cfg, |_| {}), Err(Error::Divergence { .. })));
    }
}
