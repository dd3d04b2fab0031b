//! Dense `f32` tensors with broadcasting, reverse-mode automatic
//! differentiation, a small catalog of layers, losses and optimizers, and a
//! finite-difference gradient checker.
//!
//! ```
//! use tensorlite::Tensor;
//!
//! let x = Tensor::from_vec(vec![1.0, 2.0, 3.0], [3]).unwrap().requires_grad_(true);
//! let loss = x.mul(&x).unwrap().sum_all().unwrap();
//! let grads = loss.backward().unwrap();
//! assert_eq!(grads.get(&x).unwrap().to_vec(), vec![2.0, 4.0, 6.0]);
//! ```

pub mod autograd;
pub mod nn;
pub mod optim;
pub mod gradcheck;
pub mod demo;
mod error;
mod layout;
mod ops;
pub mod parallel;
pub mod rng;
mod shape;
mod tensor;

pub use autograd::{backward, no_grad, reset_tape, GradStore};
pub use error::{Error, Result};
pub use ops::{BinaryOp, ReduceOp, UnaryOp};
pub use shape::{broadcast_shapes, BroadcastPlan, Shape};
pub use tensor::{DType, Init, Tensor, TensorId};
