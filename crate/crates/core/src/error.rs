use std::fmt;

/// Errors raised by tensor construction, kernels, the autograd engine and the nn layers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Element counts or extents disagree.
    Shape { op: &'static str, msg: String },
    /// Two shapes cannot be broadcast together; `axis` indexes the result (left-padded) shape.
    Broadcast {
        lhs: Vec<usize>,
        rhs: Vec<usize>,
        axis: usize,
    },
    AxisOutOfRange { axis: usize, rank: usize },
    Rank {
        op: &'static str,
        expected: usize,
        got: usize,
    },
    /// `max` over an empty extent has no identity.
    EmptyReduction { op: &'static str },
    /// `backward` on a non-scalar loss needs an explicit seed.
    SeedRequired { shape: Vec<usize> },
    /// `backward` on a tensor that carries no graph linkage.
    NoGraph,
    /// The tensor's graph belongs to a tape that has since been reset.
    StaleGraph,
    /// A tensor recorded on the live tape was mutated in place before `backward`.
    InPlaceModified { node: usize, op: &'static str },
    /// A pullback produced a cotangent whose shape differs from its parent.
    PullbackShape {
        op: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    Label { label: usize, classes: usize },
    InvalidArgument(String),
    /// A function expected to return a scalar returned something else.
    NonScalar { shape: Vec<usize> },
    /// Two evaluations of the same function at the same point disagreed.
    NonDeterministic { first: f64, second: f64 },
    /// Error raised by one layer of a `Sequential`.
    Layer { index: usize, source: Box<Error> },
    /// Training produced a non-finite loss.
    Divergence { epoch: usize, loss: f32 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape { op, msg } => write!(f, "shape error in {op}: {msg}"),
            Error::Broadcast { lhs, rhs, axis } => write!(
                f,
                "cannot broadcast {lhs:?} with {rhs:?}: extents differ on axis {axis} and neither is 1"
            ),
            Error::AxisOutOfRange { axis, rank } => {
                write!(f, "axis {axis} out of range for rank {rank}")
            }
            Error::Rank { op, expected, got } => {
                write!(f, "{op} expects rank {expected}, got rank {got}")
            }
            Error::EmptyReduction { op } => write!(f, "{op} over an empty extent"),
            Error::SeedRequired { shape } => {
                write!(f, "backward on non-scalar loss of shape {shape:?} requires a seed")
            }
            Error::NoGraph => write!(f, "tensor is not attached to a computation graph"),
            Error::StaleGraph => write!(f, "tensor belongs to a tape that was reset"),
            Error::InPlaceModified { node, op } => write!(
                f,
                "a tensor saved by node {node} ({op}) was modified in place before backward"
            ),
            Error::PullbackShape { op, expected, got } => write!(
                f,
                "pullback of {op} returned cotangent of shape {got:?}, expected {expected:?}"
            ),
            Error::Label { label, classes } => {
                write!(f, "label {label} out of range for {classes} classes")
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::NonScalar { shape } => {
                write!(f, "expected a scalar, got shape {shape:?}")
            }
            Error::NonDeterministic { first, second } => write!(
                f,
                "function is not deterministic: evaluations gave {first} and {second}"
            ),
            Error::Layer { index, source } => write!(f, "layer {index}: {source}"),
            Error::Divergence { epoch, loss } => {
                write!(f, "loss diverged at epoch {epoch} (loss = {loss})")
            }
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Layer { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}

pub(crate) fn shape_err(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Shape {
        op,
        msg: msg.into(),
    }
}
