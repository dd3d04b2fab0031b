//! Reverse-mode differentiation over a per-thread tape.
//!
//! Every differentiable op calls [`record`] with its output and a pullback
//! closure mapping the output cotangent to one optional cotangent per input.
//! Nodes are appended in execution order, so node ids already form a
//! topological order and [`backward`] simply walks ids downwards from the loss.
//!
//! The tape lives in thread-local storage. It grows until [`reset_tape`] is
//! called; training loops reset once per step. Tensors whose node came from a
//! tape that has since been reset are treated as fresh leaves.

use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{shape_err, Error, Result};
use crate::shape::Shape;
use crate::tensor::{Storage, Tensor, TensorId};

/// One cotangent per op input; `None` when the input gets no gradient.
pub type Cotangents = Vec<Option<Tensor>>;

type Pullback = Rc<dyn Fn(&Tensor) -> Result<Cotangents>>;

/// Position of a node on a specific tape generation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) struct NodeRef {
    pub tape: u64,
    pub id: usize,
}

pub(crate) struct TapeNode {
    op: &'static str,
    parents: Vec<Option<usize>>,
    pullback: Option<Pullback>,
    /// Storages the node read or wrote, with their versions at record time.
    guards: Vec<(Arc<Storage>, u64)>,
    shape: Shape,
}

/// Read-only summary of a recorded node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeInfo {
    pub id: usize,
    pub op: &'static str,
    pub parents: Vec<Option<usize>>,
    pub shape: Vec<usize>,
}

struct Tape {
    generation: u64,
    nodes: Vec<TapeNode>,
    leaves: HashMap<TensorId, usize>,
}

static GENERATION: AtomicU64 = AtomicU64::new(1);

impl Tape {
    fn new() -> Self {
        Tape {
            generation: GENERATION.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
            leaves: HashMap::new(),
        }
    }

    /// Node id for an input, creating a leaf node for untracked grad-requiring tensors.
    fn parent_of(&mut self, t: &Tensor) -> Option<usize> {
        if let Some(node) = t.node() {
            if node.tape == self.generation {
                return Some(node.id);
            }
        }
        if !t.requires_grad() {
            return None;
        }
        if let Some(&id) = self.leaves.get(&t.id()) {
            return Some(id);
        }
        let id = self.nodes.len();
        self.nodes.push(TapeNode {
            op: "leaf",
            parents: Vec::new(),
            pullback: None,
            guards: Vec::new(),
            shape: t.shape().clone(),
        });
        self.leaves.insert(t.id(), id);
        Some(id)
    }
}

thread_local! {
    static TAPE: RefCell<Tape> = RefCell::new(Tape::new());
    static RECORDING: Cell<bool> = const { Cell::new(true) };
}

pub fn is_recording() -> bool {
    RECORDING.with(|r| r.get())
}

struct RecordingGuard(bool);

impl Drop for RecordingGuard {
    fn drop(&mut self) {
        RECORDING.with(|r| r.set(self.0));
    }
}

fn set_recording(on: bool) -> RecordingGuard {
    RecordingGuard(RECORDING.with(|r| r.replace(on)))
}

/// Run `body` with gradient recording disabled; the previous state is restored
/// on exit, including on early return or unwind.
pub fn no_grad<R>(body: impl FnOnce() -> R) -> R {
    let _guard = set_recording(false);
    body()
}

/// Run `body` with recording forced on (inverse of [`no_grad`]).
pub fn enable_grad<R>(body: impl FnOnce() -> R) -> R {
    let _guard = set_recording(true);
    body()
}

/// Drop every node on this thread's tape and start a new generation.
pub fn reset_tape() {
    TAPE.with(|t| *t.borrow_mut() = Tape::new());
}

pub fn tape_len() -> usize {
    TAPE.with(|t| t.borrow().nodes.len())
}

pub fn tape_nodes() -> Vec<NodeInfo> {
    TAPE.with(|t| {
        t.borrow()
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| NodeInfo {
                id,
                op: n.op,
                parents: n.parents.clone(),
                shape: n.shape.dims().to_vec(),
            })
            .collect()
    })
}

/// Attach `output` to the tape as the result of `op` applied to `inputs`.
///
/// When recording is off or no input requires a gradient the output is
/// returned untouched. The pullback must return exactly one entry per input,
/// each with that input's shape.
pub fn record<F>(op: &'static str, inputs: &[&Tensor], mut output: Tensor, pullback: F) -> Tensor
where
    F: Fn(&Tensor) -> Result<Cotangents> + 'static,
{
    if !is_recording() || !inputs.iter().any(|t| t.requires_grad()) {
        return output;
    }
    TAPE.with(|tape| {
        let mut tape = tape.borrow_mut();
        let parents: Vec<Option<usize>> = inputs.iter().map(|t| tape.parent_of(t)).collect();
        let mut guards: Vec<(Arc<Storage>, u64)> = Vec::with_capacity(inputs.len() + 1);
        for t in inputs.iter().copied().chain(std::iter::once(&output)) {
            if !guards.iter().any(|(s, _)| Arc::ptr_eq(s, &t.storage)) {
                guards.push((Arc::clone(&t.storage), t.storage.version()));
            }
        }
        let id = tape.nodes.len();
        tape.nodes.push(TapeNode {
            op,
            parents,
            pullback: Some(Rc::new(pullback)),
            guards,
            shape: output.shape().clone(),
        });
        output.requires_grad = true;
        output.node = Some(NodeRef {
            tape: tape.generation,
            id,
        });
    });
    output
}

/// Accumulated gradients from one backward pass, keyed by tape node.
///
/// Every node reached from the loss has an entry, intermediates included.
/// Buffers are created at the first contribution a node receives.
#[derive(Default)]
pub struct GradStore {
    generation: u64,
    grads: HashMap<usize, Tensor>,
    leaves: HashMap<TensorId, usize>,
    pullback_calls: usize,
}

impl GradStore {
    /// Gradient of the loss with respect to `t`, if `t` was reached.
    pub fn get(&self, t: &Tensor) -> Option<&Tensor> {
        let id = match t.node() {
            Some(n) if n.tape == self.generation => n.id,
            _ => *self.leaves.get(&t.id())?,
        };
        self.grads.get(&id)
    }

    pub fn get_node(&self, id: usize) -> Option<&Tensor> {
        self.grads.get(&id)
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    /// Number of pullbacks invoked during the pass that filled this store.
    pub fn pullback_calls(&self) -> usize {
        self.pullback_calls
    }

    /// Release every gradient buffer.
    pub fn zero_grad(&mut self) {
        self.grads.clear();
        self.grads.shrink_to_fit();
        self.pullback_calls = 0;
    }
}

/// Propagate cotangents from `loss` back through the tape.
///
/// A scalar loss (one element) defaults to seed 1; any other loss needs an
/// explicit seed of the same shape. Runs with recording disabled.
pub fn backward(loss: &Tensor, seed: Option<&Tensor>) -> Result<GradStore> {
    let root = loss.node().ok_or(Error::NoGraph)?;
    let (generation, leaves) = TAPE.with(|t| {
        let t = t.borrow();
        (t.generation, t.leaves.clone())
    });
    if root.tape != generation {
        return Err(Error::StaleGraph);
    }
    let seed = match seed {
        Some(s) if s.dims() == loss.dims() => s.detach(),
        Some(s) => {
            return Err(shape_err(
                "backward",
                format!("seed shape {} vs loss shape {}", s.shape(), loss.shape()),
            ))
        }
        None if loss.numel() == 1 => Tensor::ones(loss.shape().clone()),
        None => {
            return Err(Error::SeedRequired {
                shape: loss.dims().to_vec(),
            })
        }
    };

    no_grad(|| {
        let mut grads: HashMap<usize, Tensor> = HashMap::new();
        grads.insert(root.id, seed);
        let mut pullback_calls = 0;
        for id in (0..=root.id).rev() {
            let Some(cotangent) = grads.get(&id).cloned() else {
                continue;
            };
            let (op, parents, pullback) = TAPE.with(|t| -> Result<_> {
                let t = t.borrow();
                let node = &t.nodes[id];
                for (storage, version) in &node.guards {
                    if storage.version() != *version {
                        return Err(Error::InPlaceModified { node: id, op: node.op });
                    }
                }
                Ok((node.op, node.parents.clone(), node.pullback.clone()))
            })?;
            let Some(pullback) = pullback else {
                continue;
            };
            pullback_calls += 1;
            let cotangents = pullback(&cotangent)?;
            if cotangents.len() != parents.len() {
                return Err(Error::InvalidArgument(format!(
                    "pullback of {op} returned {} cotangents for {} inputs",
                    cotangents.len(),
                    parents.len()
                )));
            }
            for (parent, ct) in parents.into_iter().zip(cotangents) {
                let (Some(parent), Some(ct)) = (parent, ct) else {
                    continue;
                };
                let expected = TAPE.with(|t| t.borrow().nodes[parent].shape.clone());
                if ct.shape() != &expected {
                    return Err(Error::PullbackShape {
                        op,
                        expected: expected.into_vec(),
                        got: ct.dims().to_vec(),
                    });
                }
                let merged = match grads.remove(&parent) {
                    Some(acc) => acc.add(&ct)?,
                    None => ct,
                };
                grads.insert(parent, merged);
            }
        }
        Ok(GradStore {
            generation,
            grads,
            leaves,
            pullback_calls,
        })
    })
}

impl Tensor {
    /// Shorthand for [`backward`] with the default seed.
    pub fn backward(&self) -> Result<GradStore> {
        backward(self, None)
    }
}
