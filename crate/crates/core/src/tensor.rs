use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use crate::autograd::NodeRef;
use crate::error::{shape_err, Error, Result};
use crate::layout::{for_each_offsets, Layout};
use crate::rng::Rng;
use crate::shape::Shape;

/// Element type tag. Only 32-bit floats exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DType {
    F32,
}

/// Flat element buffer shared by every view over it.
///
/// Each write bumps `version`; the tape compares versions at backward time to
/// catch in-place mutation of recorded tensors.
pub(crate) struct Storage {
    data: RwLock<Vec<f32>>,
    version: AtomicU64,
}

impl Storage {
    pub fn new(data: Vec<f32>) -> Arc<Self> {
        Arc::new(Storage {
            data: RwLock::new(data),
            version: AtomicU64::new(0),
        })
    }

    pub fn read(&self) -> RwLockReadGuard<'_, Vec<f32>> {
        self.data.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn write(&self) -> RwLockWriteGuard<'_, Vec<f32>> {
        self.version.fetch_add(1, Ordering::AcqRel);
        self.data.write().unwrap_or_else(|e| e.into_inner())
    }

    pub fn version(&self) -> u64 {
        self.version.load(Ordering::Acquire)
    }

    pub fn len(&self) -> usize {
        self.read().len()
    }
}

/// Identity of a logical tensor. Clones share it; every op output gets a fresh one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TensorId(u64);

impl TensorId {
    pub(crate) fn fresh() -> Self {
        static NEXT: AtomicU64 = AtomicU64::new(0);
        TensorId(NEXT.fetch_add(1, Ordering::Relaxed))
    }
}

/// Fill rule for [`Tensor::create`].
#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    Zeros,
    Ones,
    Constant(f32),
    Uniform { lo: f32, hi: f32, seed: u64 },
    FromValues(Vec<f32>),
}

/// Dense n-dimensional array of `f32` over shared storage.
///
/// Views produced by [`Tensor::reshape`], [`Tensor::transpose2d`] and
/// [`Tensor::broadcast_to`] alias the same buffer, so writes through one are
/// visible through all of them.
#[derive(Clone)]
pub struct Tensor {
    pub(crate) storage: Arc<Storage>,
    pub(crate) layout: Layout,
    pub(crate) id: TensorId,
    pub(crate) requires_grad: bool,
    pub(crate) node: Option<NodeRef>,
}

impl Tensor {
    pub fn create(shape: impl Into<Shape>, init: Init) -> Result<Tensor> {
        let shape = shape.into();
        let n = shape.numel();
        let data = match init {
            Init::Zeros => vec![0.0; n],
            Init::Ones => vec![1.0; n],
            Init::Constant(c) => vec![c; n],
            Init::Uniform { lo, hi, seed } => {
                let mut rng = Rng::new(seed);
                (0..n).map(|_| rng.uniform(lo, hi)).collect()
            }
            Init::FromValues(values) => {
                if values.len() != n {
                    return Err(shape_err(
                        "create",
                        format!("{} values for shape {shape} ({n} elements)", values.len()),
                    ));
                }
                values
            }
        };
        Ok(Tensor::from_parts(data, shape))
    }

    pub fn from_vec(data: Vec<f32>, shape: impl Into<Shape>) -> Result<Tensor> {
        Tensor::create(shape, Init::FromValues(data))
    }

    pub fn zeros(shape: impl Into<Shape>) -> Tensor {
        let shape = shape.into();
        Tensor::from_parts(vec![0.0; shape.numel()], shape)
    }

    pub fn ones(shape: impl Into<Shape>) -> Tensor {
        Tensor::full(shape, 1.0)
    }

    pub fn full(shape: impl Into<Shape>, value: f32) -> Tensor {
        let shape = shape.into();
        Tensor::from_parts(vec![value; shape.numel()], shape)
    }

    pub fn scalar(value: f32) -> Tensor {
        Tensor::from_parts(vec![value], Shape::scalar())
    }

    pub fn uniform(shape: impl Into<Shape>, lo: f32, hi: f32, seed: u64) -> Tensor {
        let shape = shape.into();
        let mut rng = Rng::new(seed);
        let data = (0..shape.numel()).map(|_| rng.uniform(lo, hi)).collect();
        Tensor::from_parts(data, shape)
    }

    pub fn eye(n: usize) -> Tensor {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Tensor::from_parts(data, Shape::new(vec![n, n]))
    }

    pub fn zeros_like(other: &Tensor) -> Tensor {
        Tensor::zeros(other.shape().clone())
    }

    pub fn ones_like(other: &Tensor) -> Tensor {
        Tensor::ones(other.shape().clone())
    }

    /// Fresh contiguous tensor owning `data`. Caller guarantees the length matches.
    pub(crate) fn from_parts(data: Vec<f32>, shape: Shape) -> Tensor {
        debug_assert_eq!(data.len(), shape.numel());
        Tensor {
            storage: Storage::new(data),
            layout: Layout::contiguous(shape),
            id: TensorId::fresh(),
            requires_grad: false,
            node: None,
        }
    }

    /// New untracked tensor over the same storage.
    pub(crate) fn view_with(&self, layout: Layout) -> Tensor {
        debug_assert!(layout
            .max_index()
            .is_none_or(|m| m < self.storage.len()));
        Tensor {
            storage: Arc::clone(&self.storage),
            layout,
            id: TensorId::fresh(),
            requires_grad: false,
            node: None,
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.layout.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.layout.dims()
    }

    pub fn rank(&self) -> usize {
        self.layout.shape.rank()
    }

    pub fn numel(&self) -> usize {
        self.layout.numel()
    }

    pub fn strides(&self) -> &[usize] {
        &self.layout.strides
    }

    pub fn offset(&self) -> usize {
        self.layout.offset
    }

    pub fn dtype(&self) -> DType {
        DType::F32
    }

    pub fn id(&self) -> TensorId {
        self.id
    }

    pub fn is_contiguous(&self) -> bool {
        self.layout.is_contiguous()
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    /// Mark this tensor as a differentiable leaf (or clear the mark).
    pub fn requires_grad_(mut self, requires: bool) -> Tensor {
        self.requires_grad = requires;
        self
    }

    /// Whether this tensor is linked to a node on the gradient tape.
    pub fn has_node(&self) -> bool {
        self.node.is_some()
    }

    pub(crate) fn node(&self) -> Option<NodeRef> {
        self.node
    }

    /// Same values and storage, cut from the graph.
    pub fn detach(&self) -> Tensor {
        self.view_with(self.layout.clone())
    }

    pub fn shares_storage(&self, other: &Tensor) -> bool {
        Arc::ptr_eq(&self.storage, &other.storage)
    }

    /// Monotone counter of writes to the underlying storage.
    pub fn version(&self) -> u64 {
        self.storage.version()
    }

    /// Values in row-major logical order.
    pub fn to_vec(&self) -> Vec<f32> {
        let data = self.storage.read();
        let n = self.numel();
        if self.is_contiguous() {
            let start = self.layout.offset;
            return data[start..start + n].to_vec();
        }
        let mut out = Vec::with_capacity(n);
        for_each_offsets(
            self.dims(),
            [&self.layout.strides],
            [self.layout.offset],
            0,
            n,
            |_, [o]| out.push(data[o]),
        );
        out
    }

    /// Run `f` over the logical values as one contiguous slice, borrowing when possible.
    pub(crate) fn with_values<R>(&self, f: impl FnOnce(&[f32]) -> R) -> R {
        if self.is_contiguous() {
            let data = self.storage.read();
            let start = self.layout.offset;
            f(&data[start..start + self.numel()])
        } else {
            f(&self.to_vec())
        }
    }

    pub fn item(&self) -> Result<f32> {
        if self.numel() != 1 {
            return Err(Error::NonScalar {
                shape: self.dims().to_vec(),
            });
        }
        Ok(self.storage.read()[self.layout.offset])
    }

    fn checked_offset(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.rank() {
            return Err(Error::Rank {
                op: "index",
                expected: self.rank(),
                got: index.len(),
            });
        }
        for (axis, (&i, &d)) in index.iter().zip(self.dims()).enumerate() {
            if i >= d {
                return Err(shape_err(
                    "index",
                    format!("index {i} out of bounds for axis {axis} with extent {d}"),
                ));
            }
        }
        Ok(self.layout.offset_of(index))
    }

    pub fn get(&self, index: &[usize]) -> Result<f32> {
        let off = self.checked_offset(index)?;
        Ok(self.storage.read()[off])
    }

    /// Write one element in place. Visible through every view of the storage.
    pub fn set(&self, index: &[usize], value: f32) -> Result<()> {
        let off = self.checked_offset(index)?;
        self.storage.write()[off] = value;
        Ok(())
    }

    /// Storage offset of logical row-major position `pos`.
    pub(crate) fn flat_offset(&self, pos: usize) -> usize {
        let mut rem = pos;
        let mut off = self.layout.offset;
        for (&d, &s) in self.dims().iter().zip(&self.layout.strides).rev() {
            off += (rem % d) * s;
            rem /= d;
        }
        off
    }

    pub fn get_flat(&self, pos: usize) -> f32 {
        self.storage.read()[self.flat_offset(pos)]
    }

    pub fn set_flat(&self, pos: usize, value: f32) {
        let off = self.flat_offset(pos);
        self.storage.write()[off] = value;
    }

    pub fn fill_(&self, value: f32) {
        let n = self.numel();
        let mut data = self.storage.write();
        for_each_offsets(
            self.layout.dims(),
            [&self.layout.strides],
            [self.layout.offset],
            0,
            n,
            |_, [o]| data[o] = value,
        );
    }

    /// Overwrite the values of this tensor with those of `src` (same shape).
    pub fn copy_from(&self, src: &Tensor) -> Result<()> {
        if src.dims() != self.dims() {
            return Err(shape_err(
                "copy_from",
                format!("source {} vs destination {}", src.shape(), self.shape()),
            ));
        }
        let values = src.to_vec();
        let mut data = self.storage.write();
        for_each_offsets(
            self.layout.dims(),
            [&self.layout.strides],
            [self.layout.offset],
            0,
            values.len(),
            |p, [o]| data[o] = values[p],
        );
        Ok(())
    }

    /// Mutate a contiguous tensor's values in place.
    pub fn update_contiguous<R>(&self, f: impl FnOnce(&mut [f32]) -> R) -> Result<R> {
        if !self.is_contiguous() {
            return Err(Error::InvalidArgument(
                "in-place update requires a contiguous tensor".into(),
            ));
        }
        let n = self.numel();
        let start = self.layout.offset;
        let mut data = self.storage.write();
        Ok(f(&mut data[start..start + n]))
    }

    /// Contiguous copy when strided, otherwise `self`. Untracked.
    pub(crate) fn compact(&self) -> Tensor {
        if self.is_contiguous() {
            self.clone()
        } else {
            Tensor::from_parts(self.to_vec(), self.shape().clone())
        }
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn nested(f: &mut fmt::Formatter<'_>, dims: &[usize], values: &[f32]) -> fmt::Result {
            match dims.split_first() {
                None => write!(f, "{}", values[0]),
                Some((&d, rest)) => {
                    let step = rest.iter().product::<usize>();
                    write!(f, "[")?;
                    for i in 0..d {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        nested(f, rest, &values[i * step..(i + 1) * step])?;
                    }
                    write!(f, "]")
                }
            }
        }
        write!(f, "tensor(shape={}, ", self.shape())?;
        if self.numel() == 0 {
            write!(f, "[]")?;
        } else {
            nested(f, self.dims(), &self.to_vec())?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn create_fill_rules() {
        let z = Tensor::create([2, 2], Init::Zeros).unwrap();
        assert_eq!(z.to_vec(), vec![0.0; 4]);
        let v = Tensor::create([3], Init::FromValues(vec![1.0, 2.0, 3.0])).unwrap();
        assert_eq!(v.to_vec(), vec![1.0, 2.0, 3.0]);
        assert!(!v.requires_grad());
        assert!(v.is_contiguous());
        let c = Tensor::create([2], Init::Constant(2.5)).unwrap();
        assert_eq!(c.to_vec(), vec![2.5, 2.5]);
    }

    #[test]
    fn value_count_mismatch() {
        let r = Tensor::create([2], Init::FromValues(vec![1.0, 2.0, 3.0]));
        assert!(matches!(r, Err(Error::Shape { .. })));
    }

    #[test]
    fn uniform_is_seeded() {
        let init = Init::Uniform {
            lo: -1.0,
            hi: 1.0,
            seed: 42,
        };
        let a = Tensor::create([4, 4], init.clone()).unwrap();
        let b = Tensor::create([4, 4], init).unwrap();
        assert_eq!(a.to_vec(), b.to_vec());
        assert!(a.to_vec().iter().all(|v| (-1.0..1.0).contains(v)));
    }

    #[test]
    fn set_and_get() {
        let t = Tensor::zeros([2, 3]);
        t.set(&[1, 2], 7.0).unwrap();
        assert_eq!(t.get(&[1, 2]).unwrap(), 7.0);
        assert_eq!(t.get_flat(5), 7.0);
        assert!(t.get(&[2, 0]).is_err());
        assert!(t.set(&[0], 1.0).is_err());
    }

    #[test]
    fn writes_bump_version() {
        let t = Tensor::zeros([2]);
        let v0 = t.version();
        t.fill_(3.0);
        assert!(t.version() > v0);
        assert_eq!(t.to_vec(), vec![3.0, 3.0]);
    }

    #[test]
    fn display_nested() {
        let t = Tensor::from_vec(vec![1.0, 2.0, 3.0, 4.0], [2, 2]).unwrap();
        assert_eq!(t.to_string(), "tensor(shape=[2, 2], [[1, 2], [3, 4]])");
        assert_eq!(Tensor::scalar(0.5).to_string(), "tensor(shape=[], 0.5)");
    }

    #[test]
    fn empty_tensor_is_legal() {
        let t = Tensor::zeros([0, 3]);
        assert_eq!(t.numel(), 0);
        assert!(t.to_vec().is_empty());
        assert_eq!(t.to_string(), "tensor(shape=[0, 3], [])");
    }
}
