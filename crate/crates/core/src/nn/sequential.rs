use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::{Layer, Mode};

/// Layers applied in order. An empty stack is the identity.
#[derive(Default)]
pub struct Sequential {
    layers: Vec<Box<dyn Layer>>,
    mode: Mode,
}

impl Sequential {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(mut self, layer: impl Layer + 'static) -> Self {
        self.layers.push(Box::new(layer));
        self
    }

    pub fn add(&mut self, layer: Box<dyn Layer>) {
        self.layers.push(layer);
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layers(&self) -> &[Box<dyn Layer>] {
        &self.layers
    }

    fn named(&self, pick: impl Fn(&dyn Layer) -> Vec<(String, Tensor)>) -> Vec<(String, Tensor)> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            for (name, t) in pick(layer.as_ref()) {
                if seen.insert(t.id()) {
                    out.push((format!("layer{i}.{name}"), t));
                }
            }
        }
        out
    }
}

impl Layer for Sequential {
    fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let mut h = x.clone();
        for (index, layer) in self.layers.iter_mut().enumerate() {
            h = layer.forward(&h).map_err(|e| Error::Layer {
                index,
                source: Box::new(e),
            })?;
        }
        Ok(h)
    }

    /// Flat list named `layer{i}.{name}`; a tensor shared by several layers appears once.
    fn parameters(&self) -> Vec<(String, Tensor)> {
        self.named(|l| l.parameters())
    }

    fn buffers(&self) -> Vec<(String, Tensor)> {
        self.named(|l| l.buffers())
    }

    fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
        for layer in &mut self.layers {
            layer.set_mode(mode);
        }
    }

    fn mode(&self) -> Mode {
        self.mode
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, ActivationKind, BatchNorm1d, Dense, Dropout};

    struct Shared(Tensor);

    impl Layer for Shared {
        fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
            x.mul(&self.0)
        }

        fn parameters(&self) -> Vec<(String, Tensor)> {
            vec![("weight".into(), self.0.clone())]
        }
    }

    #[test]
    fn empty_is_identity() {
        let x = Tensor::uniform([2, 3], -1.0, 1.0, 0);
        assert_eq!(Sequential::new().forward(&x).unwrap().to_vec(), x.to_vec());
    }

    #[test]
    fn parameter_count_and_names() {
        let net = Sequential::new()
            .push(Dense::new(2, 8, 0))
            .push(Activation::new(ActivationKind::Relu))
            .push(Dense::new(8, 1, 1));
        let names: Vec<String> = net.parameters().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, ["layer0.weight", "layer0.bias", "layer2.weight", "layer2.bias"]);
    }

    #[test]
    fn shared_parameters_are_deduplicated() {
        let w = Tensor::ones([3]).requires_grad_(true);
        let net = Sequential::new().push(Shared(w.clone())).push(Shared(w));
        assert_eq!(net.parameters().len(), 1);
    }

    #[test]
    fn errors_carry_layer_index() {
        let mut net = Sequential::new().push(Dense::new(2, 3, 0)).push(Dense::new(4, 1, 0));
        match net.forward(&Tensor::ones([1, 2])).unwrap_err() {
            Error::Layer { index, .. } => assert_eq!(index, 1),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn mode_reaches_nested_layers() {
        let inner = Sequential::new().push(Dropout::new(0.9, 3)).push(BatchNorm1d::new(4));
        let mut net = Sequential::new().push(inner);
        let params_before: Vec<Vec<f32>> = net.parameters().iter().map(|(_, t)| t.to_vec()).collect();
        net.set_mode(Mode::Eval);
        let x = Tensor::uniform([5, 4], -1.0, 1.0, 2);
        // Eval: dropout is the identity and BN uses running stats (0, 1).
        let y = net.forward(&x).unwrap();
        let scale = (1.0f32 + 1e-5).sqrt();
        for (a, b) in y.to_vec().iter().zip(x.to_vec()) {
            assert!((a - b / scale).abs() < 1e-6);
        }
        let params_after: Vec<Vec<f32>> = net.parameters().iter().map(|(_, t)| t.to_vec()).collect();
        assert_eq!(params_before, params_after);
    }
}
