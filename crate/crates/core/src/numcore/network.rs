//! Sequential networks over the fixed layer set (affine, tanh).
//!
//! Parameters are exposed as flat tensors in declared order: for every affine
//! layer its weight (row-major) followed by its bias. Gradients and optimizer
//! state use the same order.

use rand::Rng;

use super::layer::{tanh_backward, tanh_forward, AffineLayer};
use super::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Affine(AffineLayer),
    Tanh,
}

#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<Layer>,
    /// Bumped on every parameter mutation so stale caches can be rejected.
    generation: u64,
}

/// Networks are equal when their layers are; the mutation counter is ignored.
impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

/// Activations recorded by [`Network::forward_cached`]; `activations[0]` is the
/// input and `activations[i + 1]` the output of layer `i`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    generation: u64,
    activations: Vec<Matrix>,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.activations
            .last()
            .expect("cache holds at least the input")
    }

    pub fn input(&self) -> &Matrix {
        &self.activations[0]
    }
}

/// Per-tensor parameter gradients plus the gradient with respect to the input.
#[derive(Debug, Clone)]
pub struct NetworkGrad {
    pub params: Vec<Vec<f64>>,
    pub input: Matrix,
}

impl NetworkGrad {
    pub fn is_zero(&self) -> bool {
        self.params.iter().flatten().all(|&g| g == 0.0)
    }
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let mut width: Option<usize> = None;
        for layer in &layers {
            if let Layer::Affine(a) = layer {
                if let Some(w) = width {
                    if w != a.in_dim() {
                        return Err(Error::Shape {
                            op: "network_chain",
                            left: (w, w),
                            right: a.weight().shape(),
                        });
                    }
                }
                width = Some(a.out_dim());
            }
        }
        if width.is_none() {
            return Err(Error::Contract(
                "network needs at least one affine layer".into(),
            ));
        }
        Ok(Self {
            layers,
            generation: 0,
        })
    }

    /// A single affine map.
    pub fn linear(layer: AffineLayer) -> Self {
        Self {
            layers: vec![Layer::Affine(layer)],
            generation: 0,
        }
    }

    /// `in → hidden (tanh) → out`, Glorot-initialised.
    pub fn tanh_mlp<R: Rng + ?Sized>(
        in_dim: usize,
        hidden: usize,
        out_dim: usize,
        rng: &mut R,
    ) -> Self {
        let first = AffineLayer::glorot(in_dim, hidden, rng);
        let second = AffineLayer::glorot(hidden, out_dim, rng);
        Self {
            layers: vec![Layer::Affine(first), Layer::Tanh, Layer::Affine(second)],
            generation: 0,
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn affine_layers(&self) -> impl Iterator<Item = &AffineLayer> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Affine(a) => Some(a),
            Layer::Tanh => None,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.affine_layers().next().map_or(0, AffineLayer::in_dim)
    }

    pub fn out_dim(&self) -> usize {
        self.affine_layers().last().map_or(0, AffineLayer::out_dim)
    }

    pub fn forward(&self, input: &Matrix) -> Result<Matrix> {
        let mut current = input.clone();
        for layer in &self.layers {
            current = match layer {
                Layer::Affine(a) => a.forward(&current)?,
                Layer::Tanh => tanh_forward(&current),
            };
        }
        Ok(current)
    }

    pub fn forward_cached(&self, input: &Matrix) -> Result<ForwardCache> {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.clone());
        for layer in &self.layers {
            let prev = activations.last().expect("non-empty");
            let next = match layer {
                Layer::Affine(a) => a.forward(prev)?,
                Layer::Tanh => tanh_forward(prev),
            };
            activations.push(next);
        }
        Ok(ForwardCache {
            generation: self.generation,
            activations,
        })
    }

    /// Reverse pass from `grad_output` (∂loss/∂output) using `cache` from the
    /// matching forward pass.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &Matrix) -> Result<NetworkGrad> {
        if cache.generation != self.generation || cache.activations.len() != self.layers.len() + 1 {
            return Err(Error::Contract(format!(
                "stale forward cache (cache generation {}, network generation {})",
                cache.generation, self.generation
            )));
        }
        if grad_output.shape() != cache.output().shape() {
            return Err(Error::Shape {
                op: "network_backward",
                left: cache.output().shape(),
                right: grad_output.shape(),
            });
        }
        let mut grads_rev: Vec<Vec<f64>> = Vec::new();
        let mut grad = grad_output.clone();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            match layer {
                Layer::Affine(a) => {
                    let (g, gi) = a.backward(&cache.activations[idx], &grad)?;
                    grads_rev.push(g.bias);
                    grads_rev.push(g.weight.into_vec());
                    grad = gi;
                }
                Layer::Tanh => {
                    grad = tanh_backward(&cache.activations[idx + 1], &grad)?;
                }
            }
        }
        grads_rev.reverse();
        Ok(NetworkGrad {
            params: grads_rev,
            input: grad,
        })
    }

    /// Lengths of the parameter tensors in declared order.
    pub fn param_lengths(&self) -> Vec<usize> {
        self.affine_layers()
            .flat_map(|a| [a.weight().as_slice().len(), a.bias().len()])
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.param_lengths().iter().sum()
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.affine_layers()
            .flat_map(|a| [a.weight().as_slice(), a.bias()])
            .collect()
    }

    /// Mutable parameter tensors; invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.generation += 1;
        let mut out = Vec::new();
        for layer in &mut self.layers {
            if let Layer::Affine(a) = layer {
                let (w, b) = a.parts_mut();
                out.push(w);
                out.push(b);
            }
        }
        out
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.params().concat()
    }

    pub fn set_flat_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::Shape {
                op: "set_flat_params",
                left: (self.param_count(), 1),
                right: (values.len(), 1),
            });
        }
        let mut offset = 0;
        for tensor in self.params_mut() {
            let len = tensor.len();
            tensor.copy_from_slice(&values[offset..offset + len]);
            offset += len;
        }
        Ok(())
    }
}
