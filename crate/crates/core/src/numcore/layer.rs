//! Affine and Tanh layers with exact gradients.

use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::Matrix;
use crate::error::{Error, Result};

/// `y = W x + b`, weight stored as `out_dim × in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLayer {
    weight: Matrix,
    bias: Vec<f64>,
}

/// Gradient of a loss with respect to one affine layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineGrad {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl AffineLayer {
    pub fn new(weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        if weight.rows() != bias.len() {
            return Err(Error::Shape {
                op: "affine_layer",
                left: weight.shape(),
                right: (bias.len(), 1),
            });
        }
        Ok(Self { weight, bias })
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            weight: Matrix::zeros(out_dim, in_dim),
            bias: vec![0.0; out_dim],
        }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite glorot limit");
        let weight = Matrix::from_fn(out_dim, in_dim, |_, _| dist.sample(rng));
        Self {
            weight,
            bias: vec![0.0; out_dim],
        }
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (self.weight.as_mut_slice(), &mut self.bias)
    }

    /// Row-wise `W · input[i] + b`.
    pub fn forward(&self, input: &Matrix) -> Result<Matrix> {
        if input.cols() != self.in_dim() {
            return Err(Error::Shape {
                op: "affine_forward",
                left: self.weight.shape(),
                right: input.shape(),
            });
        }
        let out_dim = self.out_dim();
        let mut out = Matrix::zeros(input.rows(), out_dim);
        for i in 0..input.rows() {
            let x = input.row(i);
            let dst = out.row_mut(i);
            for (o, d) in dst.iter_mut().enumerate() {
                let w = self.weight.row(o);
                let mut acc = self.bias[o];
                for (a, b) in w.iter().zip(x) {
                    acc += a * b;
                }
                *d = acc;
            }
        }
        Ok(out)
    }

    /// Parameter gradients and the gradient with respect to `input`.
    pub fn backward(&self, input: &Matrix, grad_output: &Matrix) -> Result<(AffineGrad, Matrix)> {
        if input.cols() != self.in_dim()
            || grad_output.cols() != self.out_dim()
            || input.rows() != grad_output.rows()
        {
            return Err(Error::Shape {
                op: "affine_backward",
                left: input.shape(),
                right: grad_output.shape(),
            });
        }
        let (in_dim, out_dim) = (self.in_dim(), self.out_dim());
        let mut grad_weight = Matrix::zeros(out_dim, in_dim);
        let mut grad_bias = vec![0.0; out_dim];
        let mut grad_input = Matrix::zeros(input.rows(), in_dim);
        for i in 0..input.rows() {
            let x = input.row(i);
            let g = grad_output.row(i);
            for (o, &go) in g.iter().enumerate() {
                if go == 0.0 {
                    continue;
                }
                grad_bias[o] += go;
                for (gw, &xv) in grad_weight.row_mut(o).iter_mut().zip(x) {
                    *gw += go * xv;
                }
                for (gi, &w) in grad_input.row_mut(i).iter_mut().zip(self.weight.row(o)) {
                    *gi += go * w;
                }
            }
        }
        Ok((
            AffineGrad {
                weight: grad_weight,
                bias: grad_bias,
            },
            grad_input,
        ))
    }
}

pub fn tanh_forward(input: &Matrix) -> Matrix {
    input.map(f64::tanh)
}

/// Backward through `tanh` given its forward *output*.
pub fn tanh_backward(output: &Matrix, grad_output: &Matrix) -> Result<Matrix> {
    output.zip_with("tanh_backward", grad_output, |y, g| g * (1.0 - y * y))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn identity_layer_passes_input_through() {
        let layer = AffineLayer::new(Matrix::identity(2), vec![0.0, 0.0]).unwrap();
        let x = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert_eq!(layer.forward(&x).unwrap(), x);
    }

    #[test]
    fn hand_arithmetic_forward() {
        let w = Matrix::from_rows(&[[2.0, 0.0], [0.0, 3.0]]).unwrap();
        let layer = AffineLayer::new(w, vec![1.0, 1.0]).unwrap();
        let x = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        assert_eq!(layer.forward(&x).unwrap().as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn random_layer_matches_elementwise_dot_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut layer = AffineLayer::glorot(4, 3, &mut rng);
        layer.bias = vec![0.5, -0.25, 1.0];
        let x = Matrix::from_fn(5, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let y = layer.forward(&x).unwrap();
        assert_eq!(y.shape(), (5, 3));
        for i in 0..5 {
            for o in 0..3 {
                let mut expected = layer.bias[o];
                for k in 0..4 {
                    expected += layer.weight[(o, k)] * x[(i, k)];
                }
                assert!((y[(i, o)] - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let layer = AffineLayer::zeros(3, 2);
        let err = layer.forward(&Matrix::zeros(4, 2)).unwrap_err();
        match err {
            Error::Shape { left, right, .. } => {
                assert_eq!(left, (2, 3));
                assert_eq!(right, (4, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tanh_cases() {
        assert_eq!(tanh_forward(&Matrix::zeros(1, 1))[(0, 0)], 0.0);
        let big = tanh_forward(&Matrix::filled(1, 1, 1e6))[(0, 0)];
        assert!((big - 1.0).abs() < 1e-12);
        let pos = tanh_forward(&Matrix::filled(1, 1, 0.7))[(0, 0)];
        let neg = tanh_forward(&Matrix::filled(1, 1, -0.7))[(0, 0)];
        assert_eq!(neg, -pos);
    }

    #[test]
    fn single_layer_squared_error_gradient() {
        // loss = ||W x + b - t||^2, dL/dW = 2 (pred - t) x^T
        let w = Matrix::from_rows(&[[0.5, -1.0, 2.0]]).unwrap();
        let layer = AffineLayer::new(w, vec![0.1]).unwrap();
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let pred = layer.forward(&x).unwrap()[(0, 0)];
        let target = 1.0;
        let g = Matrix::filled(1, 1, 2.0 * (pred - target));
        let (grad, _) = layer.backward(&x, &g).unwrap();
        for k in 0..3 {
            assert!((grad.weight[(0, k)] - 2.0 * (pred - target) * x[(0, k)]).abs() < 1e-14);
        }
        assert!((grad.bias[0] - 2.0 * (pred - target)).abs() < 1e-14);
    }
}
