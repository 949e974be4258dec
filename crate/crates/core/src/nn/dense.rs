use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::{xavier_init, ParamRef, Parameterized};

/// Affine map `x W + b` with gradient buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParam {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub grad_weights: Array2<f64>,
    pub grad_bias: Array1<f64>,
}

impl DenseParam {
    pub fn zeros(f_in: usize, f_out: usize) -> Self {
        Self::from_parts(Array2::zeros((f_in, f_out)), Array1::zeros(f_out))
    }

    /// Xavier-uniform weights, zero bias.
    pub fn xavier<R: Rng>(f_in: usize, f_out: usize, rng: &mut R) -> Self {
        Self::from_parts(xavier_init(f_in, f_out, rng), Array1::zeros(f_out))
    }

    pub fn from_parts(weights: Array2<f64>, bias: Array1<f64>) -> Self {
        let grad_weights = Array2::zeros(weights.raw_dim());
        let grad_bias = Array1::zeros(bias.len());
        Self {
            weights,
            bias,
            grad_weights,
            grad_bias,
        }
    }

    pub fn f_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn f_out(&self) -> usize {
        self.weights.ncols()
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut y = x.dot(&self.weights);
        y += &self.bias;
        y
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, x: ArrayView2<'_, f64>, dy: ArrayView2<'_, f64>) -> Array2<f64> {
        self.grad_weights += &x.t().dot(&dy);
        self.grad_bias += &dy.sum_axis(Axis(0));
        dy.dot(&self.weights.t())
    }
}

impl Parameterized for DenseParam {
    fn visit(&mut self, prefix: &str, f: &mut dyn FnMut(ParamRef<'_>)) {
        f(ParamRef {
            name: format!("{prefix}.weights"),
            shape: self.weights.shape().to_vec(),
            value: self.weights.as_slice_mut().expect("standard layout"),
            grad: Some(self.grad_weights.as_slice_mut().expect("standard layout")),
        });
        f(ParamRef {
            name: format!("{prefix}.bias"),
            shape: vec![self.bias.len()],
            value: self.bias.as_slice_mut().expect("standard layout"),
            grad: Some(self.grad_bias.as_slice_mut().expect("standard layout")),
        });
    }
}
