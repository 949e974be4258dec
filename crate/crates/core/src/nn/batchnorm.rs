use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{Mode, ParamRef, Parameterized};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

/// Per-feature batch normalisation over all rows (batch and vertex axes).
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub grad_gamma: Array1<f64>,
    pub grad_beta: Array1<f64>,
}

/// What the backward pass needs from a training-mode forward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    normalized: Array2<f64>,
    inv_std: Array1<f64>,
}

impl BatchNorm {
    pub fn new(features: usize) -> Self {
        Self {
            gamma: Array1::ones(features),
            beta: Array1::zeros(features),
            running_mean: Array1::zeros(features),
            running_var: Array1::ones(features),
            grad_gamma: Array1::zeros(features),
            grad_beta: Array1::zeros(features),
        }
    }

    /// In training mode normalises with batch statistics, updates the running
    /// statistics and returns a cache; in eval mode applies the running
    /// statistics as a fixed affine map.
    pub fn forward(&mut self, z: ArrayView2<'_, f64>, mode: Mode) -> (Array2<f64>, Option<BatchNormCache>) {
        match mode {
            Mode::Eval => {
                let scale = &self.gamma / &self.running_var.mapv(|v| (v + BN_EPS).sqrt());
                let shift = &self.beta - &(&self.running_mean * &scale);
                let mut y = z.to_owned();
                y *= &scale;
                y += &shift;
                (y, None)
            }
            Mode::Train => {
                let n = z.nrows() as f64;
                let mean = z.sum_axis(Axis(0)) / n;
                let centered = &z - &mean;
                let var = centered.mapv(|v| v * v).sum_axis(Axis(0)) / n;
                let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
                let normalized = &centered * &inv_std;
                let y = &normalized * &self.gamma + &self.beta;
                self.running_mean = &self.running_mean * BN_MOMENTUM + &mean * (1.0 - BN_MOMENTUM);
                self.running_var = &self.running_var * BN_MOMENTUM + &var * (1.0 - BN_MOMENTUM);
                (y, Some(BatchNormCache { normalized, inv_std }))
            }
        }
    }

    pub fn backward(&mut self, cache: &BatchNormCache, dy: ArrayView2<'_, f64>) -> Array2<f64> {
        let n = dy.nrows() as f64;
        let xhat = &cache.normalized;
        self.grad_gamma += &(&dy * xhat).sum_axis(Axis(0));
        self.grad_beta += &dy.sum_axis(Axis(0));
        let dxhat = &dy * &self.gamma;
        let sum_d = dxhat.sum_axis(Axis(0));
        let sum_dx = (&dxhat * xhat).sum_axis(Axis(0));
        let mut dz = dxhat * n;
        dz -= &sum_d;
        dz -= &(xhat * &sum_dx);
        dz *= &(&cache.inv_std / n);
        dz
    }
}

impl Parameterized for BatchNorm {
    fn visit(&mut self, prefix: &str, f: &mut dyn FnMut(ParamRef<'_>)) {
        let d = self.gamma.len();
        f(ParamRef {
            name: format!("{prefix}.gamma"),
            shape: vec![d],
            value: self.gamma.as_slice_mut().unwrap(),
            grad: Some(self.grad_gamma.as_slice_mut().unwrap()),
        });
        f(ParamRef {
            name: format!("{prefix}.beta"),
            shape: vec![d],
            value: self.beta.as_slice_mut().unwrap(),
            grad: Some(self.grad_beta.as_slice_mut().unwrap()),
        });
        f(ParamRef {
            name: format!("{prefix}.running_mean"),
            shape: vec![d],
            value: self.running_mean.as_slice_mut().unwrap(),
            grad: None,
        });
        f(ParamRef {
            name: format!("{prefix}.running_var"),
            shape: vec![d],
            value: self.running_var.as_slice_mut().unwrap(),
            grad: None,
        });
    }
}
