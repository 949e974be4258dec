use ndarray::{s, Array1, Array2, ArrayView2};
use rand::Rng;

use super::{BatchNorm, BatchNormCache, DenseParam, Mode, ParamRef, Parameterized};
use crate::error::{Error, Result};
use crate::spectral::{chebyshev_basis, chebyshev_filter, LaplacianOperator, SpectralFilter};

/// The Laplacian of a hypergraph whose hyperedges are single vertices: `L = 0`.
///
/// Filtering with it leaves only the `θ_0` term, i.e. no neighbourhood mixing.
#[derive(Debug, Clone, Copy)]
pub struct ZeroLaplacian(pub usize);

impl LaplacianOperator for ZeroLaplacian {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        Array2::zeros(x.raw_dim())
    }
}

/// `ReLU(BN(Σ_k θ_k T_k(L) x W + b))` with `θ` shared across input channels.
#[derive(Debug, Clone)]
pub struct HyperConvLayer {
    pub name: String,
    pub theta: Array1<f64>,
    pub grad_theta: Array1<f64>,
    /// `Some(λ_max)` evaluates the polynomial on `2L/λ_max - I`.
    pub rescale: Option<f64>,
    pub dense: DenseParam,
    pub bn: Option<BatchNorm>,
    cache: Option<ConvCache>,
}

/// Intermediate values recorded by [`HyperConvLayer::forward`].
#[derive(Debug, Clone)]
pub struct ConvCache {
    mode: Mode,
    basis: Vec<Array2<f64>>,
    filtered: Array2<f64>,
    bn: Option<BatchNormCache>,
    activated_input: Array2<f64>,
}

fn row_ranges(graphs: &[&dyn LaplacianOperator], rows: usize, layer: &str) -> Result<Vec<(usize, usize)>> {
    let mut ranges = Vec::with_capacity(graphs.len());
    let mut start = 0;
    for g in graphs {
        ranges.push((start, start + g.dim()));
        start += g.dim();
    }
    if start != rows {
        return Err(Error::Shape {
            layer: layer.to_string(),
            detail: format!("graphs cover {start} vertices but the signal has {rows} rows"),
        });
    }
    Ok(ranges)
}

impl HyperConvLayer {
    pub fn new<R: Rng>(name: impl Into<String>, f_in: usize, f_out: usize, order: usize, batchnorm: bool, rng: &mut R) -> Self {
        let mut theta = Array1::zeros(order.max(1));
        theta[0] = 1.0;
        Self {
            name: name.into(),
            grad_theta: Array1::zeros(theta.len()),
            theta,
            rescale: None,
            dense: DenseParam::xavier(f_in, f_out, rng),
            bn: batchnorm.then(|| BatchNorm::new(f_out)),
            cache: None,
        }
    }

    pub fn order(&self) -> usize {
        self.theta.len()
    }

    pub fn f_out(&self) -> usize {
        self.dense.f_out()
    }

    pub fn filter(&self) -> Result<SpectralFilter> {
        let f = SpectralFilter::new(self.theta.to_vec())?;
        Ok(match self.rescale {
            Some(l) => f.rescaled(Some(l)),
            None => f,
        })
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }

    /// Forward pass over a stacked batch; `graphs[b]` owns rows of sample `b`.
    pub fn forward(
        &mut self,
        graphs: &[&dyn LaplacianOperator],
        x: ArrayView2<'_, f64>,
        mode: Mode,
    ) -> Result<Array2<f64>> {
        if x.ncols() != self.dense.f_in() {
            return Err(Error::Shape {
                layer: self.name.clone(),
                detail: format!("expected {} input features, got {}", self.dense.f_in(), x.ncols()),
            });
        }
        let ranges = row_ranges(graphs, x.nrows(), &self.name)?;
        let order = self.order();
        let mut basis: Vec<Array2<f64>> = (0..order).map(|_| Array2::zeros(x.raw_dim())).collect();
        for (g, &(a, b)) in graphs.iter().zip(&ranges) {
            let terms = chebyshev_basis(g, x.slice(s![a..b, ..]), order, self.rescale)?;
            for (dst, t) in basis.iter_mut().zip(terms) {
                dst.slice_mut(s![a..b, ..]).assign(&t);
            }
        }
        let mut filtered = basis[0].clone() * self.theta[0];
        for (t, th) in basis.iter().zip(self.theta.iter()).skip(1) {
            filtered.scaled_add(*th, t);
        }
        let z = self.dense.forward(filtered.view());
        let (normed, bn_cache) = match self.bn.as_mut() {
            Some(bn) => bn.forward(z.view(), mode),
            None => (z, None),
        };
        let y = normed.mapv(|v| v.max(0.0));
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalBlowUp(self.name.clone()));
        }
        self.cache = Some(ConvCache {
            mode,
            basis,
            filtered,
            bn: bn_cache,
            activated_input: normed,
        });
        Ok(y)
    }

    /// Accumulates gradients for `θ`, `W`, `b` and batch norm, and returns the
    /// gradient with respect to the layer input.
    pub fn backward(&mut self, graphs: &[&dyn LaplacianOperator], dy: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::MissingCache(self.name.clone()))?;
        if dy.dim() != cache.activated_input.dim() {
            return Err(Error::Shape {
                layer: self.name.clone(),
                detail: format!("upstream gradient {:?} vs output {:?}", dy.dim(), cache.activated_input.dim()),
            });
        }
        let ranges = row_ranges(graphs, dy.nrows(), &self.name)?;
        let mut d = dy.to_owned();
        ndarray::Zip::from(&mut d)
            .and(&cache.activated_input)
            .for_each(|g, &a| {
                if a <= 0.0 {
                    *g = 0.0
                }
            });
        if let Some(bn) = self.bn.as_mut() {
            d = match (&cache.bn, cache.mode) {
                (Some(c), Mode::Train) => bn.backward(c, d.view()),
                _ => {
                    // Eval-mode batch norm is affine in its input.
                    let inv_std = bn.running_var.mapv(|v| 1.0 / (v + super::batchnorm::BN_EPS).sqrt());
                    let pre = self.dense.forward(cache.filtered.view());
                    let xhat = (pre - &bn.running_mean) * &inv_std;
                    bn.grad_gamma += &(&xhat * &d).sum_axis(ndarray::Axis(0));
                    bn.grad_beta += &d.sum_axis(ndarray::Axis(0));
                    d * &(&bn.gamma * &inv_std)
                }
            };
        }
        let dfiltered = self.dense.backward(cache.filtered.view(), d.view());
        for (g, t) in self.grad_theta.iter_mut().zip(&cache.basis) {
            *g += (t * &dfiltered).sum();
        }
        let filter = self.filter()?;
        let mut dx = Array2::zeros(dfiltered.raw_dim());
        for (g, &(a, b)) in graphs.iter().zip(&ranges) {
            let part = chebyshev_filter(g, dfiltered.slice(s![a..b, ..]), &filter)?;
            dx.slice_mut(s![a..b, ..]).assign(&part);
        }
        Ok(dx)
    }
}

impl Parameterized for HyperConvLayer {
    fn visit(&mut self, prefix: &str, f: &mut dyn FnMut(ParamRef<'_>)) {
        f(ParamRef {
            name: format!("{prefix}.theta"),
            shape: vec![self.theta.len()],
            value: self.theta.as_slice_mut().unwrap(),
            grad: Some(self.grad_theta.as_slice_mut().unwrap()),
        });
        self.dense.visit(&format!("{prefix}.dense"), f);
        if let Some(bn) = self.bn.as_mut() {
            bn.visit(&format!("{prefix}.bn"), f);
        }
    }
}
