//! Symmetric eigendecomposition, the hypergraph Fourier transform, exact
//! spectral filtering and its Chebyshev approximation.

use std::io::Write;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Default relative off-diagonal threshold for the Jacobi eigensolver.
pub const DEFAULT_EIG_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-10;

/// Anything that can multiply an `n x F` vertex signal by a Laplacian.
pub trait LaplacianOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64>;
}

impl LaplacianOperator for Array2<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        self.dot(&x)
    }
}

impl<T: LaplacianOperator + ?Sized> LaplacianOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        (**self).apply(x)
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

impl Eigen {
    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let mut scaled = self.vectors.clone();
        for (mut col, &l) in scaled.columns_mut().into_iter().zip(&self.values) {
            col *= l;
        }
        scaled.dot(&self.vectors.t())
    }

    /// One CSV row per eigenpair: `index,eigenvalue,u_0,...,u_{n-1}`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.values.len();
        write!(out, "index,eigenvalue")?;
        for i in 0..n {
            write!(out, ",u_{i}")?;
        }
        writeln!(out)?;
        for (j, l) in self.values.iter().enumerate() {
            write!(out, "{j},{l:e}")?;
            for v in self.vectors.column(j) {
                write!(out, ",{v:e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn frobenius(m: ArrayView2<'_, f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cyclic Jacobi eigensolver for dense symmetric matrices.
///
/// Sweeps until the off-diagonal Frobenius norm is at most `tol * |m|_F`,
/// giving up after 100 sweeps. Each eigenvector is signed so that its
/// largest-magnitude entry (the first one, on ties) is positive.
pub fn symmetric_eigendecomposition(m: ArrayView2<'_, f64>, tol: f64) -> Result<Eigen> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::Dimension(format!("expected a non-empty square matrix, got {:?}", m.dim())));
    }
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((m[[i, j]] - m[[j, i]]).abs());
        }
    }
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }

    let mut a: Vec<f64> = m.iter().copied().collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let threshold = tol * frobenius(m);
    let off_norm = |a: &[f64]| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off <= threshold {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, residual: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]).then(i.cmp(&j)));
    let values = Array1::from_iter(order.iter().map(|&i| a[i * n + i]));
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        let mut pivot = 0;
        for k in 0..n {
            if v[k * n + src].abs() > v[pivot * n + src].abs() {
                pivot = k;
            }
        }
        let sign = if v[pivot * n + src] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            vectors[[k, dst]] = sign * v[k * n + src];
        }
    }
    Ok(Eigen { values, vectors })
}

fn check_rows(n: usize, x: ArrayView2<'_, f64>) -> Result<()> {
    if x.nrows() != n {
        return Err(Error::Dimension(format!("signal has {} rows, operator has {n}", x.nrows())));
    }
    Ok(())
}

/// Hypergraph Fourier transform `U^T x`.
pub fn hgft(eigen: &Eigen, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    check_rows(eigen.vectors.nrows(), x)?;
    Ok(eigen.vectors.t().dot(&x))
}

/// Inverse transform `U x̂`.
pub fn inverse_hgft(eigen: &Eigen, coeffs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    check_rows(eigen.vectors.ncols(), coeffs)?;
    Ok(eigen.vectors.dot(&coeffs))
}

/// Coefficients `θ_0..θ_{K-1}` of a Chebyshev polynomial filter.
///
/// With `rescale_spectrum` the polynomial is evaluated at `2L/λ_max - I`
/// instead of `L`. `λ_max` defaults to 2, an upper bound for any normalized
/// Laplacian, so the exact and recurrence paths always agree on it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFilter {
    coefficients: Vec<f64>,
    pub rescale_spectrum: bool,
    pub lambda_max: Option<f64>,
}

impl SpectralFilter {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidFilter("order K must be at least 1".into()));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidFilter("non-finite coefficient".into()));
        }
        Ok(Self {
            coefficients,
            rescale_spectrum: false,
            lambda_max: None,
        })
    }

    pub fn rescaled(mut self, lambda_max: Option<f64>) -> Self {
        self.rescale_spectrum = true;
        self.lambda_max = lambda_max;
        self
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    fn spectrum_map(&self) -> Option<f64> {
        self.rescale_spectrum.then(|| self.lambda_max.unwrap_or(2.0))
    }

    /// `g(λ) = Σ θ_k T_k(λ̂)`.
    pub fn response(&self, lambda: f64) -> f64 {
        let x = match self.spectrum_map() {
            Some(lmax) => 2.0 * lambda / lmax - 1.0,
            None => lambda,
        };
        let (mut prev, mut cur) = (1.0, x);
        let mut acc = self.coefficients[0];
        for (k, theta) in self.coefficients.iter().enumerate().skip(1) {
            if k > 1 {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            acc += theta * cur;
        }
        acc
    }
}

/// `U g(Λ) U^T x`; needs the eigendecomposition.
pub fn spectral_filter_exact(
    eigen: &Eigen,
    x: ArrayView2<'_, f64>,
    filter: &SpectralFilter,
) -> Result<Array2<f64>> {
    let mut coeffs = hgft(eigen, x)?;
    for (mut row, &l) in coeffs.axis_iter_mut(Axis(0)).zip(&eigen.values) {
        row *= filter.response(l);
    }
    inverse_hgft(eigen, coeffs.view())
}

fn apply_mapped<L: LaplacianOperator>(l: &L, x: ArrayView2<'_, f64>, lmax: Option<f64>) -> Array2<f64> {
    let mut y = l.apply(x);
    if let Some(lmax) = lmax {
        y *= 2.0 / lmax;
        y -= &x;
    }
    y
}

/// The terms `T_0(L̂)x, ..., T_{K-1}(L̂)x`, built by the three-term recurrence.
pub fn chebyshev_basis<L: LaplacianOperator>(
    l: &L,
    x: ArrayView2<'_, f64>,
    order: usize,
    filter_map: Option<f64>,
) -> Result<Vec<Array2<f64>>> {
    if order == 0 {
        return Err(Error::InvalidFilter("order K must be at least 1".into()));
    }
    check_rows(l.dim(), x)?;
    let mut terms = vec![x.to_owned()];
    if order > 1 {
        terms.push(apply_mapped(l, x, filter_map));
    }
    for k in 2..order {
        let mut next = apply_mapped(l, terms[k - 1].view(), filter_map);
        next *= 2.0;
        next -= &terms[k - 2];
        terms.push(next);
    }
    Ok(terms)
}

/// `Σ θ_k T_k(L̂) x` computed on signals only; `T_k(L)` is never formed.
pub fn chebyshev_filter<L: LaplacianOperator>(
    l: &L,
    x: ArrayView2<'_, f64>,
    filter: &SpectralFilter,
) -> Result<Array2<f64>> {
    check_rows(l.dim(), x)?;
    let lmax = filter.spectrum_map();
    let theta = filter.coefficients();
    let mut out = x.to_owned() * theta[0];
    if theta.len() == 1 {
        return Ok(out);
    }
    let mut prev = x.to_owned();
    let mut cur = apply_mapped(l, x, lmax);
    out.scaled_add(theta[1], &cur);
    for &t in &theta[2..] {
        let mut next = apply_mapped(l, cur.view(), lmax);
        next *= 2.0;
        next -= &prev;
        out.scaled_add(t, &next);
        prev = cur;
        cur = next;
    }
    Ok(out)
}

/// Chebyshev mapping used by [`chebyshev_basis`] for a filter.
pub fn filter_map(filter: &SpectralFilter) -> Option<f64> {
    filter.spectrum_map()
}
