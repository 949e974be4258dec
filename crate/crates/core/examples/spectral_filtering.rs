//! Filter a vertex signal on a hypergraph two ways: exactly through the
//! eigendecomposition, and with the Chebyshev recurrence.
//!
//! ```text
//! cargo run --example spectral_filtering
//! ```

use hgcnn::hypergraph::{normalized_laplacian, Hypergraph};
use hgcnn::spectral::{chebyshev_filter, hgft, spectral_filter_exact, SpectralFilter, DEFAULT_EIG_TOL};
use ndarray::Array2;

fn main() -> hgcnn::Result<()> {
    // A ring of 3-vertex hyperedges.
    let n = 12;
    let edges = (0..n).map(|i| vec![i, (i + 1) % n, (i + 2) % n]).collect();
    let hg = Hypergraph::with_unit_weights(n, edges)?;
    let lap = normalized_laplacian(&hg)?.with_eigendecomposition(DEFAULT_EIG_TOL)?;
    let eig = lap.eigen.as_ref().unwrap();

    // A bump on vertex 0 and a smooth wave.
    let x = Array2::from_shape_fn((n, 2), |(i, c)| match c {
        0 => f64::from(i == 0),
        _ => (i as f64 * std::f64::consts::TAU / n as f64).cos(),
    });
    let coeffs = hgft(eig, x.view())?;
    println!("spectral energy of the bump: {:.3}", coeffs.column(0).mapv(|v| v * v));
    println!("spectral energy of the wave: {:.3}", coeffs.column(1).mapv(|v| v * v));

    for theta in [vec![1.0], vec![0.5, -0.5], vec![0.3, -0.2, 0.4, 0.1]] {
        let f = SpectralFilter::new(theta.clone())?;
        let exact = spectral_filter_exact(eig, x.view(), &f)?;
        let fast = chebyshev_filter(&lap, x.view(), &f)?;
        let dev = (&exact - &fast).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!("theta {theta:?}: K = {}, max |exact - chebyshev| = {dev:.1e}", f.order());
        println!("  filtered bump: {:.3}", fast.column(0));
    }
    Ok(())
}
