//! Build a small weighted hypergraph, form its normalized Laplacian and look
//! at the spectrum.
//!
//! ```text
//! cargo run --example hypergraph_laplacian
//! ```

use hgcnn::hypergraph::{build_incidence, degree_nullvector, normalized_laplacian, FactoredLaplacian, Hypergraph};
use hgcnn::spectral::{LaplacianOperator, DEFAULT_EIG_TOL};
use ndarray::Array1;

fn main() -> hgcnn::Result<()> {
    // Two triangles sharing vertex 2, plus a heavier pair edge.
    let hg = Hypergraph::new(5, vec![vec![0, 1, 2], vec![2, 3, 4], vec![0, 4]], vec![1.0, 1.0, 2.0])?;
    print!("{}", hg.to_text());

    let h = build_incidence(&hg)?;
    println!("incidence (vertices x hyperedges):\n{}", h.entries);

    let lap = normalized_laplacian(&hg)?.with_eigendecomposition(DEFAULT_EIG_TOL)?;
    println!("laplacian:\n{:.4}", lap.matrix);
    let eig = lap.eigen.as_ref().unwrap();
    println!("eigenvalues: {:.6}", eig.values);

    let null = Array1::from(degree_nullvector(&hg));
    let residual = lap.matrix.dot(&null).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    println!("|L Dv^(1/2) 1|_max = {residual:.2e}");

    // The matrix-free operator gives the same products without forming L.
    let factored = FactoredLaplacian::new(&hg)?;
    let x = ndarray::Array2::from_shape_fn((5, 2), |(i, j)| (i + 2 * j) as f64);
    let diff = (&factored.apply(x.view()) - &lap.matrix.dot(&x)).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("factored vs dense: {diff:.2e}");
    Ok(())
}
