mod common;

use common::*;
use hgcnn::hypergraph::{normalized_laplacian, FactoredLaplacian};
use hgcnn::spectral::{
    chebyshev_basis, chebyshev_filter, spectral_filter_exact, symmetric_eigendecomposition, SpectralFilter,
    DEFAULT_EIG_TOL,
};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_filter<R: Rng>(rng: &mut R, k: usize) -> SpectralFilter {
    SpectralFilter::new((0..k).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn recurrence_matches_exact_filtering(seed in any::<u64>(), k in 1usize..=6, rescale in any::<bool>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let hg = random_hypergraph(&mut r, 30);
        let lap = normalized_laplacian(&hg).unwrap();
        let eig = symmetric_eigendecomposition(lap.matrix.view(), DEFAULT_EIG_TOL).unwrap();
        let x = random_matrix(&mut r, hg.n_vertices(), 3);
        let mut f = random_filter(&mut r, k);
        if rescale {
            f = f.rescaled(None);
        }
        let exact = spectral_filter_exact(&eig, x.view(), &f).unwrap();
        let dense = chebyshev_filter(&lap, x.view(), &f).unwrap();
        let factored = chebyshev_filter(&FactoredLaplacian::new(&hg).unwrap(), x.view(), &f).unwrap();
        prop_assert!(max_abs_diff(&exact, &dense) <= 1e-8);
        prop_assert!(max_abs_diff(&exact, &factored) <= 1e-8);
    }

    #[test]
    fn filtering_is_linear(seed in any::<u64>(), k in 1usize..=6, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let hg = random_hypergraph(&mut r, 30);
        let l = FactoredLaplacian::new(&hg).unwrap();
        let f = random_filter(&mut r, k);
        let x = random_matrix(&mut r, hg.n_vertices(), 2);
        let z = random_matrix(&mut r, hg.n_vertices(), 2);
        let lhs = chebyshev_filter(&l, (&x * a + &z * b).view(), &f).unwrap();
        let rhs = chebyshev_filter(&l, x.view(), &f).unwrap() * a + chebyshev_filter(&l, z.view(), &f).unwrap() * b;
        prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-10);
    }

    #[test]
    fn filtering_commutes_with_relabeling(seed in any::<u64>(), k in 1usize..=6) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let hg = random_hypergraph(&mut r, 30);
        let perm = random_permutation(&mut r, hg.n_vertices());
        let p = permutation_matrix(&perm);
        let f = random_filter(&mut r, k);
        let x = random_matrix(&mut r, hg.n_vertices(), 2);
        let l = normalized_laplacian(&hg).unwrap().matrix;
        let lp = p.dot(&l).dot(&p.t());
        let lhs = chebyshev_filter(&lp, p.dot(&x).view(), &f).unwrap();
        let rhs = p.dot(&chebyshev_filter(&l, x.view(), &f).unwrap());
        prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn second_term_is_2l_squared_minus_identity(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let hg = random_hypergraph(&mut r, 30);
        let l = normalized_laplacian(&hg).unwrap().matrix;
        let x = random_matrix(&mut r, hg.n_vertices(), 2);
        let t = chebyshev_basis(&l, x.view(), 3, None).unwrap();
        let want: Array2<f64> = l.dot(&l.dot(&x)) * 2.0 - &x;
        prop_assert!(max_abs_diff(&t[2], &want) <= 1e-10);
        prop_assert!(max_abs_diff(&t[1], &l.dot(&x)) <= 1e-12);
    }
}

#[test]
fn single_coefficient_scales() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let hg = random_hypergraph(&mut r, 12);
    let x = random_matrix(&mut r, hg.n_vertices(), 2);
    let y = chebyshev_filter(&FactoredLaplacian::new(&hg).unwrap(), x.view(), &SpectralFilter::new(vec![2.5]).unwrap()).unwrap();
    assert_eq!(y, &x * 2.5);
}
