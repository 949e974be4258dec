//! Brute-force oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

pub mod grad;
pub mod metric_check;

use hgcnn::hypergraph::Hypergraph;
use hgcnn::metrics::ScoreSet;
use ndarray::{Array1, Array2};
use rand::Rng;

/// Random hypergraph with every vertex covered: random edges, then a pair
/// edge for each vertex left isolated.
pub fn random_hypergraph<R: Rng>(rng: &mut R, max_n: usize) -> Hypergraph {
    let n = rng.gen_range(2..=max_n);
    let m = rng.gen_range(1..=2 * n);
    let mut edges = Vec::new();
    let mut covered = vec![false; n];
    for _ in 0..m {
        let size = rng.gen_range(2..=n.min(6));
        let mut e: Vec<usize> = rand::seq::index::sample(rng, n, size).into_vec();
        e.sort_unstable();
        for &v in &e {
            covered[v] = true;
        }
        edges.push(e);
    }
    for v in 0..n {
        if !covered[v] {
            let u = (v + 1) % n;
            edges.push(vec![v.min(u), v.max(u)]);
        }
    }
    let weights = edges.iter().map(|_| rng.gen_range(0.1..10.0)).collect();
    Hypergraph::new(n, edges, weights).unwrap()
}

/// Random connected weighted simple graph: a path backbone plus random extra edges.
pub fn random_graph<R: Rng>(rng: &mut R, max_n: usize) -> (usize, Vec<(usize, usize, f64)>) {
    let n = rng.gen_range(2..=max_n);
    let mut edges: Vec<(usize, usize, f64)> = (0..n - 1).map(|i| (i, i + 1, rng.gen_range(0.1..5.0))).collect();
    for u in 0..n {
        for v in u + 2..n {
            if rng.gen_bool(0.3) {
                edges.push((u, v, rng.gen_range(0.1..5.0)));
            }
        }
    }
    (n, edges)
}

/// `I - Dv^{-1/2} H W De^{-1} H^T Dv^{-1/2}` by explicit matrix products.
pub fn laplacian_by_products(hg: &Hypergraph) -> Array2<f64> {
    let n = hg.n_vertices();
    let m = hg.n_edges();
    let mut h = Array2::<f64>::zeros((n, m));
    for (e, edge) in hg.hyperedges().iter().enumerate() {
        for &v in edge {
            h[[v, e]] = 1.0;
        }
    }
    let w = Array2::from_diag(&Array1::from(hg.edge_weights().to_vec()));
    let de_inv = Array2::from_diag(&h.sum_axis(ndarray::Axis(0)).mapv(|d| 1.0 / d));
    let dv = h.dot(&Array1::from(hg.edge_weights().to_vec()));
    let dv_is = Array2::from_diag(&dv.mapv(|d| 1.0 / d.sqrt()));
    let theta = dv_is.dot(&h).dot(&w).dot(&de_inv).dot(&h.t()).dot(&dv_is);
    Array2::eye(n) - theta
}

pub fn to_nalgebra(m: &Array2<f64>) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

/// Eigenvalues from an independent solver, ascending.
pub fn oracle_eigenvalues(m: &Array2<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = nalgebra::SymmetricEigen::new(to_nalgebra(m)).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-1.0..1.0))
}

pub fn random_permutation<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// `P_σ` with `(P_σ x)[σ(i)] = x[i]`.
pub fn permutation_matrix(perm: &[usize]) -> Array2<f64> {
    let n = perm.len();
    let mut p = Array2::zeros((n, n));
    for (i, &j) in perm.iter().enumerate() {
        p[[j, i]] = 1.0;
    }
    p
}

/// Random scores for the metric oracles. Scores are drawn from a small grid
/// about half the time so that ties occur.
pub fn random_scores<R: Rng>(rng: &mut R, max_n: usize) -> ScoreSet {
    let n = rng.gen_range(2..=max_n);
    let coarse = rng.gen_bool(0.5);
    let types = ["print", "replay", "mask"];
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        // The first two guarantee both classes.
        let genuine = if i < 2 { i == 0 } else { rng.gen_bool(0.5) };
        let raw: f64 = rng.gen();
        let shift = if genuine { 0.15 } else { 0.0 };
        let score = if coarse { (raw * 10.0).floor() / 10.0 + shift } else { raw + shift };
        records.push(hgcnn::metrics::ScoreRecord {
            id: format!("x{i}"),
            subject: format!("s{}", i % 7),
            genuine,
            attack_type: (!genuine).then(|| types[rng.gen_range(0..3)].to_string()),
            score,
        });
    }
    ScoreSet::new(records)
}

/// FAR and FRR by counting, under the rule "accept iff score >= t".
pub fn brute_rates(s: &ScoreSet, t: f64) -> (f64, f64) {
    let (mut fa, mut na, mut fr, mut ng) = (0, 0, 0, 0);
    for r in &s.records {
        if r.genuine {
            ng += 1;
            if r.score < t {
                fr += 1;
            }
        } else {
            na += 1;
            if r.score >= t {
                fa += 1;
            }
        }
    }
    (fa as f64 / na as f64, fr as f64 / ng as f64)
}

/// Every distinct score plus both infinities, ascending.
pub fn candidate_thresholds(s: &ScoreSet) -> Vec<f64> {
    let mut t: Vec<f64> = s.records.iter().map(|r| r.score).collect();
    t.push(f64::NEG_INFINITY);
    t.push(f64::INFINITY);
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

/// Mann-Whitney U / (n_pos n_neg), ties counting one half.
pub fn mann_whitney_auc(s: &ScoreSet) -> f64 {
    let gen: Vec<f64> = s.records.iter().filter(|r| r.genuine).map(|r| r.score).collect();
    let att: Vec<f64> = s.records.iter().filter(|r| !r.genuine).map(|r| r.score).collect();
    let mut u = 0.0;
    for g in &gen {
        for a in &att {
            u += if g > a {
                1.0
            } else if g == a {
                0.5
            } else {
                0.0
            };
        }
    }
    u / (gen.len() * att.len()) as f64
}

/// EER by scanning the enumerated thresholds for the first one where FRR
/// catches up with FAR and intersecting the two rate segments.
pub fn brute_eer(s: &ScoreSet) -> (f64, bool) {
    let ts = candidate_thresholds(s);
    let rates: Vec<(f64, f64)> = ts.iter().map(|&t| brute_rates(s, t)).collect();
    let i = rates.iter().position(|&(far, frr)| frr >= far).unwrap();
    let (far1, frr1) = rates[i];
    if far1 == frr1 || i == 0 {
        return (far1, true);
    }
    let (far0, frr0) = rates[i - 1];
    // Lines far0 + a (far1 - far0) and frr0 + a (frr1 - frr0) meet at a.
    let a = (far0 - frr0) / ((far0 - frr0) - (far1 - frr1));
    (far0 + a * (far1 - far0), false)
}

/// TDR at FDR target `f`, with TDR = 1 - FAR and FDR = FRR. Returns the
/// value and whether it came from an enumerated point without interpolation.
pub fn brute_tdr(s: &ScoreSet, f: f64) -> (f64, bool) {
    let ts = candidate_thresholds(s);
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .map(|&t| {
            let (far, frr) = brute_rates(s, t);
            (frr, 1.0 - far)
        })
        .collect();
    let within: Vec<usize> = (0..pts.len()).filter(|&i| pts[i].0 <= f).collect();
    let best = *within.iter().max_by(|&&a, &&b| pts[a].1.total_cmp(&pts[b].1).then(a.cmp(&b))).unwrap();
    let (fdr, tdr) = pts[best];
    if fdr == f || best + 1 == pts.len() {
        return (tdr, true);
    }
    let (fdr1, tdr1) = pts[best + 1];
    (tdr + (f - fdr) / (fdr1 - fdr) * (tdr1 - tdr), false)
}

/// Attack-class acceptance per type by counting.
pub fn brute_apcer_per_type(s: &ScoreSet, t: f64) -> std::collections::BTreeMap<String, f64> {
    let mut m: std::collections::BTreeMap<String, (f64, f64)> = Default::default();
    for r in s.records.iter().filter(|r| !r.genuine) {
        let e = m.entry(r.attack_type.clone().unwrap()).or_default();
        e.1 += 1.0;
        if r.score >= t {
            e.0 += 1.0;
        }
    }
    m.into_iter().map(|(k, (a, n))| (k, a / n)).collect()
}

/// Random points with every k-NN boundary separated by more than `margin`
/// in distance, so neighbourhoods survive rounding under rigid motions.
pub fn well_separated_points<R: Rng>(rng: &mut R, n: usize, k: usize, margin: f64) -> Array2<f64> {
    loop {
        let pts = Array2::from_shape_fn((n, 2), |_| rng.gen_range(0.0..200.0));
        if knn_margin(&pts, k) > margin {
            return pts;
        }
    }
}

/// Smallest gap, over all points, between the k-th and (k+1)-th neighbour
/// distance and between any two distances inside the k nearest.
pub fn knn_margin(pts: &Array2<f64>, k: usize) -> f64 {
    let n = pts.nrows();
    let mut worst = f64::INFINITY;
    for i in 0..n {
        let mut d: Vec<f64> = (0..n)
            .filter(|&j| j != i)
            .map(|j| ((pts[[i, 0]] - pts[[j, 0]]).powi(2) + (pts[[i, 1]] - pts[[j, 1]]).powi(2)).sqrt())
            .collect();
        d.sort_by(f64::total_cmp);
        if k < d.len() {
            worst = worst.min(d[k] - d[k - 1]);
        }
    }
    worst
}

/// Rotation by `angle` about the origin followed by translation.
pub fn rigid_motion(pts: &Array2<f64>, angle: f64, tx: f64, ty: f64) -> Array2<f64> {
    let (s, c) = angle.sin_cos();
    Array2::from_shape_fn(pts.dim(), |(i, j)| {
        let (x, y) = (pts[[i, 0]], pts[[i, 1]]);
        if j == 0 {
            c * x - s * y + tx
        } else {
            s * x + c * y + ty
        }
    })
}
