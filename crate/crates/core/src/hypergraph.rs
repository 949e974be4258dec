//! Hypergraphs, their incidence and degree structure, and normalized Laplacians.
//!
//! A hypergraph `G = (V, E, W)` has hyperedges that join any number of
//! vertices. Its normalized Laplacian is
//!
//! ```text
//! L = I - Dv^{-1/2} H W De^{-1} H^T Dv^{-1/2}
//! ```
//!
//! where `H` is the `|V| x |E|` incidence matrix, `W` the diagonal of
//! hyperedge weights, `Dv` the weighted vertex degrees and `De` the hyperedge
//! cardinalities. The spectrum lies in `[0, 1]` and `Dv^{1/2} 1` spans the
//! null space of every connected component.
//!
//! Matrices are dense. All the hypergraphs built from face landmarks have a
//! few hundred vertices, where dense storage is cheap.

use std::fmt::Write as _;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::landmarks::PointSet;
use crate::spectral::{symmetric_eigendecomposition, Eigen, LaplacianOperator};

/// Vertex count plus a multiset of weighted hyperedges.
///
/// Each hyperedge is stored as an ascending list of distinct vertex indices.
/// Identical hyperedges may appear more than once; they then contribute
/// additively to the vertex degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    n_vertices: usize,
    hyperedges: Vec<Vec<usize>>,
    edge_weights: Vec<f64>,
}

impl Hypergraph {
    /// Validates and normalizes the hyperedges (sorted, deduplicated vertex lists).
    pub fn new(n_vertices: usize, hyperedges: Vec<Vec<usize>>, edge_weights: Vec<f64>) -> Result<Self> {
        if hyperedges.len() != edge_weights.len() {
            return Err(Error::InvalidHypergraph(format!(
                "{} hyperedges but {} weights",
                hyperedges.len(),
                edge_weights.len()
            )));
        }
        let mut edges = Vec::with_capacity(hyperedges.len());
        for (e, mut verts) in hyperedges.into_iter().enumerate() {
            verts.sort_unstable();
            verts.dedup();
            if verts.len() < 2 {
                return Err(Error::InvalidHypergraph(format!(
                    "hyperedge {e} has fewer than 2 distinct vertices"
                )));
            }
            if let Some(&v) = verts.last().filter(|&&v| v >= n_vertices) {
                return Err(Error::InvalidHypergraph(format!(
                    "hyperedge {e} references vertex {v} >= {n_vertices}"
                )));
            }
            edges.push(verts);
        }
        for (e, &w) in edge_weights.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidHypergraph(format!("hyperedge {e} has weight {w}")));
            }
        }
        Ok(Self {
            n_vertices,
            hyperedges: edges,
            edge_weights,
        })
    }

    /// All hyperedges weighted 1.
    pub fn with_unit_weights(n_vertices: usize, hyperedges: Vec<Vec<usize>>) -> Result<Self> {
        let w = vec![1.0; hyperedges.len()];
        Self::new(n_vertices, hyperedges, w)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.hyperedges.len()
    }

    pub fn hyperedges(&self) -> &[Vec<usize>] {
        &self.hyperedges
    }

    pub fn edge_weights(&self) -> &[f64] {
        &self.edge_weights
    }

    /// Common hyperedge cardinality, if every hyperedge has the same size.
    pub fn uniformity(&self) -> Option<usize> {
        let first = self.hyperedges.first()?.len();
        self.hyperedges.iter().all(|e| e.len() == first).then_some(first)
    }

    pub fn is_k_uniform(&self, k: usize) -> bool {
        self.uniformity() == Some(k)
    }

    /// Same hypergraph with every weight multiplied by `factor`.
    pub fn scaled_weights(&self, factor: f64) -> Result<Self> {
        let w = self.edge_weights.iter().map(|w| w * factor).collect();
        Self::new(self.n_vertices, self.hyperedges.clone(), w)
    }

    /// Relabels vertex `v` as `perm[v]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n_vertices {
            return Err(Error::Dimension(format!(
                "permutation of length {} for {} vertices",
                perm.len(),
                self.n_vertices
            )));
        }
        let edges = self
            .hyperedges
            .iter()
            .map(|e| e.iter().map(|&v| perm[v]).collect())
            .collect();
        Self::new(self.n_vertices, edges, self.edge_weights.clone())
    }

    /// Serializes to the `hypergraph v1` text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("hypergraph v1 {} {}\n", self.n_vertices, self.n_edges());
        for (edge, w) in self.hyperedges.iter().zip(&self.edge_weights) {
            write!(out, "w={w:.16e}").unwrap();
            for v in edge {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

impl FromStr for Hypergraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty hypergraph file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "hypergraph" || fields[1] != "v1" {
            return Err(Error::Parse(format!("bad hypergraph header {header:?}")));
        }
        let parse_count = |f: &str| {
            f.parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad count {f:?}: {e}")))
        };
        let n = parse_count(fields[2])?;
        let m = parse_count(fields[3])?;
        let mut edges = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        for line in lines {
            let mut toks = line.split_whitespace();
            let w = toks
                .next()
                .and_then(|t| t.strip_prefix("w="))
                .ok_or_else(|| Error::Parse(format!("hyperedge line without weight: {line:?}")))?;
            let w: f64 = w
                .parse()
                .map_err(|e| Error::Parse(format!("bad weight {w:?}: {e}")))?;
            let verts = toks.map(parse_count).collect::<Result<Vec<_>>>()?;
            if verts.windows(2).any(|p| p[0] >= p[1]) {
                return Err(Error::Parse(format!("vertex indices not ascending: {line:?}")));
            }
            edges.push(verts);
            weights.push(w);
        }
        if edges.len() != m {
            return Err(Error::Parse(format!("header says {m} hyperedges, found {}", edges.len())));
        }
        Hypergraph::new(n, edges, weights)
    }
}

/// Binary `|V| x |E|` matrix with `H(v, e) = 1` iff `v ∈ e`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    pub entries: Array2<f64>,
}

impl IncidenceMatrix {
    pub fn column_sums(&self) -> Vec<usize> {
        self.entries
            .columns()
            .into_iter()
            .map(|c| c.iter().filter(|&&x| x != 0.0).count())
            .collect()
    }
}

/// Vertex degrees `d(v) = Σ_e w(e) H(v,e)` and hyperedge degrees `δ(e) = Σ_v H(v,e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDiagonals {
    pub vertex_degrees: Vec<f64>,
    pub hyperedge_degrees: Vec<usize>,
}

/// Symmetric Laplacian matrix with an optional eigendecomposition attached.
#[derive(Debug, Clone)]
pub struct HypergraphLaplacian {
    pub matrix: Array2<f64>,
    pub eigen: Option<Eigen>,
}

impl HypergraphLaplacian {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// Computes and attaches `(Λ, U)`.
    pub fn with_eigendecomposition(mut self, tol: f64) -> Result<Self> {
        self.eigen = Some(symmetric_eigendecomposition(self.matrix.view(), tol)?);
        Ok(self)
    }
}

impl LaplacianOperator for HypergraphLaplacian {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        self.matrix.apply(x)
    }
}

pub fn build_incidence(hg: &Hypergraph) -> Result<IncidenceMatrix> {
    if hg.n_edges() == 0 {
        return Err(Error::NoHyperedges);
    }
    let mut h = Array2::zeros((hg.n_vertices(), hg.n_edges()));
    for (e, edge) in hg.hyperedges().iter().enumerate() {
        for &v in edge {
            h[[v, e]] = 1.0;
        }
    }
    Ok(IncidenceMatrix { entries: h })
}

pub fn compute_degrees(hg: &Hypergraph, h: &IncidenceMatrix) -> DegreeDiagonals {
    let entries = &h.entries;
    let vertex_degrees = entries
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(hg.edge_weights()).map(|(h, w)| w * h).sum())
        .collect();
    DegreeDiagonals {
        vertex_degrees,
        hyperedge_degrees: h.column_sums(),
    }
}

fn vertex_degrees(hg: &Hypergraph) -> Result<Vec<f64>> {
    let mut d = vec![0.0; hg.n_vertices()];
    for (edge, w) in hg.hyperedges().iter().zip(hg.edge_weights()) {
        for &v in edge {
            d[v] += w;
        }
    }
    match d.iter().position(|&x| x <= 0.0) {
        Some(v) => Err(Error::IsolatedVertex(v)),
        None => Ok(d),
    }
}

/// Normalized hypergraph Laplacian `I - Dv^{-1/2} H W De^{-1} H^T Dv^{-1/2}`.
///
/// Accumulated hyperedge by hyperedge, so the result is exactly symmetric.
pub fn normalized_laplacian(hg: &Hypergraph) -> Result<HypergraphLaplacian> {
    let n = hg.n_vertices();
    let d = vertex_degrees(hg)?;
    let mut theta = Array2::<f64>::zeros((n, n));
    for (edge, w) in hg.hyperedges().iter().zip(hg.edge_weights()) {
        let share = w / edge.len() as f64;
        for &u in edge {
            for &v in edge {
                theta[[u, v]] += share;
            }
        }
    }
    let inv_sqrt: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
    let mut l = Array2::<f64>::eye(n);
    for ((u, v), t) in theta.indexed_iter() {
        if *t != 0.0 {
            l[[u, v]] -= t * (inv_sqrt[u] * inv_sqrt[v]);
        }
    }
    Ok(HypergraphLaplacian { matrix: l, eigen: None })
}

/// `Dv^{1/2} 1`, the vector annihilated by the normalized Laplacian.
pub fn degree_nullvector(hg: &Hypergraph) -> Vec<f64> {
    let mut d = vec![0.0; hg.n_vertices()];
    for (edge, w) in hg.hyperedges().iter().zip(hg.edge_weights()) {
        for &v in edge {
            d[v] += w;
        }
    }
    d.into_iter().map(f64::sqrt).collect()
}

/// Symmetric normalized Laplacian `I - D^{-1/2} A D^{-1/2}` of a weighted simple graph.
pub fn simple_graph_laplacian(adjacency: ArrayView2<'_, f64>) -> Result<HypergraphLaplacian> {
    let n = adjacency.nrows();
    if adjacency.ncols() != n {
        return Err(Error::Dimension(format!("adjacency is {n}x{}", adjacency.ncols())));
    }
    let deg: Vec<f64> = adjacency.rows().into_iter().map(|r| r.sum()).collect();
    if let Some(v) = deg.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::IsolatedVertex(v));
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|x| 1.0 / x.sqrt()).collect();
    let mut l = Array2::<f64>::eye(n);
    for u in 0..n {
        for v in 0..n {
            let a = adjacency[[u, v]];
            if a != 0.0 {
                l[[u, v]] -= a * (inv_sqrt[u] * inv_sqrt[v]);
            }
        }
    }
    Ok(HypergraphLaplacian { matrix: l, eigen: None })
}

/// Complete graph over the points with weights `exp(-|c_i - c_j|^2)` and its
/// normalized Laplacian. Coordinates are used as given; callers working in
/// pixel units should rescale first or every weight underflows.
pub fn simple_complete_graph_laplacian(points: &PointSet) -> Result<HypergraphLaplacian> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidPoints(format!("complete graph needs >= 2 points, got {n}")));
    }
    let coords = points.coords();
    let mut adj = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = coords
                .row(i)
                .iter()
                .zip(coords.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let w = (-d2).exp();
            adj[[i, j]] = w;
            adj[[j, i]] = w;
        }
    }
    simple_graph_laplacian(adj.view())
}

/// Matrix-free normalized hypergraph Laplacian.
///
/// Applies `L x = x - Dv^{-1/2} H W De^{-1} H^T Dv^{-1/2} x` edge by edge in
/// `O(|E| (k+1) F)` for an `n x F` signal, without forming any `n x n` matrix.
#[derive(Debug, Clone)]
pub struct FactoredLaplacian {
    n: usize,
    edges: Vec<Vec<usize>>,
    edge_scale: Vec<f64>,
    inv_sqrt_degree: Vec<f64>,
}

impl FactoredLaplacian {
    pub fn new(hg: &Hypergraph) -> Result<Self> {
        let d = vertex_degrees(hg)?;
        Ok(Self {
            n: hg.n_vertices(),
            edges: hg.hyperedges().to_vec(),
            edge_scale: hg
                .hyperedges()
                .iter()
                .zip(hg.edge_weights())
                .map(|(e, w)| w / e.len() as f64)
                .collect(),
            inv_sqrt_degree: d.iter().map(|x| 1.0 / x.sqrt()).collect(),
        })
    }

    /// Dense copy of the operator.
    pub fn to_dense(&self) -> Array2<f64> {
        self.apply(Array2::<f64>::eye(self.n).view())
    }
}

impl LaplacianOperator for FactoredLaplacian {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let f = x.ncols();
        let mut scaled = x.as_standard_layout().into_owned();
        for (mut row, s) in scaled.rows_mut().into_iter().zip(&self.inv_sqrt_degree) {
            row *= *s;
        }
        let sx = scaled.as_slice().expect("standard layout");
        let mut acc = vec![0.0; self.n * f];
        let mut edge_sum = vec![0.0; f];
        for (edge, scale) in self.edges.iter().zip(&self.edge_scale) {
            edge_sum.fill(0.0);
            for &v in edge {
                for (s, x) in edge_sum.iter_mut().zip(&sx[v * f..(v + 1) * f]) {
                    *s += x;
                }
            }
            for &v in edge {
                for (a, s) in acc[v * f..(v + 1) * f].iter_mut().zip(&edge_sum) {
                    *a += scale * s;
                }
            }
        }
        let mut out = x.as_standard_layout().into_owned();
        let o = out.as_slice_mut().expect("standard layout");
        for (v, s) in self.inv_sqrt_degree.iter().enumerate() {
            for (o, a) in o[v * f..(v + 1) * f].iter_mut().zip(&acc[v * f..(v + 1) * f]) {
                *o -= s * a;
            }
        }
        out
    }
}
