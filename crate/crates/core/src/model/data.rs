use ndarray::{Array2, ArrayView2, Axis};

use super::config::{ArchitectureConfig, GraphMode, PreprocessConfig};
use crate::error::{Error, Result};
use crate::hypergraph::{simple_complete_graph_laplacian, FactoredLaplacian};
use crate::landmarks::{
    build_knn_hypergraph, rgb_to_hsv_channels, AugmentationConfig, AugmentationPlan, HypergraphConfig,
    LandmarkSample, Label, PointSet, N_LANDMARKS,
};
use crate::nn::ZeroLaplacian;
use crate::spectral::LaplacianOperator;
use crate::template::canonical_68;

/// Turns raw samples into augmented point sets with their graphs.
///
/// The augmentation plan is derived once from the canonical template so
/// that every sample gets the same vertex count and vertex correspondence.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    cfg: PreprocessConfig,
    plan: AugmentationPlan,
}

impl Preprocessor {
    pub fn new(cfg: PreprocessConfig) -> Result<Self> {
        let template = PointSet::from_coords(canonical_68());
        let plan = AugmentationPlan::build(
            &template,
            &AugmentationConfig {
                k_interp: cfg.k_interp,
                dedup_tolerance: cfg.dedup_tolerance,
            },
        )?;
        if plan.total() < cfg.total_points {
            return Err(Error::Config(format!(
                "k_interp = {} yields {} points, fewer than the requested {}",
                cfg.k_interp,
                plan.total(),
                cfg.total_points
            )));
        }
        let plan = plan.truncated(cfg.total_points);
        Ok(Self { cfg, plan })
    }

    pub fn plan(&self) -> &AugmentationPlan {
        &self.plan
    }

    pub fn config(&self) -> &PreprocessConfig {
        &self.cfg
    }

    /// Augments (when given the 68 raw landmarks), adds HSV when the
    /// architecture wants it and builds the graph for its graph mode.
    pub fn prepare(&self, sample: &LandmarkSample, arch: &ArchitectureConfig) -> Result<PreparedSample> {
        let raw = sample.to_point_set()?;
        let points = match raw.len() {
            N_LANDMARKS => self.plan.apply(&raw)?,
            n if n == self.cfg.total_points => raw,
            n => {
                return Err(Error::InvalidPoints(format!(
                    "sample {} has {n} points; expected {N_LANDMARKS} or {}",
                    sample.id, self.cfg.total_points
                )))
            }
        };
        let points = if arch.input_channels.has_hsv() {
            rgb_to_hsv_channels(&points)?
        } else {
            points
        };
        let graph = match arch.graph_mode {
            GraphMode::Hypergraph => {
                let hg = build_knn_hypergraph(&points, &HypergraphConfig { k_nn: self.cfg.k_nn })?;
                SampleGraph::Hypergraph {
                    k_nn: self.cfg.k_nn,
                    laplacian: FactoredLaplacian::new(&hg)?,
                }
            }
            GraphMode::SimpleComplete => SampleGraph::SimpleComplete,
            GraphMode::None => SampleGraph::None,
        };
        Ok(PreparedSample {
            id: sample.id.clone(),
            subject: sample.subject_id().to_string(),
            label: sample.label,
            points,
            graph,
        })
    }

    pub fn prepare_all(&self, samples: &[LandmarkSample], arch: &ArchitectureConfig) -> Result<Vec<PreparedSample>> {
        samples.iter().map(|s| self.prepare(s, arch)).collect()
    }
}

#[derive(Debug, Clone)]
pub enum SampleGraph {
    Hypergraph { k_nn: usize, laplacian: FactoredLaplacian },
    /// Built on demand; a dense `n x n` matrix per sample is too large to keep.
    SimpleComplete,
    None,
}

/// A sample ready for the network.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub id: String,
    pub subject: String,
    pub label: Label,
    pub points: PointSet,
    pub graph: SampleGraph,
}

impl PreparedSample {
    pub fn n_vertices(&self) -> usize {
        self.points.len()
    }

    /// Class index: 1 for genuine, 0 for any attack.
    pub fn target(&self) -> usize {
        usize::from(self.label.is_genuine())
    }

    /// Fails when the sample's graph or vertex count does not fit `arch`.
    pub fn check_compatible(&self, arch: &ArchitectureConfig) -> Result<()> {
        let mode = match self.graph {
            SampleGraph::Hypergraph { .. } => GraphMode::Hypergraph,
            SampleGraph::SimpleComplete => GraphMode::SimpleComplete,
            SampleGraph::None => GraphMode::None,
        };
        if mode != arch.graph_mode {
            return Err(Error::Config(format!(
                "sample {} was prepared for graph mode {mode:?}, model uses {:?}",
                self.id, arch.graph_mode
            )));
        }
        if self.n_vertices() != arch.preprocess.total_points {
            return Err(Error::Config(format!(
                "sample {} has {} vertices, model expects {}",
                self.id,
                self.n_vertices(),
                arch.preprocess.total_points
            )));
        }
        self.points.layout().indices_of(arch.input_channels.color())?;
        Ok(())
    }

    pub fn operator(&self) -> Result<GraphOperator<'_>> {
        Ok(match &self.graph {
            SampleGraph::Hypergraph { laplacian, .. } => GraphOperator::Factored(laplacian),
            SampleGraph::SimpleComplete => {
                let coords = normalize_coords(self.points.coords());
                let pts = PointSet::from_coords(coords);
                GraphOperator::Dense(simple_complete_graph_laplacian(&pts)?.matrix)
            }
            SampleGraph::None => GraphOperator::Zero(ZeroLaplacian(self.n_vertices())),
        })
    }

    /// Permutes vertices (point `i` moves to `perm[i]`) and rebuilds the graph.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let points = self.points.permuted(perm);
        let graph = match &self.graph {
            SampleGraph::Hypergraph { k_nn, .. } => {
                let hg = build_knn_hypergraph(&points, &HypergraphConfig { k_nn: *k_nn })?;
                SampleGraph::Hypergraph {
                    k_nn: *k_nn,
                    laplacian: FactoredLaplacian::new(&hg)?,
                }
            }
            other => other.clone(),
        };
        Ok(Self {
            points,
            graph,
            ..self.clone()
        })
    }
}

/// Centres coordinates on their mean and scales them to unit RMS radius.
pub fn normalize_coords(coords: ArrayView2<'_, f64>) -> Array2<f64> {
    let mean = coords.mean_axis(Axis(0)).expect("non-empty point set");
    let centered = &coords - &mean;
    let rms = (centered.mapv(|v| v * v).sum() / coords.nrows() as f64).sqrt();
    if rms > 0.0 {
        centered / rms
    } else {
        centered
    }
}

/// A per-sample Laplacian, borrowed or built for the current batch.
pub enum GraphOperator<'a> {
    Factored(&'a FactoredLaplacian),
    Dense(Array2<f64>),
    Zero(ZeroLaplacian),
}

impl LaplacianOperator for GraphOperator<'_> {
    fn dim(&self) -> usize {
        match self {
            Self::Factored(l) => l.dim(),
            Self::Dense(m) => m.nrows(),
            Self::Zero(z) => z.dim(),
        }
    }

    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        match self {
            Self::Factored(l) => l.apply(x),
            Self::Dense(m) => m.dot(&x),
            Self::Zero(z) => z.apply(x),
        }
    }
}
