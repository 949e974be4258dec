use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid hypergraph: {0}")]
    InvalidHypergraph(String),

    #[error("no hyperedges")]
    NoHyperedges,

    #[error("isolated vertex {0}: degree is zero")]
    IsolatedVertex(usize),

    #[error("invalid point set: {0}")]
    InvalidPoints(String),

    #[error("calibration failed: no k_interp in [{lo}, {hi}] reaches {target} points (best {best})")]
    Calibration {
        lo: usize,
        hi: usize,
        target: usize,
        best: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("numerical blow-up in layer {0}")]
    NumericalBlowUp(String),

    #[error("missing forward cache for layer {0}")]
    MissingCache(String),

    #[error("non-finite gradient for parameter {0}")]
    NonFiniteGradient(String),

    #[error("empty batch")]
    EmptyBatch,

    #[error("shape mismatch in {layer}: {detail}")]
    Shape { layer: String, detail: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("metric input: {0}")]
    Metric(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
