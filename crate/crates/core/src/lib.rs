pub mod cli;
pub mod error;
pub mod hypergraph;
pub mod landmarks;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod protocol;
pub mod spectral;
pub mod synthdata;
pub mod template;

pub use error::{Error, Result};

/// Interpolation level that brings the canonical template to [`AUGMENTED_POINTS`].
pub const CALIBRATED_K_INTERP: usize = 6;
/// Vertex count after landmark augmentation.
pub const AUGMENTED_POINTS: usize = 318;
