//! The two-branch hypergraph classifier: configuration, preprocessing,
//! the network itself, training and checkpoints.

mod checkpoint;
mod config;
mod data;
mod network;
mod train;

pub use checkpoint::{
    load_checkpoint, load_checkpoint_file, save_checkpoint, save_checkpoint_file, CheckpointHeader, TensorEntry,
    MAGIC,
};
pub use config::{Ablation, ArchitectureConfig, ConcatScheme, GraphMode, InputChannels, PreprocessConfig};
pub use data::{normalize_coords, GraphOperator, PreparedSample, Preprocessor, SampleGraph};
pub use network::*;
pub use train::{
    check_subject_disjoint, predict, train, write_log_csv, EpochLog, TrainConfig, TrainOutcome,
};
