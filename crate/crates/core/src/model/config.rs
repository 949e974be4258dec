use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmarks::Channel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphMode {
    /// k-NN hypergraph over the augmented landmarks.
    Hypergraph,
    /// Complete graph with `exp(-d^2)` weights on normalised coordinates.
    SimpleComplete,
    /// No graph: singleton hyperedges, `L = 0`.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputChannels {
    Rgb,
    RgbHsv,
    RgbDepth,
    RgbHsvDepth,
}

impl InputChannels {
    pub fn color(self) -> &'static [Channel] {
        match self {
            Self::Rgb | Self::RgbDepth => &[Channel::R, Channel::G, Channel::B],
            Self::RgbHsv | Self::RgbHsvDepth => &[
                Channel::R,
                Channel::G,
                Channel::B,
                Channel::Hue,
                Channel::Saturation,
                Channel::Value,
            ],
        }
    }

    pub fn has_depth(self) -> bool {
        matches!(self, Self::RgbDepth | Self::RgbHsvDepth)
    }

    pub fn has_hsv(self) -> bool {
        matches!(self, Self::RgbHsv | Self::RgbHsvDepth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConcatScheme {
    /// Every conv layer of every branch (384 features with default widths).
    AllLayers,
    /// Only the last conv layer of each branch.
    LastLayer,
    /// All layers, pooled vector repeated twice (768 with default widths).
    Duplicate,
}

/// How raw 68-landmark samples become graph inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub k_interp: usize,
    pub dedup_tolerance: f64,
    pub total_points: usize,
    pub k_nn: usize,
    /// Subtract each sample's per-channel mean from the network inputs.
    #[serde(default = "default_true")]
    pub center_channels: bool,
}

fn default_true() -> bool {
    true
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            k_interp: crate::CALIBRATED_K_INTERP,
            dedup_tolerance: 0.5,
            total_points: crate::AUGMENTED_POINTS,
            k_nn: 8,
            center_channels: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureConfig {
    pub color_widths: Vec<usize>,
    pub depth_widths: Vec<usize>,
    pub input_channels: InputChannels,
    pub concat_scheme: ConcatScheme,
    pub mlp_widths: Vec<usize>,
    pub graph_mode: GraphMode,
    pub chebyshev_k: usize,
    pub rescale_spectrum: bool,
    pub batchnorm: bool,
    pub preprocess: PreprocessConfig,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        Self {
            color_widths: vec![64, 128],
            depth_widths: vec![64, 128],
            input_channels: InputChannels::RgbDepth,
            concat_scheme: ConcatScheme::AllLayers,
            mlp_widths: vec![256, 64, 2],
            graph_mode: GraphMode::Hypergraph,
            chebyshev_k: 2,
            rescale_spectrum: false,
            batchnorm: true,
            preprocess: PreprocessConfig::default(),
        }
    }
}

/// The four ablation variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    /// No hypergraph (`k = 0`), K = 1.
    Model1,
    /// Colour only, depth branch removed.
    Model2,
    /// Simple complete graph instead of the hypergraph.
    Model3,
    /// Full model.
    Model4,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [Ablation::Model1, Ablation::Model2, Ablation::Model3, Ablation::Model4];
}

impl ArchitectureConfig {
    pub fn ablation(which: Ablation) -> Self {
        let base = Self::default();
        match which {
            Ablation::Model1 => Self {
                graph_mode: GraphMode::None,
                chebyshev_k: 1,
                ..base
            },
            Ablation::Model2 => Self {
                input_channels: InputChannels::Rgb,
                ..base
            },
            Ablation::Model3 => Self {
                graph_mode: GraphMode::SimpleComplete,
                ..base
            },
            Ablation::Model4 => base,
        }
    }

    pub fn use_depth_branch(&self) -> bool {
        self.input_channels.has_depth()
    }

    pub fn validate(&self) -> Result<()> {
        if self.color_widths.is_empty() || (self.use_depth_branch() && self.depth_widths.is_empty()) {
            return Err(Error::Config("every branch needs at least one conv layer".into()));
        }
        let widths = self.color_widths.iter().chain(&self.depth_widths).chain(&self.mlp_widths);
        if widths.clone().any(|&w| w == 0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if self.mlp_widths.last() != Some(&2) {
            return Err(Error::Config("the last MLP width must be 2".into()));
        }
        if self.chebyshev_k == 0 {
            return Err(Error::Config("chebyshev_k must be >= 1".into()));
        }
        if self.graph_mode == GraphMode::None && self.chebyshev_k != 1 {
            return Err(Error::Config("graph_mode none requires chebyshev_k = 1".into()));
        }
        let p = &self.preprocess;
        if p.k_nn == 0 || p.k_nn >= p.total_points {
            return Err(Error::Config(format!("k_nn = {} invalid for {} points", p.k_nn, p.total_points)));
        }
        Ok(())
    }

    /// Per-vertex feature width after concatenation, before pooling.
    pub fn concat_dim(&self) -> usize {
        let pick = |w: &[usize]| -> usize {
            match self.concat_scheme {
                ConcatScheme::LastLayer => *w.last().unwrap_or(&0),
                _ => w.iter().sum(),
            }
        };
        pick(&self.color_widths) + if self.use_depth_branch() { pick(&self.depth_widths) } else { 0 }
    }

    /// Width of the pooled vector fed to the MLP.
    pub fn pooled_dim(&self) -> usize {
        match self.concat_scheme {
            ConcatScheme::Duplicate => 2 * self.concat_dim(),
            _ => self.concat_dim(),
        }
    }
}
