//! Encoders, decoders and the feature-only baseline.
//!
//! The relational encoders (`rgcn`, `hge`) operate on the typed graph; `gcn`
//! and `sage` operate on its homogenized, bi-directed view. All GNN encoders
//! share the same input projection, optional residual connections and
//! optional concatenation of every layer's representation, and all are
//! decoded with an asymmetric inner product.

mod checkpoint;
mod decoder;
mod encoder;
mod params;
mod sgd;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checkpoint::{Checkpoint, NamedMatrix};
pub use decoder::{
    block_permutation, decode_block, decode_interleave, score_pairs, DecoderKind, SplitDims,
};
pub use encoder::{encode, GraphInputs, RelationMapping, Representations};
pub use params::{init_params, ParamStore, ParamVars};
pub use sgd::{sgd_baseline_score, train_sgd, LogisticWeights, SgdConfig, SgdModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    /// Symmetric-normalized convolution on the homogenized graph.
    Gcn,
    /// Relational convolution with one self-loop weight shared by all types.
    Rgcn,
    /// Relational convolution with a per-node-type self-loop weight.
    Hge,
    /// Mean-aggregator GraphSAGE on the homogenized graph.
    Sage,
}

impl EncoderKind {
    pub fn is_homogeneous(self) -> bool {
        matches!(self, EncoderKind::Gcn | EncoderKind::Sage)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Identity,
}

/// Architecture and regularization switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub encoder: EncoderKind,
    /// Hidden sizes of the convolution layers. The input projection maps to
    /// `layer_sizes[0]`.
    pub layer_sizes: Vec<usize>,
    pub use_residual: bool,
    pub concat_all: bool,
    pub interleave_decoder: bool,
    /// Target-edge dropout probability for the message-passing graph.
    pub edge_dropout_p: f64,
    pub feature_dropout_p: f64,
    /// Feature dropout before every layer rather than the first only.
    pub feature_dropout_all_layers: bool,
    /// Applied after every layer but the last.
    pub activation: Activation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::r_hge()
    }
}

impl ModelConfig {
    /// Residual + concatenation + interleave decoding + edge dropout.
    pub fn r_hge() -> Self {
        Self {
            encoder: EncoderKind::Hge,
            layer_sizes: vec![256, 256, 256],
            use_residual: true,
            concat_all: true,
            interleave_decoder: true,
            edge_dropout_p: 0.5,
            feature_dropout_p: 0.2,
            feature_dropout_all_layers: true,
            activation: Activation::Relu,
        }
    }

    /// Relational convolution with typed self-loop and residuals, block
    /// decoder, no edge dropout or concatenation.
    pub fn hge() -> Self {
        Self {
            concat_all: false,
            interleave_decoder: false,
            edge_dropout_p: 0.0,
            ..Self::r_hge()
        }
    }

    pub fn rgcn() -> Self {
        Self {
            encoder: EncoderKind::Rgcn,
            use_residual: false,
            ..Self::hge()
        }
    }

    pub fn gcn() -> Self {
        Self {
            encoder: EncoderKind::Gcn,
            ..Self::rgcn()
        }
    }

    pub fn sage() -> Self {
        Self {
            encoder: EncoderKind::Sage,
            ..Self::rgcn()
        }
    }

    /// Same switches with every layer resized to `width`.
    pub fn with_width(mut self, width: usize, layers: usize) -> Self {
        self.layer_sizes = vec![width; layers];
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.is_empty() {
            return Err(Error::InvalidArgument("at least one layer is required".into()));
        }
        if let Some(bad) = self.layer_sizes.iter().find(|&&s| s == 0 || s % 2 == 1) {
            return Err(Error::InvalidArgument(format!(
                "layer size {bad} must be positive and even (decoders split it in half)"
            )));
        }
        if !(0.0..1.0).contains(&self.feature_dropout_p) {
            return Err(Error::InvalidArgument(format!(
                "feature dropout {} outside [0, 1)",
                self.feature_dropout_p
            )));
        }
        if !(0.0..=1.0).contains(&self.edge_dropout_p) {
            return Err(Error::InvalidArgument(format!(
                "edge dropout {} outside [0, 1]",
                self.edge_dropout_p
            )));
        }
        Ok(())
    }

    /// Width of the representation handed to the decoder.
    pub fn output_dim(&self) -> usize {
        if self.concat_all {
            self.layer_sizes[0] + self.layer_sizes.iter().sum::<usize>()
        } else {
            *self.layer_sizes.last().expect("validated")
        }
    }

    /// Input and output width of conv layer `i`.
    pub(crate) fn layer_dims(&self, i: usize) -> (usize, usize) {
        let input = if i == 0 {
            self.layer_sizes[0]
        } else {
            self.layer_sizes[i - 1]
        };
        (input, self.layer_sizes[i])
    }

    pub fn decoder(&self) -> DecoderKind {
        if self.interleave_decoder {
            DecoderKind::Interleave
        } else {
            DecoderKind::Block
        }
    }
}

/// Named model families compared by the experiment runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelPreset {
    #[serde(rename = "sgd")]
    Sgd,
    #[serde(rename = "gcn")]
    Gcn,
    #[serde(rename = "sage")]
    Sage,
    #[serde(rename = "rgcn")]
    Rgcn,
    #[serde(rename = "hge")]
    Hge,
    #[serde(rename = "r-hge")]
    RHge,
}

impl ModelPreset {
    pub const ALL: [ModelPreset; 6] = [
        ModelPreset::Sgd,
        ModelPreset::Gcn,
        ModelPreset::Rgcn,
        ModelPreset::Sage,
        ModelPreset::Hge,
        ModelPreset::RHge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelPreset::Sgd => "SGD",
            ModelPreset::Gcn => "GCN",
            ModelPreset::Sage => "SAGE",
            ModelPreset::Rgcn => "RGCN",
            ModelPreset::Hge => "HGE",
            ModelPreset::RHge => "R-HGE",
        }
    }

    /// GNN configuration; `None` for the feature-only baseline.
    pub fn config(self) -> Option<ModelConfig> {
        match self {
            ModelPreset::Sgd => None,
            ModelPreset::Gcn => Some(ModelConfig::gcn()),
            ModelPreset::Sage => Some(ModelConfig::sage()),
            ModelPreset::Rgcn => Some(ModelConfig::rgcn()),
            ModelPreset::Hge => Some(ModelConfig::hge()),
            ModelPreset::RHge => Some(ModelConfig::r_hge()),
        }
    }
}

impl std::str::FromStr for ModelPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "sgd" => ModelPreset::Sgd,
            "gcn" => ModelPreset::Gcn,
            "sage" | "graphsage" => ModelPreset::Sage,
            "rgcn" => ModelPreset::Rgcn,
            "hge" => ModelPreset::Hge,
            "r-hge" | "rhge" => ModelPreset::RHge,
            other => return Err(Error::InvalidArgument(format!("unknown model `{other}`"))),
        })
    }
}

/// One step of the ablation ladder between HGE and R-HGE.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationStep {
    pub label: &'static str,
    pub config: ModelConfig,
}

/// HGE, then switches added one by one up to R-HGE, then residual and
/// interleaving removed cumulatively, then R-HGE again.
pub fn ablation_ladder(base: &ModelConfig) -> Vec<AblationStep> {
    let hge = ModelConfig {
        encoder: EncoderKind::Hge,
        use_residual: true,
        concat_all: false,
        interleave_decoder: false,
        edge_dropout_p: 0.0,
        ..base.clone()
    };
    let interleave = ModelConfig {
        interleave_decoder: true,
        ..hge.clone()
    };
    let cat = ModelConfig {
        concat_all: true,
        ..interleave.clone()
    };
    let edge = ModelConfig {
        edge_dropout_p: ModelConfig::r_hge().edge_dropout_p,
        ..cat.clone()
    };
    let no_res = ModelConfig {
        use_residual: false,
        ..edge.clone()
    };
    let no_int = ModelConfig {
        interleave_decoder: false,
        ..no_res.clone()
    };
    vec![
        AblationStep { label: "HGE", config: hge },
        AblationStep { label: "+ interleave", config: interleave },
        AblationStep { label: "+ cat all", config: cat },
        AblationStep { label: "+ edge drop", config: edge.clone() },
        AblationStep { label: "- residual", config: no_res },
        AblationStep { label: "- interleave", config: no_int },
        AblationStep { label: "R-HGE", config: edge },
    ]
}
