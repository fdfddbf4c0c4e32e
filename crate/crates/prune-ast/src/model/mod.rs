//! ViT-style transformer over spectrogram patches with per-block
//! attention hooks and pluggable aggregation.

mod attention;
mod forward;

pub use attention::{
    mhsa_forward, scores_cls, scores_mean_pooling, AttentionRecord, AttentionTensor,
};
pub use forward::{
    aggregate, block_forward, classify_forward, classify_forward_with_ablation, patch_embed,
    AblationSpec, ForwardOutput,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{Matrix, TensorError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("aggregation `{mode:?}` does not match token state (has_cls = {has_cls})")]
    AggregationMismatch { mode: Aggregation, has_cls: bool },
    #[error("attention scores require a CLS token but none is present")]
    ClsAbsent,
    #[error("metric `{metric}` requires {missing}")]
    MetricInput {
        metric: &'static str,
        missing: &'static str,
    },
    #[error("{context}: non-finite values in activations")]
    NonFinite { context: String },
    #[error("{0}")]
    Prune(#[from] crate::pruning::PruneError),
    #[error("patch grid has {got} patches but positional table holds {max}")]
    TooManyTokens { got: usize, max: usize },
    #[error("invalid config: {0}")]
    BadConfig(String),
}

/// Token aggregation for the classification head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregation {
    #[serde(rename = "cls")]
    Cls,
    #[serde(rename = "mean-pooling")]
    MeanPooling,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub depth: usize,
    pub dim: usize,
    pub heads: usize,
    #[serde(default = "default_mlp_ratio")]
    pub mlp_ratio: usize,
    #[serde(default = "default_patch_dim")]
    pub patch_dim: usize,
    /// Size of the positional-embedding table; inputs may not exceed it.
    pub max_tokens: usize,
    pub num_classes: usize,
    pub aggregation: Aggregation,
}

fn default_mlp_ratio() -> usize {
    4
}

fn default_patch_dim() -> usize {
    256
}

impl Default for ModelConfig {
    /// Desk-scale width with the full 12-block layout, so the standard
    /// pruning locations {4, 7, 10} apply unchanged.
    fn default() -> Self {
        ModelConfig {
            depth: 12,
            dim: 64,
            heads: 4,
            mlp_ratio: 4,
            patch_dim: 256,
            max_tokens: 512,
            num_classes: 10,
            aggregation: Aggregation::MeanPooling,
        }
    }
}

impl ModelConfig {
    /// ViT-B dimensions used by the cost model and optional large runs.
    pub fn vit_b(num_classes: usize, aggregation: Aggregation) -> Self {
        ModelConfig {
            depth: 12,
            dim: 768,
            heads: 12,
            mlp_ratio: 4,
            patch_dim: 256,
            max_tokens: 512,
            num_classes,
            aggregation,
        }
    }

    /// Desk-scale test default.
    pub fn toy() -> Self {
        ModelConfig {
            depth: 6,
            dim: 64,
            heads: 4,
            mlp_ratio: 4,
            patch_dim: 256,
            max_tokens: 512,
            num_classes: 10,
            aggregation: Aggregation::MeanPooling,
        }
    }

    pub fn uses_cls(&self) -> bool {
        self.aggregation == Aggregation::Cls
    }

    pub fn head_dim(&self) -> usize {
        self.dim / self.heads
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.depth == 0 {
            return Err(ModelError::BadConfig("depth must be >= 1".into()));
        }
        if self.dim == 0 || !self.dim.is_multiple_of(self.heads) {
            return Err(ModelError::BadConfig(format!(
                "dim {} must be a positive multiple of heads {}",
                self.dim, self.heads
            )));
        }
        if self.num_classes == 0 || self.max_tokens == 0 || self.patch_dim == 0 {
            return Err(ModelError::BadConfig(
                "num_classes, max_tokens and patch_dim must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Activations plus per-token provenance, threaded through blocks and
/// pruning. Row 0 is the CLS token when `has_cls` is set; provenance
/// covers only patch tokens and stays strictly increasing.
#[derive(Debug, Clone)]
pub struct TokenState {
    pub activations: Matrix,
    pub provenance: Vec<usize>,
    pub has_cls: bool,
}

impl TokenState {
    /// Number of patch tokens (excludes CLS).
    pub fn token_count(&self) -> usize {
        self.provenance.len()
    }

    /// Total rows including CLS.
    pub fn row_count(&self) -> usize {
        self.token_count() + self.has_cls as usize
    }

    /// Activation row index of patch token `t`.
    pub fn token_row(&self, t: usize) -> usize {
        t + self.has_cls as usize
    }

    pub fn check_invariants(&self) -> bool {
        self.activations.rows() == self.row_count()
            && self.provenance.windows(2).all(|w| w[0] < w[1])
    }
}
