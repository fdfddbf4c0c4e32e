//! Token scoring, TopK selection, keep-rate scheduling, and the
//! intensity-group discard used by the ablation runs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::ClusterModel;
use crate::audio::PatchStats;
use crate::model::{AttentionRecord, TokenState};
use crate::tensor::{topk_indices, Matrix, TensorError};

#[derive(Debug, Error)]
pub enum PruneError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("cannot prune an empty token set")]
    EmptyTokenSet,
    #[error("keep rate {0} outside (0, 1]")]
    BadKeepRate(f64),
    #[error("metric `{metric}` requires {missing}")]
    MissingInput {
        metric: &'static str,
        missing: &'static str,
    },
    #[error("retained index {index} out of range for {len} tokens")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("retained indices must be strictly increasing")]
    UnsortedIndices,
    #[error("discarding group {group:?} would remove every token")]
    EmptySurvivors { group: IntensityGroup },
    #[error("pruning location {location} outside block range 1..={depth}")]
    BadLocation { location: usize, depth: usize },
    #[error("token provenance {provenance} has no patch statistics (have {len})")]
    MissingStats { provenance: usize, len: usize },
    #[error("group discard requires an intensity-fitted cluster model, got one fitted on {0:?}")]
    WrongClusterFeature(crate::analysis::StatFeature),
}

/// Which importance signal drives TopK.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    /// Token-to-token attention received, averaged over heads and queries.
    #[serde(rename = "attn-mp")]
    AttnMeanPooling,
    /// Attention paid by the CLS query.
    #[serde(rename = "attn-cls")]
    AttnCls,
    /// Patch mean of the normalized spectrogram.
    #[serde(rename = "intensity")]
    Intensity,
    /// Patch standard deviation.
    #[serde(rename = "variation")]
    Variation,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::AttnMeanPooling => "attn-mp",
            Metric::AttnCls => "attn-cls",
            Metric::Intensity => "intensity",
            Metric::Variation => "variation",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PruneConfig {
    /// 1-based block indices that prune; the same keep rate applies at all
    /// of them.
    pub locations: Vec<usize>,
    pub keep_rate: f64,
    pub metric: Metric,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            locations: vec![4, 7, 10],
            keep_rate: 1.0,
            metric: Metric::AttnMeanPooling,
        }
    }
}

impl PruneConfig {
    pub fn validate(&self, depth: usize) -> Result<(), PruneError> {
        if !(self.keep_rate > 0.0 && self.keep_rate <= 1.0) {
            return Err(PruneError::BadKeepRate(self.keep_rate));
        }
        for &loc in &self.locations {
            if loc == 0 || loc > depth {
                return Err(PruneError::BadLocation {
                    location: loc,
                    depth,
                });
            }
        }
        Ok(())
    }

    pub fn prunes_at(&self, block: usize) -> bool {
        self.locations.contains(&block)
    }
}

/// Number of tokens retained from `n` at keep rate `kr`.
///
/// Ceil in f64, matching the reference behavior of `math.ceil(n * kr)`;
/// with kr = 1.0 every token survives no matter how small `n` is.
pub fn keep_count(n: usize, kr: f64) -> usize {
    ((n as f64 * kr).ceil() as usize).clamp(1, n)
}

/// One importance score per current non-CLS token.
pub fn score_tokens(
    state: &TokenState,
    attn: Option<&AttentionRecord>,
    stats: Option<&PatchStats>,
    metric: Metric,
) -> Result<Vec<f32>, PruneError> {
    match metric {
        Metric::AttnMeanPooling => {
            let rec = attn.ok_or(PruneError::MissingInput {
                metric: "attn-mp",
                missing: "an attention record",
            })?;
            if rec.has_cls {
                return Err(PruneError::MissingInput {
                    metric: "attn-mp",
                    missing: "a CLS-free token sequence",
                });
            }
            Ok(rec.scores.clone())
        }
        Metric::AttnCls => {
            let rec = attn.ok_or(PruneError::MissingInput {
                metric: "attn-cls",
                missing: "an attention record",
            })?;
            if !rec.has_cls {
                return Err(PruneError::MissingInput {
                    metric: "attn-cls",
                    missing: "a CLS token",
                });
            }
            Ok(rec.scores.clone())
        }
        Metric::Intensity | Metric::Variation => {
            let stats = stats.ok_or(PruneError::MissingInput {
                metric: metric.name(),
                missing: "patch statistics",
            })?;
            let table = if metric == Metric::Intensity {
                &stats.means
            } else {
                &stats.stds
            };
            state
                .provenance
                .iter()
                .map(|&p| {
                    table.get(p).copied().ok_or(PruneError::MissingStats {
                        provenance: p,
                        len: table.len(),
                    })
                })
                .collect()
        }
    }
}

/// Splits token positions into (retained, pruned) by TopK over `scores`.
/// Both halves come back in ascending position order.
pub fn select_topk(scores: &[f32], kr: f64) -> Result<(Vec<usize>, Vec<usize>), PruneError> {
    if scores.is_empty() {
        return Err(PruneError::EmptyTokenSet);
    }
    if !(kr > 0.0 && kr <= 1.0) {
        return Err(PruneError::BadKeepRate(kr));
    }
    let k = keep_count(scores.len(), kr);
    let retained = topk_indices(scores, k)?;
    let mut pruned = Vec::with_capacity(scores.len() - k);
    let mut it = retained.iter().peekable();
    for i in 0..scores.len() {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            pruned.push(i);
        }
    }
    Ok((retained, pruned))
}

/// Drops every token not listed in `retained` (positions among non-CLS
/// tokens, strictly increasing). The CLS row is untouched and relative
/// token order is preserved.
pub fn apply_prune(state: &TokenState, retained: &[usize]) -> Result<TokenState, PruneError> {
    let n = state.token_count();
    if !retained.windows(2).all(|w| w[0] < w[1]) {
        return Err(PruneError::UnsortedIndices);
    }
    if let Some(&last) = retained.last() {
        if last >= n {
            return Err(PruneError::IndexOutOfRange {
                index: last,
                len: n,
            });
        }
    }
    let offset = state.has_cls as usize;
    let dim = state.activations.cols();
    let mut act = Matrix::zeros(retained.len() + offset, dim);
    if state.has_cls {
        act.row_mut(0).copy_from_slice(state.activations.row(0));
    }
    let mut provenance = Vec::with_capacity(retained.len());
    for (out_row, &t) in retained.iter().enumerate() {
        act.row_mut(out_row + offset)
            .copy_from_slice(state.activations.row(t + offset));
        provenance.push(state.provenance[t]);
    }
    Ok(TokenState {
        activations: act,
        provenance,
        has_cls: state.has_cls,
    })
}

/// EViT-style keep-rate schedule: flat at 1.0, a linear ramp down to the
/// target over `duration_epochs`, then flat at the target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeepRateSchedule {
    pub start_epoch: usize,
    pub duration_epochs: usize,
    pub target_kr: f64,
}

pub fn keep_rate_at_epoch(s: &KeepRateSchedule, epoch: usize) -> f64 {
    if epoch < s.start_epoch {
        return 1.0;
    }
    let elapsed = epoch - s.start_epoch;
    if elapsed >= s.duration_epochs || s.duration_epochs == 0 {
        return s.target_kr;
    }
    1.0 + (s.target_kr - 1.0) * elapsed as f64 / s.duration_epochs as f64
}

/// Intensity groups of the discard ablation: L covers the two lowest
/// clusters (C1, C2), H the two highest (C4, C5). C3 always survives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntensityGroup {
    L,
    H,
}

impl IntensityGroup {
    pub fn clusters(&self) -> [usize; 2] {
        match self {
            IntensityGroup::L => [1, 2],
            IntensityGroup::H => [4, 5],
        }
    }
}

/// Removes every token whose patch-mean cluster falls in the discarded
/// group. Errors out rather than returning an empty sequence.
pub fn discard_group(
    state: &TokenState,
    cm: &ClusterModel,
    stats: &PatchStats,
    group: IntensityGroup,
) -> Result<TokenState, PruneError> {
    if cm.feature != crate::analysis::StatFeature::Mean {
        return Err(PruneError::WrongClusterFeature(cm.feature));
    }
    let drop = group.clusters();
    let mut survivors = Vec::new();
    for (t, &p) in state.provenance.iter().enumerate() {
        let mean = stats
            .means
            .get(p)
            .copied()
            .ok_or(PruneError::MissingStats {
                provenance: p,
                len: stats.means.len(),
            })?;
        let cluster = cm.assign(mean);
        if !drop.contains(&cluster) {
            survivors.push(t);
        }
    }
    if survivors.is_empty() {
        return Err(PruneError::EmptySurvivors { group });
    }
    apply_prune(state, &survivors)
}
