//! Block composition and the full classification forward pass with its
//! attention log and pruning trace.

use super::attention::{mhsa_forward, AttentionRecord};
use super::{Aggregation, ModelConfig, ModelError, TokenState};
use crate::analysis::ClusterModel;
use crate::audio::{PatchGrid, PatchStats};
use crate::pruning::{
    apply_prune, discard_group, score_tokens, select_topk, IntensityGroup, PruneConfig,
};
use crate::tensor::{gelu, layer_norm, matmul, Matrix};
use crate::trace::{
    AttentionLog, AttentionLogRow, PruneEvent, PruneTrace, TokenScore, TRACE_SCHEMA_VERSION,
};
use crate::weights::{BlockWeights, ModelWeights};

const LN_EPS: f32 = 1e-6;

/// Projects flattened patches, prepends a CLS token for CLS aggregation,
/// and adds positional embeddings by provenance index.
pub fn patch_embed(
    grid: &PatchGrid,
    weights: &ModelWeights,
    cfg: &ModelConfig,
) -> Result<TokenState, ModelError> {
    let n = grid.len();
    if n > cfg.max_tokens {
        return Err(ModelError::TooManyTokens {
            got: n,
            max: cfg.max_tokens,
        });
    }
    let mut act = matmul(&grid.patches, &weights.patch_weight)?;
    act.add_row_vec(&weights.patch_bias)?;
    for t in 0..n {
        let pos = weights.pos_embed.row(t);
        for (a, p) in act.row_mut(t).iter_mut().zip(pos) {
            *a += p;
        }
    }
    let has_cls = cfg.uses_cls();
    let act = if has_cls {
        let cls_token = weights.cls_token.as_ref().ok_or(ModelError::ClsAbsent)?;
        let cls_pos = weights.cls_pos.as_ref().ok_or(ModelError::ClsAbsent)?;
        let mut with_cls = Matrix::zeros(n + 1, cfg.dim);
        for (o, (t, p)) in with_cls
            .row_mut(0)
            .iter_mut()
            .zip(cls_token.iter().zip(cls_pos))
        {
            *o = t + p;
        }
        for t in 0..n {
            with_cls.row_mut(t + 1).copy_from_slice(act.row(t));
        }
        with_cls
    } else {
        act
    };
    Ok(TokenState {
        activations: act,
        provenance: (0..n).collect(),
        has_cls,
    })
}

/// One pre-norm transformer block: LN -> MHSA -> residual, then the
/// pruning hook (which may shrink the state), then LN -> MLP -> residual.
pub fn block_forward<F>(
    state: TokenState,
    bw: &BlockWeights,
    heads: usize,
    block_index: usize,
    prune_hook: F,
) -> Result<(TokenState, AttentionRecord), ModelError>
where
    F: FnOnce(TokenState, &AttentionRecord) -> Result<TokenState, ModelError>,
{
    let (state, record) = mhsa_forward(&state, bw, heads, block_index)?;
    let mut state = prune_hook(state, &record)?;

    let normed = layer_norm(&state.activations, &bw.ln2_gamma, &bw.ln2_beta, LN_EPS)?;
    let mut hidden = matmul(&normed, &bw.fc1_weight)?;
    hidden.add_row_vec(&bw.fc1_bias)?;
    let hidden = gelu(&hidden);
    let mut out = matmul(&hidden, &bw.fc2_weight)?;
    out.add_row_vec(&bw.fc2_bias)?;
    out.add_assign(&state.activations)?;
    state.activations = out;
    Ok((state, record))
}

/// Collapses surviving tokens to a single feature vector.
pub fn aggregate(state: &TokenState, mode: Aggregation) -> Result<Vec<f32>, ModelError> {
    if (mode == Aggregation::Cls) != state.has_cls {
        return Err(ModelError::AggregationMismatch {
            mode,
            has_cls: state.has_cls,
        });
    }
    match mode {
        Aggregation::Cls => Ok(state.activations.row(0).to_vec()),
        Aggregation::MeanPooling => {
            let n = state.token_count();
            let dim = state.activations.cols();
            let mut out = vec![0.0f64; dim];
            for t in 0..n {
                for (o, &v) in out
                    .iter_mut()
                    .zip(state.activations.row(state.token_row(t)))
                {
                    *o += v as f64;
                }
            }
            Ok(out.iter().map(|&v| (v / n as f64) as f32).collect())
        }
    }
}

/// Full classification output plus everything the analyses need.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub logits: Vec<f32>,
    pub trace: PruneTrace,
    pub log: AttentionLog,
}

/// Group-discard ablation: after block `block`, drop every token whose
/// patch-mean cluster falls in `group`.
#[derive(Debug, Clone)]
pub struct AblationSpec {
    pub group: IntensityGroup,
    pub block: usize,
}

enum Hook<'a> {
    TopK {
        prune: &'a PruneConfig,
        stats: Option<&'a PatchStats>,
    },
    Discard {
        spec: &'a AblationSpec,
        cm: &'a ClusterModel,
        stats: &'a PatchStats,
    },
}

/// patch_embed -> depth blocks (pruning at configured blocks) -> final
/// LN -> aggregation -> linear head. Records every block's attention
/// scores keyed by provenance plus the pruning trace.
pub fn classify_forward(
    grid: &PatchGrid,
    weights: &ModelWeights,
    cfg: &ModelConfig,
    prune: &PruneConfig,
    stats: Option<&PatchStats>,
    input_name: &str,
) -> Result<ForwardOutput, ModelError> {
    prune.validate(cfg.depth)?;
    run_forward(grid, weights, cfg, Hook::TopK { prune, stats }, input_name)
}

/// Plain forward with a one-shot group discard after the named block.
pub fn classify_forward_with_ablation(
    grid: &PatchGrid,
    weights: &ModelWeights,
    cfg: &ModelConfig,
    spec: &AblationSpec,
    cm: &ClusterModel,
    stats: &PatchStats,
    input_name: &str,
) -> Result<ForwardOutput, ModelError> {
    if spec.block == 0 || spec.block > cfg.depth {
        return Err(ModelError::BadConfig(format!(
            "ablation block {} outside 1..={}",
            spec.block, cfg.depth
        )));
    }
    run_forward(
        grid,
        weights,
        cfg,
        Hook::Discard { spec, cm, stats },
        input_name,
    )
}

fn run_forward(
    grid: &PatchGrid,
    weights: &ModelWeights,
    cfg: &ModelConfig,
    hook: Hook<'_>,
    input_name: &str,
) -> Result<ForwardOutput, ModelError> {
    cfg.validate()?;
    let mut state = patch_embed(grid, weights, cfg)?;
    let mut log = AttentionLog::default();
    let (metric_name, keep_rate, locations) = match &hook {
        Hook::TopK { prune, .. } => (
            prune.metric.name().to_string(),
            prune.keep_rate,
            prune.locations.clone(),
        ),
        Hook::Discard { spec, .. } => (
            match spec.group {
                IntensityGroup::L => "discard-l".to_string(),
                IntensityGroup::H => "discard-h".to_string(),
            },
            1.0,
            vec![spec.block],
        ),
    };
    let mut trace = PruneTrace {
        schema_version: TRACE_SCHEMA_VERSION,
        input: input_name.to_string(),
        n_tokens: grid.len(),
        n_time: grid.n_time,
        n_freq: grid.n_freq,
        content_time_patches: grid.content_time_patches,
        metric: metric_name,
        keep_rate,
        locations,
        events: Vec::new(),
    };

    for block in 1..=cfg.depth {
        let bw = &weights.blocks[block - 1];
        let (next, _record) = block_forward(state, bw, cfg.heads, block, |s, record| {
            let pre_provenance = s.provenance.clone();
            let next = match &hook {
                Hook::TopK { prune, stats } => {
                    if prune.prunes_at(block) && prune.keep_rate < 1.0 {
                        let scores = score_tokens(&s, Some(record), *stats, prune.metric)?;
                        let (retained, pruned) = select_topk(&scores, prune.keep_rate)?;
                        trace.events.push(PruneEvent {
                            block,
                            pre_count: s.token_count(),
                            retained: retained
                                .iter()
                                .map(|&t| TokenScore {
                                    provenance: s.provenance[t],
                                    score: scores[t],
                                })
                                .collect(),
                            pruned: pruned
                                .iter()
                                .map(|&t| TokenScore {
                                    provenance: s.provenance[t],
                                    score: scores[t],
                                })
                                .collect(),
                        });
                        apply_prune(&s, &retained)?
                    } else {
                        s
                    }
                }
                Hook::Discard { spec, cm, stats } => {
                    if spec.block == block {
                        let next = discard_group(&s, cm, stats, spec.group)?;
                        let kept: std::collections::HashSet<usize> =
                            next.provenance.iter().copied().collect();
                        trace.events.push(PruneEvent {
                            block,
                            pre_count: s.token_count(),
                            retained: s
                                .provenance
                                .iter()
                                .filter(|p| kept.contains(p))
                                .map(|&p| TokenScore {
                                    provenance: p,
                                    score: stats.means[p],
                                })
                                .collect(),
                            pruned: s
                                .provenance
                                .iter()
                                .filter(|p| !kept.contains(p))
                                .map(|&p| TokenScore {
                                    provenance: p,
                                    score: stats.means[p],
                                })
                                .collect(),
                        });
                        next
                    } else {
                        s
                    }
                }
            };
            let survivors: std::collections::HashSet<usize> =
                next.provenance.iter().copied().collect();
            for (t, &p) in pre_provenance.iter().enumerate() {
                log.rows.push(AttentionLogRow {
                    block,
                    provenance: p,
                    score: record.scores[t],
                    retained: survivors.contains(&p),
                });
            }
            Ok(next)
        })?;
        state = next;
    }

    let final_act = layer_norm(
        &state.activations,
        &weights.norm_gamma,
        &weights.norm_beta,
        LN_EPS,
    )?;
    let final_state = TokenState {
        activations: final_act,
        provenance: state.provenance.clone(),
        has_cls: state.has_cls,
    };
    let feature = aggregate(&final_state, cfg.aggregation)?;
    let feature_m = Matrix::from_vec(1, feature.len(), feature).expect("sized");
    let mut logits_m = matmul(&feature_m, &weights.head_weight)?;
    logits_m.add_row_vec(&weights.head_bias)?;
    let logits = logits_m.row(0).to_vec();
    if !logits.iter().all(|v| v.is_finite()) {
        return Err(ModelError::NonFinite {
            context: format!("logits of `{input_name}`"),
        });
    }
    Ok(ForwardOutput { logits, trace, log })
}
