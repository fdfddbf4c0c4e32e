//! Analytical multiply-accumulate cost model for the pruned transformer.
//!
//! Only dense matmul MACs are counted (biases, layer norm, softmax and
//! GELU are excluded, the convention of common profilers). Pruning sits
//! between MHSA and MLP, so at a pruning block the attention half runs
//! on the incoming token count and the MLP half on the reduced one.
//! For CLS aggregation the CLS token rides along in every count.

use std::io::Write;

use crate::model::ModelConfig;
use crate::pruning::{keep_count, PruneConfig};

/// Per-block token counts on the MHSA side: N up to and including each
/// pruning location, then shrunk by the ceil chain.
pub fn token_count_schedule(
    n_tokens: usize,
    keep_rate: f64,
    locations: &[usize],
    depth: usize,
) -> Vec<usize> {
    let mut counts = Vec::with_capacity(depth);
    let mut n = n_tokens;
    for block in 1..=depth {
        counts.push(n);
        if locations.contains(&block) && keep_rate < 1.0 {
            n = keep_count(n, keep_rate);
        }
    }
    counts
}

/// MACs of the attention half at `n` tokens: QKV projections, attention
/// logits, attention-times-values, and the output projection.
pub fn attention_macs(n: usize, cfg: &ModelConfig) -> u64 {
    let n = n as u64;
    let d = cfg.dim as u64;
    3 * n * d * d + n * n * d + n * n * d + n * d * d
}

/// MACs of the MLP half at `n` tokens (hidden width `mlp_ratio * dim`).
pub fn mlp_macs(n: usize, cfg: &ModelConfig) -> u64 {
    let n = n as u64;
    let d = cfg.dim as u64;
    2 * n * d * (cfg.mlp_ratio as u64 * d)
}

/// MACs of one full block at a uniform token count.
pub fn block_macs(n: usize, cfg: &ModelConfig) -> u64 {
    attention_macs(n, cfg) + mlp_macs(n, cfg)
}

#[derive(Debug, Clone)]
pub struct BlockCost {
    /// 1-based block index.
    pub block: usize,
    /// Token count entering the block (MHSA side).
    pub tokens_in: usize,
    /// Token count leaving the block (MLP side; smaller at pruning blocks).
    pub tokens_out: usize,
    pub macs: u64,
}

/// Full cost accounting of one forward pass.
#[derive(Debug, Clone)]
pub struct CostReport {
    pub n_tokens: usize,
    pub keep_rate: f64,
    pub patch_embed_macs: u64,
    pub blocks: Vec<BlockCost>,
    pub head_macs: u64,
    pub total: u64,
}

impl CostReport {
    /// Total in units of 10^9 MACs.
    pub fn total_g(&self) -> f64 {
        self.total as f64 / 1e9
    }
}

/// Patch embedding + all blocks + aggregation and classification head.
pub fn total_macs(n_tokens: usize, prune: &PruneConfig, cfg: &ModelConfig) -> CostReport {
    let cls = cfg.uses_cls() as usize;
    let schedule = token_count_schedule(n_tokens, prune.keep_rate, &prune.locations, cfg.depth);
    let patch_embed_macs = (n_tokens * cfg.patch_dim * cfg.dim) as u64;
    let mut blocks = Vec::with_capacity(cfg.depth);
    let mut total = patch_embed_macs;
    for (i, &n_in) in schedule.iter().enumerate() {
        let block = i + 1;
        let n_out = if prune.prunes_at(block) && prune.keep_rate < 1.0 {
            keep_count(n_in, prune.keep_rate)
        } else {
            n_in
        };
        let macs = attention_macs(n_in + cls, cfg) + mlp_macs(n_out + cls, cfg);
        total += macs;
        blocks.push(BlockCost {
            block,
            tokens_in: n_in + cls,
            tokens_out: n_out + cls,
            macs,
        });
    }
    let n_final = blocks.last().map_or(n_tokens + cls, |b| b.tokens_out);
    let head_macs = (n_final * cfg.dim + cfg.dim * cfg.num_classes) as u64;
    total += head_macs;
    CostReport {
        n_tokens,
        keep_rate: prune.keep_rate,
        patch_embed_macs,
        blocks,
        head_macs,
        total,
    }
}

/// Writes the `N,keep_rate,total_G` table (one decimal, the table's own
/// reporting convention) for every (n, kr) combination.
pub fn write_mac_table<W: Write>(
    w: &mut W,
    token_counts: &[usize],
    keep_rates: &[f64],
    cfg: &ModelConfig,
    locations: &[usize],
) -> std::io::Result<()> {
    writeln!(w, "N,keep_rate,total_G")?;
    for &n in token_counts {
        for &kr in keep_rates {
            let prune = PruneConfig {
                locations: locations.to_vec(),
                keep_rate: kr,
                metric: crate::pruning::Metric::AttnMeanPooling,
            };
            let report = total_macs(n, &prune, cfg);
            writeln!(w, "{},{},{:.1}", n, kr, report.total_g())?;
        }
    }
    Ok(())
}
