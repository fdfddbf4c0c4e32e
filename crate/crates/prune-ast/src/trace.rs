//! Attention logs and pruning traces: what the forward pass records and
//! what every analysis consumes.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("attention log line {line}: {reason}")]
    BadLog { line: usize, reason: String },
    #[error("trace JSON: {0}")]
    BadJson(#[from] serde_json::Error),
}

/// One token's attention score at one block, with its survival flag.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionLogRow {
    /// 1-based block index.
    pub block: usize,
    /// Original patch index of the token.
    pub provenance: usize,
    /// Attention importance at this block (mean-pooling or CLS form,
    /// depending on the model's aggregation).
    pub score: f32,
    /// False only for tokens dropped by this block's pruning hook.
    pub retained: bool,
}

/// Per-block, per-token attention scores for one input.
#[derive(Debug, Clone, Default)]
pub struct AttentionLog {
    pub rows: Vec<AttentionLogRow>,
}

impl AttentionLog {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "block,provenance,score,retained_flag")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                r.block,
                r.provenance,
                r.score,
                if r.retained { 1 } else { 0 }
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<AttentionLog, TraceError> {
        let mut rows = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 4 {
                return Err(TraceError::BadLog {
                    line: i + 1,
                    reason: format!("expected 4 columns, got {}", parts.len()),
                });
            }
            let bad = |what: &str| TraceError::BadLog {
                line: i + 1,
                reason: format!("bad {what}"),
            };
            rows.push(AttentionLogRow {
                block: parts[0].trim().parse().map_err(|_| bad("block"))?,
                provenance: parts[1].trim().parse().map_err(|_| bad("provenance"))?,
                score: parts[2].trim().parse().map_err(|_| bad("score"))?,
                retained: match parts[3].trim() {
                    "1" => true,
                    "0" => false,
                    _ => return Err(bad("retained_flag")),
                },
            });
        }
        Ok(AttentionLog { rows })
    }

    /// Scores of one block, in log order `(provenance, score)`.
    pub fn block_scores(&self, block: usize) -> Vec<(usize, f32)> {
        self.rows
            .iter()
            .filter(|r| r.block == block)
            .map(|r| (r.provenance, r.score))
            .collect()
    }
}

/// A token and the score the pruning decision used for it.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TokenScore {
    pub provenance: usize,
    pub score: f32,
}

/// What one pruning hook did inside one block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PruneEvent {
    /// 1-based block index the hook ran in.
    pub block: usize,
    /// Token count entering the hook.
    pub pre_count: usize,
    pub retained: Vec<TokenScore>,
    pub pruned: Vec<TokenScore>,
}

/// Full pruning record of one forward pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PruneTrace {
    pub schema_version: u32,
    /// Input stem this trace belongs to.
    pub input: String,
    /// Token count after patchify.
    pub n_tokens: usize,
    pub n_time: usize,
    pub n_freq: usize,
    /// Patch time rows below this index hold real content; the rest are
    /// padding appended by pad_or_trim.
    pub content_time_patches: usize,
    pub metric: String,
    pub keep_rate: f64,
    pub locations: Vec<usize>,
    pub events: Vec<PruneEvent>,
}

impl PruneTrace {
    pub fn to_json(&self) -> Result<String, TraceError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<PruneTrace, TraceError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Provenance ids that survive the final pruning event; all tokens
    /// when nothing pruned.
    pub fn final_survivors(&self) -> Vec<usize> {
        match self.events.last() {
            Some(e) => e.retained.iter().map(|t| t.provenance).collect(),
            None => (0..self.n_tokens).collect(),
        }
    }

    pub fn event_at(&self, block: usize) -> Option<&PruneEvent> {
        self.events.iter().find(|e| e.block == block)
    }
}
