//! Statistical machinery over attention logs and pruning traces:
//! 1-D clustering, clustered Kendall tau, retained/pruned attention
//! ratios, retention histograms, and CDFs.

mod corpus;
mod histogram;
mod kendall;
mod kmeans;
mod ratio;

pub use corpus::{Corpus, SampleRecord};
pub use histogram::{retention_cdf, retention_histogram2d, CdfCurve, Hist2d};
pub use kendall::{kendall_tau_bruteforce, kendall_tau_clustered};
pub use kmeans::{kmeans_1d, ClusterModel, StatFeature};
pub use ratio::{
    gamma, gamma_group, gamma_report, prune_block_for, GammaCell, GammaGroup, RatioReport,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("need at least {k} distinct values for k-means, got {distinct}")]
    TooFewDistinct { distinct: usize, k: usize },
    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 elements, got {len}")]
    TooShort { len: usize },
    #[error("gamma cells missing for (block, cluster) pairs: {0:?}")]
    MissingCells(Vec<(usize, usize)>),
    #[error("no data: {0}")]
    NoData(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Trace(#[from] crate::trace::TraceError),
    #[error(transparent)]
    Audio(#[from] crate::audio::AudioError),
}

/// Per-block clustered Kendall tau plus the cross-block average.
#[derive(Debug, Clone)]
pub struct CorrelationReport {
    /// (1-based block, tau), for every block with at least two tokens.
    pub rows: Vec<(usize, f64)>,
    pub average: f64,
}

/// Tau between cluster-quantized patch statistics and attention scores,
/// per block, pooling tokens from every sample in the corpus.
pub fn tau_report(corpus: &Corpus, cm: &ClusterModel) -> Result<CorrelationReport, AnalysisError> {
    let max_block = corpus
        .samples
        .iter()
        .flat_map(|s| s.log.rows.iter().map(|r| r.block))
        .max()
        .ok_or_else(|| AnalysisError::NoData("empty attention logs".into()))?;
    let mut rows = Vec::new();
    for block in 1..=max_block {
        let mut clusters = Vec::new();
        let mut scores = Vec::new();
        for sample in &corpus.samples {
            for (provenance, score) in sample.log.block_scores(block) {
                let value = sample.feature_value(cm.feature, provenance);
                clusters.push(cm.assign(value));
                scores.push(score);
            }
        }
        if clusters.len() >= 2 {
            rows.push((block, kendall_tau_clustered(&clusters, &scores)?));
        }
    }
    if rows.is_empty() {
        return Err(AnalysisError::NoData("no block had two tokens".into()));
    }
    let average = rows.iter().map(|(_, t)| t).sum::<f64>() / rows.len() as f64;
    Ok(CorrelationReport { rows, average })
}
