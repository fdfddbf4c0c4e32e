//! Retained/pruned attention-score ratios: gamma per (block, cluster)
//! and the group average Gamma.
//!
//! Blocks are grouped by the pruning location that ends their segment;
//! with locations {4, 7, 10} the groups are (1,2,3,4), (5,6,7) and
//! (8,9,10). Within a group the retained and pruned sets are those of
//! the group's pruning block, and both expectations pool every token of
//! every sample (ratio of means, not mean of ratios).

use super::{AnalysisError, ClusterModel, Corpus};

#[derive(Debug, Clone, PartialEq)]
pub struct GammaGroup {
    /// 1-based group index.
    pub index: usize,
    pub blocks: Vec<usize>,
    pub prune_block: usize,
}

/// Splits blocks into groups ending at each sorted pruning location.
pub fn block_groups(locations: &[usize]) -> Vec<GammaGroup> {
    let mut sorted = locations.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut groups = Vec::new();
    let mut prev = 0usize;
    for (i, &loc) in sorted.iter().enumerate() {
        groups.push(GammaGroup {
            index: i + 1,
            blocks: (prev + 1..=loc).collect(),
            prune_block: loc,
        });
        prev = loc;
    }
    groups
}

/// The pruning location whose retained/pruned split applies at `block`,
/// i.e. the smallest location at or after it.
pub fn prune_block_for(block: usize, locations: &[usize]) -> Option<usize> {
    locations.iter().copied().filter(|&l| l >= block).min()
}

/// Mean attention at `block` over retained tokens of `cluster`, divided
/// by mean attention at `block` over tokens pruned at the group's
/// pruning location. `None` when either set is empty.
pub fn gamma(
    corpus: &Corpus,
    cm: &ClusterModel,
    block: usize,
    cluster: usize,
    locations: &[usize],
) -> Option<f64> {
    let prune_block = prune_block_for(block, locations)?;
    let mut retained_sum = 0.0f64;
    let mut retained_count = 0u64;
    let mut pruned_sum = 0.0f64;
    let mut pruned_count = 0u64;
    for sample in &corpus.samples {
        let event = match sample.trace.event_at(prune_block) {
            Some(e) => e,
            None => continue,
        };
        let retained: std::collections::HashSet<usize> =
            event.retained.iter().map(|t| t.provenance).collect();
        let pruned: std::collections::HashSet<usize> =
            event.pruned.iter().map(|t| t.provenance).collect();
        for (provenance, score) in sample.log.block_scores(block) {
            if pruned.contains(&provenance) {
                pruned_sum += score as f64;
                pruned_count += 1;
            } else if retained.contains(&provenance)
                && cm.assign(sample.feature_value(cm.feature, provenance)) == cluster
            {
                retained_sum += score as f64;
                retained_count += 1;
            }
        }
    }
    if retained_count == 0 || pruned_count == 0 {
        return None;
    }
    let num = retained_sum / retained_count as f64;
    let den = pruned_sum / pruned_count as f64;
    Some(num / den)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaCell {
    pub block: usize,
    pub cluster: usize,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RatioReport {
    pub cells: Vec<GammaCell>,
    pub groups: Vec<GammaGroup>,
}

/// All gamma cells for every grouped block and cluster 1..=5.
pub fn gamma_report(corpus: &Corpus, cm: &ClusterModel, locations: &[usize]) -> RatioReport {
    let groups = block_groups(locations);
    let mut cells = Vec::new();
    for group in &groups {
        for &block in &group.blocks {
            for cluster in 1..=cm.k() {
                cells.push(GammaCell {
                    block,
                    cluster,
                    gamma: gamma(corpus, cm, block, cluster, locations),
                });
            }
        }
    }
    RatioReport { cells, groups }
}

/// Gamma(n): the average of gamma over the group's blocks and all five
/// clusters. Errors list every absent (block, cluster) cell.
pub fn gamma_group(report: &RatioReport, group_index: usize) -> Result<f64, AnalysisError> {
    let group = report
        .groups
        .iter()
        .find(|g| g.index == group_index)
        .ok_or_else(|| AnalysisError::NoData(format!("no group {group_index}")))?;
    let mut missing = Vec::new();
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for cell in &report.cells {
        if group.blocks.contains(&cell.block) {
            match cell.gamma {
                Some(g) => {
                    sum += g;
                    count += 1;
                }
                None => missing.push((cell.block, cell.cluster)),
            }
        }
    }
    if !missing.is_empty() {
        return Err(AnalysisError::MissingCells(missing));
    }
    debug_assert_eq!(count, 5 * group.blocks.len());
    Ok(sum / count as f64)
}
