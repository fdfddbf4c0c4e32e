//! One-dimensional Lloyd clustering with deterministic quantile-midpoint
//! initialization.

use serde::{Deserialize, Serialize};

use super::AnalysisError;

const MAX_ITERS: usize = 300;

/// Which patch statistic a cluster model was fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatFeature {
    #[serde(rename = "mean")]
    Mean,
    #[serde(rename = "std")]
    Std,
}

/// Fitted 1-D cluster model: `k` centroids sorted ascending, boundary
/// thresholds at the midpoints, and per-cluster share percentages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterModel {
    pub centroids: Vec<f32>,
    pub boundaries: Vec<f32>,
    pub feature: StatFeature,
    /// Share of the fitting data per cluster, in percent.
    pub shares: Vec<f32>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// Nearest-centroid assignment, 1-based; ties go to the lower index.
    pub fn assign(&self, value: f32) -> usize {
        let mut best = 0usize;
        let mut best_dist = (value - self.centroids[0]).abs();
        for (i, &c) in self.centroids.iter().enumerate().skip(1) {
            let dist = (value - c).abs();
            if dist < best_dist {
                best = i;
                best_dist = dist;
            }
        }
        best + 1
    }
}

/// Lloyd's algorithm on scalar data. Initial centroids sit at the
/// quantile midpoints of the sorted values ((i + 0.5)/k quantiles), so
/// fitting is deterministic; iteration stops at an assignment fixed
/// point or after 300 rounds.
pub fn kmeans_1d(
    values: &[f32],
    k: usize,
    feature: StatFeature,
) -> Result<ClusterModel, AnalysisError> {
    let mut distinct: Vec<f32> = values.to_vec();
    distinct.sort_by(f32::total_cmp);
    distinct.dedup();
    if distinct.len() < k {
        return Err(AnalysisError::TooFewDistinct {
            distinct: distinct.len(),
            k,
        });
    }

    let mut sorted: Vec<f32> = values.to_vec();
    sorted.sort_by(f32::total_cmp);
    let n = sorted.len();
    let mut centroids: Vec<f64> = (0..k)
        .map(|i| sorted[(2 * i + 1) * n / (2 * k)] as f64)
        .collect();

    let mut assignment = vec![0usize; n];
    for _ in 0..MAX_ITERS {
        let mut changed = false;
        for (i, &v) in sorted.iter().enumerate() {
            let mut best = 0usize;
            let mut best_dist = (v as f64 - centroids[0]).abs();
            for (c, &cen) in centroids.iter().enumerate().skip(1) {
                let dist = (v as f64 - cen).abs();
                if dist < best_dist {
                    best = c;
                    best_dist = dist;
                }
            }
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![0.0f64; k];
        let mut counts = vec![0usize; k];
        for (i, &v) in sorted.iter().enumerate() {
            sums[assignment[i]] += v as f64;
            counts[assignment[i]] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c] / counts[c] as f64;
            }
            // An emptied cluster keeps its previous centroid.
        }
    }

    // Lloyd on sorted scalar data keeps centroids ordered; order them and
    // recompute shares against the final model.
    let mut centroids: Vec<f32> = centroids.iter().map(|&c| c as f32).collect();
    centroids.sort_by(f32::total_cmp);
    let boundaries: Vec<f32> = centroids.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    let model = ClusterModel {
        centroids,
        boundaries,
        feature,
        shares: vec![0.0; k],
    };
    let mut counts = vec![0usize; k];
    for &v in values {
        counts[model.assign(v) - 1] += 1;
    }
    let shares = counts
        .iter()
        .map(|&c| (c as f64 / n as f64 * 100.0) as f32)
        .collect();
    Ok(ClusterModel { shares, ..model })
}
