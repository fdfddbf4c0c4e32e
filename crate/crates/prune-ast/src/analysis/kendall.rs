//! Clustered Kendall rank correlation.
//!
//! Every ordered pair (i, j), i != j, is classified: concordant when
//! `C_i <= C_j && a_i <= a_j` or `C_i > C_j && a_i > a_j`, discordant
//! otherwise; tau = (concordant - discordant) / (n (n - 1)). Cluster-tied
//! pairs with unequal scores split one concordant, one discordant across
//! the two orientations, which is what makes the literal ordered-pair
//! reading well defined.

use std::collections::BTreeMap;

use super::AnalysisError;

/// Counts pairs (x in a, y in b) with x <= y; both slices sorted ascending.
fn count_le(a: &[f32], b: &[f32]) -> u64 {
    let mut count = 0u64;
    let mut ai = 0usize;
    for &y in b {
        while ai < a.len() && a[ai] <= y {
            ai += 1;
        }
        count += ai as u64;
    }
    count
}

/// Tau over cluster ids and scores via per-cluster sorted buckets,
/// O(n log n) rather than the O(n^2) literal enumeration.
pub fn kendall_tau_clustered(clusters: &[usize], scores: &[f32]) -> Result<f64, AnalysisError> {
    if clusters.len() != scores.len() {
        return Err(AnalysisError::LengthMismatch {
            left: clusters.len(),
            right: scores.len(),
        });
    }
    let n = clusters.len();
    if n < 2 {
        return Err(AnalysisError::TooShort { len: n });
    }

    let mut buckets: BTreeMap<usize, Vec<f32>> = BTreeMap::new();
    for (&c, &s) in clusters.iter().zip(scores) {
        buckets.entry(c).or_default().push(s);
    }
    for list in buckets.values_mut() {
        list.sort_by(f32::total_cmp);
    }
    let groups: Vec<&Vec<f32>> = buckets.values().collect();

    let mut concordant = 0u64;
    let mut discordant = 0u64;

    for (gi, low) in groups.iter().enumerate() {
        // Within one cluster: (i, j) concordant iff a_i <= a_j.
        let m = low.len() as u64;
        if m >= 2 {
            // Unordered tied pairs contribute two concordant orientations;
            // unequal pairs one concordant and one discordant.
            let mut tied_pairs = 0u64;
            let mut run = 1u64;
            for w in low.windows(2) {
                if w[0] == w[1] {
                    run += 1;
                } else {
                    tied_pairs += run * (run - 1) / 2;
                    run = 1;
                }
            }
            tied_pairs += run * (run - 1) / 2;
            let unordered = m * (m - 1) / 2;
            let unequal = unordered - tied_pairs;
            concordant += unequal + 2 * tied_pairs;
            discordant += unequal;
        }
        // Across clusters low < high.
        for high in groups.iter().skip(gi + 1) {
            let pairs = (low.len() * high.len()) as u64;
            // Orientation (i in low, j in high): concordant iff a_i <= a_j.
            let le = count_le(low, high);
            concordant += le;
            discordant += pairs - le;
            // Orientation (i in high, j in low): concordant iff a_i > a_j.
            let gt = pairs - count_le(high, low);
            concordant += gt;
            discordant += pairs - gt;
        }
    }

    let total = (n as u64) * (n as u64 - 1);
    debug_assert_eq!(concordant + discordant, total);
    Ok((concordant as f64 - discordant as f64) / total as f64)
}

/// Literal ordered-pair enumeration; the independent O(n^2) oracle the
/// fast path is tested against.
pub fn kendall_tau_bruteforce(clusters: &[usize], scores: &[f32]) -> Result<f64, AnalysisError> {
    if clusters.len() != scores.len() {
        return Err(AnalysisError::LengthMismatch {
            left: clusters.len(),
            right: scores.len(),
        });
    }
    let n = clusters.len();
    if n < 2 {
        return Err(AnalysisError::TooShort { len: n });
    }
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let conc = (clusters[i] <= clusters[j] && scores[i] <= scores[j])
                || (clusters[i] > clusters[j] && scores[i] > scores[j]);
            if conc {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    Ok((concordant - discordant) as f64 / (n as i64 * (n as i64 - 1)) as f64)
}
