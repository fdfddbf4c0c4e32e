//! Retention histograms over (mean, std) and the retained-intensity CDF.

use std::io::Write;

use super::{AnalysisError, ClusterModel, Corpus};

/// Log-normalized 2-D histogram over patch (mean, std).
#[derive(Debug, Clone)]
pub struct Hist2d {
    pub bins: usize,
    pub mean_range: (f32, f32),
    pub std_range: (f32, f32),
    /// bins x bins raw counts, mean-major.
    pub counts: Vec<u64>,
    /// log(1 + count) / log(1 + max count).
    pub lognorm: Vec<f64>,
}

impl Hist2d {
    fn build(
        points: &[(f32, f32)],
        bins: usize,
        mean_range: (f32, f32),
        std_range: (f32, f32),
    ) -> Hist2d {
        let mut counts = vec![0u64; bins * bins];
        let index = |v: f32, (lo, hi): (f32, f32)| -> usize {
            if hi <= lo {
                return 0;
            }
            let f = ((v - lo) / (hi - lo) * bins as f32).floor();
            (f as isize).clamp(0, bins as isize - 1) as usize
        };
        for &(mean, std) in points {
            counts[index(mean, mean_range) * bins + index(std, std_range)] += 1;
        }
        let max = counts.iter().copied().max().unwrap_or(0);
        let denom = (1.0 + max as f64).ln();
        let lognorm = counts
            .iter()
            .map(|&c| {
                if max == 0 {
                    0.0
                } else {
                    (1.0 + c as f64).ln() / denom
                }
            })
            .collect();
        Hist2d {
            bins,
            mean_range,
            std_range,
            counts,
            lognorm,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "mean_bin,std_bin,lognorm")?;
        for m in 0..self.bins {
            for s in 0..self.bins {
                writeln!(w, "{},{},{}", m, s, self.lognorm[m * self.bins + s])?;
            }
        }
        Ok(())
    }
}

/// Histograms of (a) every input patch and (b) the patches surviving the
/// final pruning block, over shared bin ranges. With `exclude_padding`
/// set, patches from appended floor frames are dropped from both views.
pub fn retention_histogram2d(
    corpus: &Corpus,
    bins: usize,
    exclude_padding: bool,
) -> Result<(Hist2d, Hist2d), AnalysisError> {
    let mut input_points: Vec<(f32, f32)> = Vec::new();
    let mut retained_points: Vec<(f32, f32)> = Vec::new();
    for sample in &corpus.samples {
        for p in 0..sample.stats.len() {
            if exclude_padding && sample.stats.is_padding(p) {
                continue;
            }
            input_points.push((sample.stats.means[p], sample.stats.stds[p]));
        }
        for p in sample.trace.final_survivors() {
            if exclude_padding && sample.stats.is_padding(p) {
                continue;
            }
            retained_points.push((sample.stats.means[p], sample.stats.stds[p]));
        }
    }
    if input_points.is_empty() {
        return Err(AnalysisError::NoData("no patches to histogram".into()));
    }
    let mean_range = range_of(input_points.iter().map(|p| p.0));
    let std_range = range_of(input_points.iter().map(|p| p.1));
    let input = Hist2d::build(&input_points, bins, mean_range, std_range);
    let retained = Hist2d::build(&retained_points, bins, mean_range, std_range);
    Ok((input, retained))
}

fn range_of(values: impl Iterator<Item = f32>) -> (f32, f32) {
    let mut lo = f32::INFINITY;
    let mut hi = f32::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Empirical CDF over retained tokens' patch means, with the cluster
/// boundaries attached for plotting.
#[derive(Debug, Clone)]
pub struct CdfCurve {
    /// (mean, cumulative fraction), sorted ascending; the last fraction
    /// is exactly 1.
    pub points: Vec<(f32, f64)>,
    pub boundaries: Vec<f32>,
}

impl CdfCurve {
    /// Fraction of retained tokens with mean <= x.
    pub fn at(&self, x: f32) -> f64 {
        match self.points.iter().rposition(|&(m, _)| m <= x) {
            Some(i) => self.points[i].1,
            None => 0.0,
        }
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "mean,cum_fraction")?;
        for (mean, frac) in &self.points {
            writeln!(w, "{mean},{frac}")?;
        }
        Ok(())
    }
}

pub fn retention_cdf(corpus: &Corpus, cm: &ClusterModel) -> Result<CdfCurve, AnalysisError> {
    let mut means: Vec<f32> = Vec::new();
    for sample in &corpus.samples {
        for p in sample.trace.final_survivors() {
            means.push(sample.stats.means[p]);
        }
    }
    if means.is_empty() {
        return Err(AnalysisError::NoData("no retained tokens".into()));
    }
    means.sort_by(f32::total_cmp);
    let n = means.len();
    let points = means
        .into_iter()
        .enumerate()
        .map(|(i, m)| (m, (i + 1) as f64 / n as f64))
        .collect();
    Ok(CdfCurve {
        points,
        boundaries: cm.boundaries.clone(),
    })
}
