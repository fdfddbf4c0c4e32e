//! Loading per-input trace artifacts into an analyzable corpus.

use std::fs;
use std::io::BufReader;
use std::path::Path;

use super::{AnalysisError, StatFeature};
use crate::audio::PatchStats;
use crate::trace::{AttentionLog, PruneTrace};

/// One input's artifacts: patch statistics, per-block attention scores,
/// and the pruning trace.
#[derive(Debug, Clone)]
pub struct SampleRecord {
    pub id: String,
    pub stats: PatchStats,
    pub log: AttentionLog,
    pub trace: PruneTrace,
}

impl SampleRecord {
    pub fn feature_value(&self, feature: StatFeature, provenance: usize) -> f32 {
        match feature {
            StatFeature::Mean => self.stats.means[provenance],
            StatFeature::Std => self.stats.stds[provenance],
        }
    }
}

/// All samples of one evaluation run, sorted by id so every reduction
/// over the corpus is order-stable.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub samples: Vec<SampleRecord>,
}

impl Corpus {
    /// Loads every `<stem>.trace.json` in `dir` together with its
    /// `<stem>.attn.csv` and `<stem>.stats.csv`.
    pub fn from_dir(dir: &Path) -> Result<Corpus, AnalysisError> {
        let mut stems: Vec<String> = Vec::new();
        for entry in fs::read_dir(dir)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if let Some(stem) = name.strip_suffix(".trace.json") {
                stems.push(stem.to_string());
            }
        }
        if stems.is_empty() {
            return Err(AnalysisError::NoData(format!(
                "no *.trace.json files in {}",
                dir.display()
            )));
        }
        stems.sort();
        let mut samples = Vec::with_capacity(stems.len());
        for stem in stems {
            let trace_text = fs::read_to_string(dir.join(format!("{stem}.trace.json")))?;
            let trace = PruneTrace::from_json(&trace_text)?;
            let log_file = fs::File::open(dir.join(format!("{stem}.attn.csv")))?;
            let log = AttentionLog::read_csv(BufReader::new(log_file))?;
            let stats_file = fs::File::open(dir.join(format!("{stem}.stats.csv")))?;
            let stats =
                PatchStats::read_csv(BufReader::new(stats_file), trace.content_time_patches)?;
            samples.push(SampleRecord {
                id: stem,
                stats,
                log,
                trace,
            });
        }
        Ok(Corpus { samples })
    }

    /// Pooled feature values over every patch of every sample; the data
    /// the cluster model is fitted on.
    pub fn pooled_feature(&self, feature: StatFeature) -> Vec<f32> {
        let mut out = Vec::new();
        for s in &self.samples {
            match feature {
                StatFeature::Mean => out.extend_from_slice(&s.stats.means),
                StatFeature::Std => out.extend_from_slice(&s.stats.stds),
            }
        }
        out
    }
}
