//! Run configuration: JSON file, flag overrides (flags win), whole-config
//! validation, and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::{FrontendConfig, NormParams, MEL_BINS, PATCH_SIDE};
use crate::model::{Aggregation, ModelConfig};
use crate::pruning::{Metric, PruneConfig};
use crate::trace::TRACE_SCHEMA_VERSION;
use crate::weights::FORMAT_VERSION;

use super::CliError;

/// Fully resolved run settings; serialized verbatim into the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub prune: PruneConfig,
    pub frontend: FrontendConfig,
    /// Spectrogram normalization constants. The defaults follow the
    /// AudioMAE convention (-4.2677 / 4.569); they are a config surface,
    /// not ground truth.
    pub norm: NormParams,
    /// Pad/trim target; default rounds each input up to the next multiple
    /// of 128 frames.
    pub target_frames: Option<usize>,
    pub weights: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Worker-thread bound. Never serialized: it cannot affect any
    /// output byte, and the manifest must be identical across --jobs.
    #[serde(skip_serializing)]
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::default(),
            prune: PruneConfig::default(),
            frontend: FrontendConfig::default(),
            norm: NormParams {
                mean: -4.2677,
                std: 4.569,
            },
            target_frames: None,
            weights: None,
            out_dir: PathBuf::from("out"),
            seed: 0,
            jobs: 1,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("config `{}`: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(vec![format!("config `{}`: {e}", path.display())]))
    }

    /// Collects every violated field rather than stopping at the first.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut violations = Vec::new();
        if let Err(e) = self.model.validate() {
            violations.push(format!("model: {e}"));
        }
        if let Err(e) = self.prune.validate(self.model.depth) {
            violations.push(format!("prune: {e}"));
        }
        match (self.prune.metric, self.model.aggregation) {
            (Metric::AttnCls, Aggregation::MeanPooling) => {
                violations.push("prune.metric: attn-cls requires cls aggregation".to_string())
            }
            (Metric::AttnMeanPooling, Aggregation::Cls) => violations
                .push("prune.metric: attn-mp requires mean-pooling aggregation".to_string()),
            _ => {}
        }
        let f = &self.frontend;
        if f.sample_rate == 0 {
            violations.push("frontend.sample_rate: must be positive".into());
        }
        if f.hop_length == 0 {
            violations.push("frontend.hop_length: must be positive".into());
        }
        if !f.n_fft.is_power_of_two() || f.n_fft < f.win_length {
            violations.push(format!(
                "frontend.n_fft: {} must be a power of two >= win_length {}",
                f.n_fft, f.win_length
            ));
        }
        if f.n_mels != MEL_BINS {
            violations.push(format!(
                "frontend.n_mels: {} unsupported, patching requires {MEL_BINS}",
                f.n_mels
            ));
        }
        if f.log_floor <= 0.0 || f.log_floor.is_nan() {
            violations.push("frontend.log_floor: must be positive".into());
        }
        if f.fmax <= f.fmin {
            violations.push(format!(
                "frontend.fmax: {} must exceed fmin {}",
                f.fmax, f.fmin
            ));
        }
        if self.norm.std <= 0.0 || self.norm.std.is_nan() {
            violations.push(format!("norm.std: {} must be positive", self.norm.std));
        }
        if !self.norm.mean.is_finite() {
            violations.push(format!("norm.mean: {} must be finite", self.norm.mean));
        }
        if let Some(t) = self.target_frames {
            if t == 0 || !t.is_multiple_of(PATCH_SIDE) {
                violations.push(format!(
                    "target_frames: {t} must be a positive multiple of {PATCH_SIDE}"
                ));
            }
        }
        if self.jobs == 0 {
            violations.push("jobs: must be at least 1".into());
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(violations))
        }
    }
}

pub fn parse_metric(s: &str) -> Result<Metric, CliError> {
    match s {
        "attn-mp" => Ok(Metric::AttnMeanPooling),
        "attn-cls" => Ok(Metric::AttnCls),
        "intensity" => Ok(Metric::Intensity),
        "variation" => Ok(Metric::Variation),
        other => Err(CliError::Usage(format!(
            "unknown metric `{other}` (expected attn-mp, attn-cls, intensity or variation)"
        ))),
    }
}

pub fn parse_aggregation(s: &str) -> Result<Aggregation, CliError> {
    match s {
        "cls" => Ok(Aggregation::Cls),
        "mean-pooling" => Ok(Aggregation::MeanPooling),
        other => Err(CliError::Usage(format!(
            "unknown aggregation `{other}` (expected cls or mean-pooling)"
        ))),
    }
}

pub fn parse_block_list(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("bad block index `{t}` in `{s}`")))
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub package_version: &'static str,
    pub weight_format_version: u32,
    pub trace_schema_version: u32,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub inputs: Vec<String>,
}

pub fn write_manifest(
    out_dir: &Path,
    command: &str,
    config: &RunConfig,
    inputs: &[PathBuf],
) -> Result<(), CliError> {
    let manifest = RunManifest {
        package_version: env!("CARGO_PKG_VERSION"),
        weight_format_version: FORMAT_VERSION,
        trace_schema_version: TRACE_SCHEMA_VERSION,
        command,
        config,
        inputs: inputs
            .iter()
            .map(|p| p.to_string_lossy().into_owned())
            .collect(),
    };
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Io(format!("manifest serialization: {e}")))?;
    fs::write(out_dir.join("run_manifest.json"), text)
        .map_err(|e| CliError::Io(format!("writing run_manifest.json: {e}")))?;
    Ok(())
}
