//! Operator-facing command surface.
//!
//! Subcommands: `infer | trace | mac | analyze | ablate | schedule |
//! make-toy-weights`. Exit codes are a stable scripting contract:
//! 0 success, 1 usage/config error, 2 I/O error, 3 numerical failure.
//! `PRUNE_AST_LOG` controls stderr verbosity (`quiet`, `info`, `debug`).

mod commands;
mod config;

pub use commands::{
    cmd_ablate, cmd_analyze, cmd_infer, cmd_mac, cmd_make_toy_weights, cmd_schedule, cmd_trace,
    prepare_input, AnalyzeMode, PreparedInput,
};
pub use config::{parse_aggregation, parse_block_list, parse_metric, RunConfig};

use std::path::PathBuf;
use std::sync::OnceLock;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::analysis::{AnalysisError, StatFeature};
use crate::audio::AudioError;
use crate::model::ModelError;
use crate::pruning::{IntensityGroup, KeepRateSchedule, PruneError};
use crate::trace::TraceError;
use crate::weights::WeightError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("{0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<AudioError> for CliError {
    fn from(e: AudioError) -> Self {
        match e {
            AudioError::BadStd(_) | AudioError::BadTargetFrames(_) => {
                CliError::Config(vec![e.to_string()])
            }
            other => CliError::Io(other.to_string()),
        }
    }
}

impl From<WeightError> for CliError {
    fn from(e: WeightError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::NonFinite { .. } => CliError::Numerical(e.to_string()),
            ModelError::BadConfig(_) | ModelError::TooManyTokens { .. } => {
                CliError::Config(vec![e.to_string()])
            }
            ModelError::Prune(p) => p.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<PruneError> for CliError {
    fn from(e: PruneError) -> Self {
        match e {
            PruneError::BadKeepRate(_) | PruneError::BadLocation { .. } => {
                CliError::Config(vec![e.to_string()])
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Io(io) => CliError::Io(io.to_string()),
            AnalysisError::Trace(t) => CliError::Io(t.to_string()),
            AnalysisError::Audio(a) => a.into(),
            AnalysisError::NoData(msg) => CliError::Io(msg),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

fn log_level() -> u8 {
    static LEVEL: OnceLock<u8> = OnceLock::new();
    *LEVEL.get_or_init(|| match std::env::var("PRUNE_AST_LOG").as_deref() {
        Ok("quiet") | Ok("0") => 0,
        Ok("debug") | Ok("2") => 2,
        _ => 1,
    })
}

/// Per-input progress line, shown only under `PRUNE_AST_LOG=debug`.
pub(crate) fn vlog(msg: &str) {
    if log_level() >= 2 {
        eprintln!("[prune-ast] {msg}");
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "prune-ast",
    version,
    about = "Audio spectrogram transformer inference with TopK token pruning and analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON run configuration; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Weight file (TPWT container).
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Keep rate in (0, 1], applied at every pruning location.
    #[arg(long)]
    keep_rate: Option<f64>,
    /// Pruning metric: attn-mp, attn-cls, intensity or variation.
    #[arg(long)]
    metric: Option<String>,
    /// Comma-separated 1-based pruning block indices, e.g. 4,7,10.
    #[arg(long)]
    prune_blocks: Option<String>,
    /// Aggregation: cls or mean-pooling.
    #[arg(long)]
    aggregation: Option<String>,
    /// Seed for toy-weight generation.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for multi-input commands.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory for artifacts.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Pad/trim target in frames (multiple of 16).
    #[arg(long)]
    target_frames: Option<usize>,
    /// Spectrogram normalization mean.
    #[arg(long)]
    norm_mean: Option<f32>,
    /// Spectrogram normalization std.
    #[arg(long)]
    norm_std: Option<f32>,
}

impl CommonArgs {
    fn resolve(&self, default: RunConfig) -> Result<RunConfig, CliError> {
        let mut rc = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => default,
        };
        if let Some(w) = &self.weights {
            rc.weights = Some(w.clone());
        }
        if let Some(kr) = self.keep_rate {
            rc.prune.keep_rate = kr;
        }
        if let Some(m) = &self.metric {
            rc.prune.metric = parse_metric(m)?;
        }
        if let Some(blocks) = &self.prune_blocks {
            rc.prune.locations = parse_block_list(blocks)?;
        }
        if let Some(a) = &self.aggregation {
            rc.model.aggregation = parse_aggregation(a)?;
        }
        if let Some(seed) = self.seed {
            rc.seed = seed;
        }
        if let Some(jobs) = self.jobs {
            rc.jobs = jobs;
        }
        if let Some(dir) = &self.out_dir {
            rc.out_dir = dir.clone();
        }
        if let Some(t) = self.target_frames {
            rc.target_frames = Some(t);
        }
        if let Some(m) = self.norm_mean {
            rc.norm.mean = m;
        }
        if let Some(s) = self.norm_std {
            rc.norm.std = s;
        }
        Ok(rc)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify inputs and report logits plus MAC cost.
    Infer {
        #[command(flatten)]
        common: CommonArgs,
        /// WAV or spectrogram-CSV input files.
        inputs: Vec<PathBuf>,
    },
    /// Record attention logs, prune traces and patch stats per input.
    Trace {
        #[command(flatten)]
        common: CommonArgs,
        inputs: Vec<PathBuf>,
    },
    /// Print the analytical MAC table over token counts and keep rates.
    Mac {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated token counts.
        #[arg(long, default_value = "64,256,512")]
        n_tokens: String,
        /// Comma-separated keep rates.
        #[arg(long, default_value = "1.0,0.9,0.8,0.7,0.6,0.5,0.4")]
        keep_rates: String,
    },
    /// Compute reports from a directory of trace artifacts.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory holding *.attn.csv / *.trace.json / *.stats.csv.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
        /// tau, gamma, hist, cdf or cluster.
        #[arg(long)]
        mode: String,
        /// Patch statistic for clustering: mean or std.
        #[arg(long, default_value = "mean")]
        feature: String,
        /// Histogram bins per axis.
        #[arg(long, default_value_t = 40)]
        bins: usize,
        /// Drop patches from appended padding frames.
        #[arg(long, default_value_t = false)]
        exclude_padding: bool,
    },
    /// Discard an intensity group (L: clusters 1-2, H: clusters 4-5)
    /// after one block and report survivors and logits.
    Ablate {
        #[command(flatten)]
        common: CommonArgs,
        /// L or H.
        #[arg(long)]
        group: String,
        /// 1-based block index after which the group is discarded.
        #[arg(long)]
        block: usize,
        /// Optional clusters.json fitted elsewhere.
        #[arg(long)]
        clusters: Option<PathBuf>,
        inputs: Vec<PathBuf>,
    },
    /// Print the epoch -> keep-rate schedule table.
    Schedule {
        /// Final keep rate.
        #[arg(long)]
        target_kr: f64,
        /// Epoch the ramp starts at.
        #[arg(long)]
        start_epoch: usize,
        /// Ramp length in epochs.
        #[arg(long)]
        duration: usize,
        /// Last epoch to print.
        #[arg(long)]
        epochs: usize,
    },
    /// Generate deterministic toy weights for the configured model.
    MakeToyWeights {
        #[command(flatten)]
        common: CommonArgs,
        /// Destination weight file.
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Infer { common, inputs } => {
            let rc = common.resolve(RunConfig::default())?;
            cmd_infer(&rc, &inputs)
        }
        Command::Trace { common, inputs } => {
            let rc = common.resolve(RunConfig::default())?;
            cmd_trace(&rc, &inputs)
        }
        Command::Mac {
            common,
            n_tokens,
            keep_rates,
        } => {
            // The cost table defaults to ViT-B with a CLS token, the
            // configuration the published numbers correspond to.
            let default = RunConfig {
                model: crate::model::ModelConfig::vit_b(527, crate::model::Aggregation::Cls),
                prune: crate::pruning::PruneConfig {
                    metric: crate::pruning::Metric::AttnCls,
                    ..Default::default()
                },
                ..Default::default()
            };
            let to_file = common.out_dir.is_some();
            let rc = common.resolve(default)?;
            let counts = parse_usize_list(&n_tokens)?;
            let rates = parse_f64_list(&keep_rates)?;
            cmd_mac(&rc, &counts, &rates, to_file)
        }
        Command::Analyze {
            common,
            trace_dir,
            mode,
            feature,
            bins,
            exclude_padding,
        } => {
            let rc = common.resolve(RunConfig::default())?;
            let mode = AnalyzeMode::parse(&mode)?;
            let feature = match feature.as_str() {
                "mean" => StatFeature::Mean,
                "std" => StatFeature::Std,
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown feature `{other}` (expected mean or std)"
                    )))
                }
            };
            if bins == 0 {
                return Err(CliError::Usage("bins must be positive".into()));
            }
            let dir = trace_dir.unwrap_or_else(|| rc.out_dir.clone());
            cmd_analyze(&rc, &dir, mode, feature, bins, exclude_padding)
        }
        Command::Ablate {
            common,
            group,
            block,
            clusters,
            inputs,
        } => {
            let rc = common.resolve(RunConfig::default())?;
            let group = match group.as_str() {
                "L" | "l" => IntensityGroup::L,
                "H" | "h" => IntensityGroup::H,
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown group `{other}` (expected L or H)"
                    )))
                }
            };
            cmd_ablate(&rc, &inputs, group, block, clusters.as_deref())
        }
        Command::Schedule {
            target_kr,
            start_epoch,
            duration,
            epochs,
        } => cmd_schedule(
            &KeepRateSchedule {
                start_epoch,
                duration_epochs: duration,
                target_kr,
            },
            epochs,
        ),
        Command::MakeToyWeights { common, out } => {
            let rc = common.resolve(RunConfig::default())?;
            cmd_make_toy_weights(&rc, &out)
        }
    }
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("bad count `{t}` in `{s}`")))
        })
        .collect()
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad rate `{t}` in `{s}`")))
        })
        .collect()
}

/// Parses argv, runs the command, and maps errors to the exit-code
/// contract. Intended to be the entire body of `main`.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            // Help and version requests are successes.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
