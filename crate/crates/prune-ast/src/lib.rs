//! Audio spectrogram transformer inference with in-network TopK token
//! pruning, an analytical MAC cost model, and the statistical machinery
//! to analyze which spectrogram patches the model keeps.
//!
//! The library is the primary interface; each major capability has a
//! runnable example:
//!
//! ```bash
//! cargo run --example wav_pipeline       # WAV -> log-mel -> patches -> stats
//! cargo run --example toy_inference      # forward pass with TopK pruning
//! cargo run --example mac_table          # analytical MAC cost table
//! cargo run --example trace_and_analyze  # tau / gamma / histogram / CDF
//! cargo run --example group_discard      # L/H intensity-group ablation
//! cargo run --example keep_rate_schedule # epoch -> keep-rate ramp
//! cargo run --example weights_roundtrip  # TPWT weight container
//! ```
//!
//! A thin `prune-ast` binary exposes the same functionality as
//! subcommands (`infer | trace | mac | analyze | ablate | schedule |
//! make-toy-weights`) for scripted runs; see [`cli`].
//!
//! # Layout
//!
//! - [`tensor`]: dense f32 matrices and the kernels everything builds on
//!   (matmul, row softmax, layer norm, exact GELU, TopK selection).
//! - [`audio`]: WAV decoding, STFT + HTK mel filterbank, padding and
//!   normalization, 16x16 patching with provenance, per-patch stats.
//! - [`model`]: the ViT-style forward pass with per-block attention
//!   records, CLS or mean-pooling aggregation, and pruning hooks between
//!   attention and MLP.
//! - [`pruning`]: importance scoring (attention or patch statistics),
//!   TopK selection with deterministic tie-breaks, keep-rate schedules,
//!   and the intensity-group discard.
//! - [`mac`]: multiply-accumulate cost accounting of the pruned network.
//! - [`analysis`]: 1-D k-means, clustered Kendall tau, retained/pruned
//!   attention ratios, retention histograms and CDFs.
//! - [`weights`]: the TPWT binary container and deterministic toy-weight
//!   generation (xoshiro256**, truncated-normal init).
//! - [`trace`]: the attention-log CSV and prune-trace JSON formats that
//!   connect inference to analysis.

pub mod analysis;
pub mod audio;
pub mod cli;
pub mod mac;
pub mod model;
pub mod pruning;
pub mod tensor;
pub mod trace;
pub mod weights;
