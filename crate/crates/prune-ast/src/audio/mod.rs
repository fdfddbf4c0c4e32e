//! PCM audio to normalized log-Mel spectrograms, 16x16 patches, and
//! per-patch statistics.

mod mel;
mod wav;

pub use mel::{
    compute_log_mel, filter_center_hz, hz_to_mel, mel_filterbank, mel_to_hz, FrontendConfig,
};
pub use wav::{load_wav, write_wav_pcm16};

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::Matrix;

pub const PATCH_SIDE: usize = 16;
pub const MEL_BINS: usize = 128;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed WAV header: {0}")]
    MalformedHeader(String),
    #[error("unsupported codec: {0}")]
    UnsupportedCodec(String),
    #[error("WAV data chunk is empty")]
    EmptyPayload,
    #[error("expected sample rate {expected} Hz, got {got} Hz")]
    WrongSampleRate { expected: u32, got: u32 },
    #[error("waveform of {samples} samples is shorter than one {window}-sample window")]
    TooShort { samples: usize, window: usize },
    #[error("target frame count {0} is not a multiple of 16")]
    BadTargetFrames(usize),
    #[error("spectrogram of {frames}x{bins} cannot be cut into 16x16 patches")]
    NotPatchable { frames: usize, bins: usize },
    #[error("normalization std must be positive, got {0}")]
    BadStd(f32),
    #[error("spectrogram CSV line {line}: {reason}")]
    BadCsv { line: usize, reason: String },
}

/// PCM waveform scaled to [-1, 1].
#[derive(Debug, Clone)]
pub struct Waveform {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

/// Log-Mel spectrogram, frames x bins, with padding and normalization
/// metadata carried along.
#[derive(Debug, Clone)]
pub struct MelSpectrogram {
    pub values: Matrix,
    /// The value digital silence maps to under the current scaling.
    pub floor: f32,
    /// Frames of real content; frames at or beyond this index were
    /// appended by [`MelSpectrogram::pad_or_trim`].
    pub content_frames: usize,
    /// Normalization constants, once applied.
    pub norm: Option<NormParams>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NormParams {
    pub mean: f32,
    pub std: f32,
}

impl MelSpectrogram {
    pub fn frames(&self) -> usize {
        self.values.rows()
    }

    pub fn bins(&self) -> usize {
        self.values.cols()
    }

    /// Trims tail frames or appends frames filled with the floor value.
    /// Original content is never rewritten.
    pub fn pad_or_trim(&self, target_frames: usize) -> Result<MelSpectrogram, AudioError> {
        if target_frames == 0 || !target_frames.is_multiple_of(PATCH_SIDE) {
            return Err(AudioError::BadTargetFrames(target_frames));
        }
        let bins = self.bins();
        let mut data = Vec::with_capacity(target_frames * bins);
        let keep = self.frames().min(target_frames);
        data.extend_from_slice(&self.values.data()[..keep * bins]);
        data.resize(target_frames * bins, self.floor);
        Ok(MelSpectrogram {
            values: Matrix::from_vec(target_frames, bins, data).expect("sized"),
            floor: self.floor,
            content_frames: self.content_frames.min(target_frames),
            norm: self.norm,
        })
    }

    /// Applies `(x - mean) / (2 * std)` and records the constants used.
    pub fn normalize(&self, mean: f32, std: f32) -> Result<MelSpectrogram, AudioError> {
        if std <= 0.0 || std.is_nan() {
            return Err(AudioError::BadStd(std));
        }
        let mut values = self.values.clone();
        for v in values.data_mut() {
            *v = (*v - mean) / (2.0 * std);
        }
        Ok(MelSpectrogram {
            values,
            floor: (self.floor - mean) / (2.0 * std),
            content_frames: self.content_frames,
            norm: Some(NormParams { mean, std }),
        })
    }

    /// Imports a raw spectrogram from CSV (one frame per line, 128
    /// comma-separated values), bypassing audio decoding entirely.
    pub fn from_csv<R: BufRead>(reader: R) -> Result<MelSpectrogram, AudioError> {
        let mut data: Vec<f32> = Vec::new();
        let mut frames = 0usize;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Result<Vec<f32>, _> =
                line.split(',').map(|t| t.trim().parse::<f32>()).collect();
            let row = row.map_err(|e| AudioError::BadCsv {
                line: i + 1,
                reason: e.to_string(),
            })?;
            if row.len() != MEL_BINS {
                return Err(AudioError::BadCsv {
                    line: i + 1,
                    reason: format!("expected {MEL_BINS} values, got {}", row.len()),
                });
            }
            data.extend_from_slice(&row);
            frames += 1;
        }
        if frames == 0 {
            return Err(AudioError::BadCsv {
                line: 0,
                reason: "no frames".into(),
            });
        }
        Ok(MelSpectrogram {
            values: Matrix::from_vec(frames, MEL_BINS, data).expect("sized"),
            floor: mel::LOG_FLOOR_DEFAULT.ln(),
            content_frames: frames,
            norm: None,
        })
    }

    pub fn to_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for r in 0..self.frames() {
            let row: Vec<String> = self.values.row(r).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Non-overlapping 16x16 patches in time-major order; patch `i` covers
/// time row `i / n_freq` and frequency column `i % n_freq`.
#[derive(Debug, Clone)]
pub struct PatchGrid {
    pub n_time: usize,
    pub n_freq: usize,
    /// N x 256, each row one flattened patch (time-major within the patch).
    pub patches: Matrix,
    /// Time rows below this index contain real content; rows at or beyond
    /// it consist purely of appended padding frames.
    pub content_time_patches: usize,
}

impl PatchGrid {
    pub fn len(&self) -> usize {
        self.n_time * self.n_freq
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time_index(&self, provenance: usize) -> usize {
        provenance / self.n_freq
    }

    pub fn freq_index(&self, provenance: usize) -> usize {
        provenance % self.n_freq
    }

    pub fn is_padding(&self, provenance: usize) -> bool {
        self.time_index(provenance) >= self.content_time_patches
    }

    /// Inverse of [`patchify`]; reassembles the original frames x bins
    /// matrix exactly.
    pub fn reassemble(&self) -> Matrix {
        let frames = self.n_time * PATCH_SIDE;
        let bins = self.n_freq * PATCH_SIDE;
        let mut out = Matrix::zeros(frames, bins);
        for p in 0..self.len() {
            let t0 = self.time_index(p) * PATCH_SIDE;
            let f0 = self.freq_index(p) * PATCH_SIDE;
            let patch = self.patches.row(p);
            for a in 0..PATCH_SIDE {
                for b in 0..PATCH_SIDE {
                    out.set(t0 + a, f0 + b, patch[a * PATCH_SIDE + b]);
                }
            }
        }
        out
    }
}

/// Cuts a well-shaped spectrogram into 16x16 patches. Provenance index
/// `i` in `[0, N)` is assigned time-major.
pub fn patchify(m: &MelSpectrogram) -> Result<PatchGrid, AudioError> {
    let frames = m.frames();
    let bins = m.bins();
    if frames == 0 || !frames.is_multiple_of(PATCH_SIDE) || bins != MEL_BINS {
        return Err(AudioError::NotPatchable { frames, bins });
    }
    let n_time = frames / PATCH_SIDE;
    let n_freq = bins / PATCH_SIDE;
    let mut patches = Matrix::zeros(n_time * n_freq, PATCH_SIDE * PATCH_SIDE);
    for t in 0..n_time {
        for f in 0..n_freq {
            let p = t * n_freq + f;
            let row = patches.row_mut(p);
            for a in 0..PATCH_SIDE {
                let src = m.values.row(t * PATCH_SIDE + a);
                for b in 0..PATCH_SIDE {
                    row[a * PATCH_SIDE + b] = src[f * PATCH_SIDE + b];
                }
            }
        }
    }
    Ok(PatchGrid {
        n_time,
        n_freq,
        patches,
        content_time_patches: m.content_frames.div_ceil(PATCH_SIDE).min(n_time),
    })
}

/// Per-patch intensity (mean) and variation (population std).
#[derive(Debug, Clone)]
pub struct PatchStats {
    pub means: Vec<f32>,
    pub stds: Vec<f32>,
    pub n_time: usize,
    pub n_freq: usize,
    pub content_time_patches: usize,
}

impl PatchStats {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn is_padding(&self, provenance: usize) -> bool {
        provenance / self.n_freq >= self.content_time_patches
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "patch_index,time_idx,freq_idx,mean,std")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                i,
                i / self.n_freq,
                i % self.n_freq,
                self.means[i],
                self.stds[i]
            )?;
        }
        Ok(())
    }

    /// Rows may arrive in any order; each lands at its `patch_index`.
    pub fn read_csv<R: BufRead>(
        reader: R,
        content_time_patches: usize,
    ) -> Result<PatchStats, AudioError> {
        let mut rows: Vec<Option<(f32, f32)>> = Vec::new();
        let mut max_time = 0usize;
        let mut max_freq = 0usize;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if i == 0 {
                continue; // header
            }
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 5 {
                return Err(AudioError::BadCsv {
                    line: i + 1,
                    reason: format!("expected 5 columns, got {}", parts.len()),
                });
            }
            let bad = |what: &str| AudioError::BadCsv {
                line: i + 1,
                reason: format!("bad {what}"),
            };
            let index: usize = parts[0].trim().parse().map_err(|_| bad("patch index"))?;
            let t: usize = parts[1].trim().parse().map_err(|_| bad("time index"))?;
            let f: usize = parts[2].trim().parse().map_err(|_| bad("freq index"))?;
            let mean: f32 = parts[3].trim().parse().map_err(|_| bad("mean"))?;
            let std: f32 = parts[4].trim().parse().map_err(|_| bad("std"))?;
            max_time = max_time.max(t + 1);
            max_freq = max_freq.max(f + 1);
            if index >= rows.len() {
                rows.resize(index + 1, None);
            }
            if rows[index].replace((mean, std)).is_some() {
                return Err(AudioError::BadCsv {
                    line: i + 1,
                    reason: format!("duplicate patch index {index}"),
                });
            }
        }
        let mut means = Vec::with_capacity(rows.len());
        let mut stds = Vec::with_capacity(rows.len());
        for (index, row) in rows.into_iter().enumerate() {
            let (mean, std) = row.ok_or_else(|| AudioError::BadCsv {
                line: 0,
                reason: format!("missing patch index {index}"),
            })?;
            means.push(mean);
            stds.push(std);
        }
        Ok(PatchStats {
            means,
            stds,
            n_time: max_time,
            n_freq: max_freq,
            content_time_patches,
        })
    }
}

/// Arithmetic mean and population standard deviation of each patch.
pub fn patch_stats(grid: &PatchGrid) -> PatchStats {
    let n = grid.len();
    let mut means = Vec::with_capacity(n);
    let mut stds = Vec::with_capacity(n);
    let len = (PATCH_SIDE * PATCH_SIDE) as f64;
    for p in 0..n {
        let row = grid.patches.row(p);
        let mean = row.iter().map(|&v| v as f64).sum::<f64>() / len;
        let var = row
            .iter()
            .map(|&v| (v as f64 - mean) * (v as f64 - mean))
            .sum::<f64>()
            / len;
        means.push(mean as f32);
        stds.push(var.sqrt() as f32);
    }
    PatchStats {
        means,
        stds,
        n_time: grid.n_time,
        n_freq: grid.n_freq,
        content_time_patches: grid.content_time_patches,
    }
}

/// Default padding target: the next multiple of 128 frames. Under the
/// default frontend (10 ms hop) this maps 1 s / 5 s / 10 s of audio to
/// 128 / 512 / 1024 frames, i.e. 64 / 256 / 512 tokens.
pub fn default_target_frames(frames: usize) -> usize {
    frames.div_ceil(128).max(1) * 128
}
