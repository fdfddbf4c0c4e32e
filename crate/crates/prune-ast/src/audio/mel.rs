//! STFT and HTK mel filterbank.
//!
//! 25 ms Hann windows at a 10 ms hop, 512-point FFT, 128 triangular
//! filters on the HTK mel scale over 0-8000 Hz, natural log with a
//! 1e-10 floor. The spectrogram math runs in f64 and is stored as f32.

use serde::{Deserialize, Serialize};

use super::{AudioError, MelSpectrogram, Waveform, MEL_BINS};
use crate::tensor::Matrix;

pub const LOG_FLOOR_DEFAULT: f32 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontendConfig {
    pub sample_rate: u32,
    /// Window length in samples (25 ms at 16 kHz).
    pub win_length: usize,
    /// Hop in samples (10 ms at 16 kHz).
    pub hop_length: usize,
    /// FFT size; must be a power of two and >= win_length.
    pub n_fft: usize,
    pub n_mels: usize,
    pub fmin: f32,
    pub fmax: f32,
    /// Power floor applied before the log.
    pub log_floor: f32,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        FrontendConfig {
            sample_rate: 16_000,
            win_length: 400,
            hop_length: 160,
            n_fft: 512,
            n_mels: MEL_BINS,
            fmin: 0.0,
            fmax: 8_000.0,
            log_floor: LOG_FLOOR_DEFAULT,
        }
    }
}

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10.0f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filterbank over `n_fft/2 + 1` FFT bins, peak weight 1.
/// Returns `n_mels` rows of length `n_fft/2 + 1`.
pub fn mel_filterbank(cfg: &FrontendConfig) -> Vec<Vec<f64>> {
    let n_bins = cfg.n_fft / 2 + 1;
    let mel_lo = hz_to_mel(cfg.fmin as f64);
    let mel_hi = hz_to_mel(cfg.fmax as f64);
    let edges: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();
    let df = cfg.sample_rate as f64 / cfg.n_fft as f64;
    let mut bank = Vec::with_capacity(cfg.n_mels);
    for m in 0..cfg.n_mels {
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        let mut row = vec![0.0f64; n_bins];
        for (b, w) in row.iter_mut().enumerate() {
            let f = b as f64 * df;
            let rising = (f - left) / (center - left);
            let falling = (right - f) / (right - center);
            *w = rising.min(falling).max(0.0);
        }
        bank.push(row);
    }
    bank
}

/// Center frequency (Hz) of mel filter `m` under `cfg`.
pub fn filter_center_hz(cfg: &FrontendConfig, m: usize) -> f64 {
    let mel_lo = hz_to_mel(cfg.fmin as f64);
    let mel_hi = hz_to_mel(cfg.fmax as f64);
    mel_to_hz(mel_lo + (mel_hi - mel_lo) * (m + 1) as f64 / (cfg.n_mels + 1) as f64)
}

/// Periodic Hann window.
fn hann(win_length: usize) -> Vec<f64> {
    (0..win_length)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / win_length as f64).cos())
        .collect()
}

/// In-place iterative radix-2 FFT over interleaved (re, im) pairs.
fn fft_radix2(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two());
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2usize;
    while len <= n {
        let ang = -2.0 * std::f64::consts::PI / len as f64;
        let (w_re, w_im) = (ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let (mut cur_re, mut cur_im) = (1.0f64, 0.0f64);
            for k in 0..len / 2 {
                let (u_re, u_im) = (re[i + k], im[i + k]);
                let (v_re, v_im) = (
                    re[i + k + len / 2] * cur_re - im[i + k + len / 2] * cur_im,
                    re[i + k + len / 2] * cur_im + im[i + k + len / 2] * cur_re,
                );
                re[i + k] = u_re + v_re;
                im[i + k] = u_im + v_im;
                re[i + k + len / 2] = u_re - v_re;
                im[i + k + len / 2] = u_im - v_im;
                let next_re = cur_re * w_re - cur_im * w_im;
                cur_im = cur_re * w_im + cur_im * w_re;
                cur_re = next_re;
            }
            i += len;
        }
        len <<= 1;
    }
}

/// Converts a 16 kHz waveform to a log-mel spectrogram. Frames are
/// `1 + (len - win) / hop` with no center padding; resampling is out of
/// scope, so other rates are an error.
pub fn compute_log_mel(w: &Waveform, cfg: &FrontendConfig) -> Result<MelSpectrogram, AudioError> {
    if w.sample_rate != cfg.sample_rate {
        return Err(AudioError::WrongSampleRate {
            expected: cfg.sample_rate,
            got: w.sample_rate,
        });
    }
    if w.samples.len() < cfg.win_length {
        return Err(AudioError::TooShort {
            samples: w.samples.len(),
            window: cfg.win_length,
        });
    }
    let window = hann(cfg.win_length);
    let bank = mel_filterbank(cfg);
    let n_frames = 1 + (w.samples.len() - cfg.win_length) / cfg.hop_length;
    let n_bins = cfg.n_fft / 2 + 1;
    let floor = cfg.log_floor as f64;

    let mut values = Matrix::zeros(n_frames, cfg.n_mels);
    let mut re = vec![0.0f64; cfg.n_fft];
    let mut im = vec![0.0f64; cfg.n_fft];
    let mut power = vec![0.0f64; n_bins];
    for frame in 0..n_frames {
        let start = frame * cfg.hop_length;
        re[..cfg.win_length]
            .iter_mut()
            .zip(&w.samples[start..start + cfg.win_length])
            .zip(&window)
            .for_each(|((r, &s), &h)| *r = s as f64 * h);
        re[cfg.win_length..].fill(0.0);
        im.fill(0.0);
        fft_radix2(&mut re, &mut im);
        for b in 0..n_bins {
            power[b] = re[b] * re[b] + im[b] * im[b];
        }
        let out = values.row_mut(frame);
        for (m, filter) in bank.iter().enumerate() {
            let energy: f64 = filter.iter().zip(&power).map(|(&w_, &p)| w_ * p).sum();
            out[m] = energy.max(floor).ln() as f32;
        }
    }
    Ok(MelSpectrogram {
        values,
        floor: floor.ln() as f32,
        content_frames: n_frames,
        norm: None,
    })
}
