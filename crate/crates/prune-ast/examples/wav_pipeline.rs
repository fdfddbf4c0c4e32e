//! The audio frontend end to end: synthesize a WAV file, decode it, and
//! walk it through log-mel extraction, padding, normalization, patching
//! and per-patch statistics.
//!
//! ```bash
//! cargo run --example wav_pipeline
//! ```

use prune_ast::audio::{
    compute_log_mel, default_target_frames, load_wav, patch_stats, patchify, write_wav_pcm16,
    FrontendConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // One second: a 1 kHz tone in the first half, silence after.
    let rate = 16_000u32;
    let samples: Vec<i16> = (0..rate as usize)
        .map(|i| {
            if i < rate as usize / 2 {
                let v = 0.4 * (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / rate as f64).sin();
                (v * 32767.0) as i16
            } else {
                0
            }
        })
        .collect();
    let dir = std::env::temp_dir().join("prune-ast-wav-pipeline");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("tone.wav");
    write_wav_pcm16(&path, &samples, rate, 1)?;
    println!("wrote {}", path.display());

    let wave = load_wav(&path)?;
    println!(
        "decoded {} samples at {} Hz, peak {:.3}",
        wave.samples.len(),
        wave.sample_rate,
        wave.samples.iter().fold(0.0f32, |a, &s| a.max(s.abs()))
    );

    let cfg = FrontendConfig::default();
    let mel = compute_log_mel(&wave, &cfg)?;
    println!("log-mel: {} frames x {} bins", mel.frames(), mel.bins());

    let target = default_target_frames(mel.frames());
    let padded = mel.pad_or_trim(target)?;
    let normalized = padded.normalize(-4.2677, 4.569)?;
    println!(
        "padded to {} frames ({} content), normalized",
        normalized.frames(),
        normalized.content_frames
    );

    let grid = patchify(&normalized)?;
    let stats = patch_stats(&grid);
    println!(
        "{} patches ({} x {}), {} pure-padding time rows",
        grid.len(),
        grid.n_time,
        grid.n_freq,
        grid.n_time - grid.content_time_patches
    );

    // The loudest and the quietest patch by mean intensity.
    let (mut hi, mut lo) = (0usize, 0usize);
    for p in 0..stats.len() {
        if stats.means[p] > stats.means[hi] {
            hi = p;
        }
        if stats.means[p] < stats.means[lo] {
            lo = p;
        }
    }
    println!(
        "brightest patch {} (t={}, f={}): mean {:.3}, std {:.3}",
        hi,
        grid.time_index(hi),
        grid.freq_index(hi),
        stats.means[hi],
        stats.stds[hi]
    );
    println!(
        "dimmest patch {} (t={}, f={}): mean {:.3} (padding: {})",
        lo,
        grid.time_index(lo),
        grid.freq_index(lo),
        stats.means[lo],
        grid.is_padding(lo)
    );
    Ok(())
}
