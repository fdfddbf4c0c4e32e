//! Shared helpers for the integration suites.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use prune_ast::audio::write_wav_pcm16;
use prune_ast::weights::Xoshiro256StarStar;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_prune-ast")
}

pub fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(cwd)
        .env("PRUNE_AST_LOG", "quiet")
        .output()
        .expect("spawn prune-ast")
}

pub fn assert_ok(out: &Output, context: &str) {
    assert!(
        out.status.success(),
        "{context} failed (code {:?}):\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
}

/// Sine tone at 16 kHz, i16 full scale times `amplitude`.
pub fn tone_samples(freq: f64, seconds: f64, amplitude: f64) -> Vec<i16> {
    let rate = 16_000.0;
    let n = (seconds * rate) as usize;
    (0..n)
        .map(|i| {
            let v = amplitude * (2.0 * std::f64::consts::PI * freq * i as f64 / rate).sin();
            (v * 32767.0) as i16
        })
        .collect()
}

/// Noise with a slow amplitude ramp, so patch intensities spread widely.
pub fn ramp_noise_samples(seconds: f64, seed: u64) -> Vec<i16> {
    let rate = 16_000.0;
    let n = (seconds * rate) as usize;
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let ramp = 0.05 + 0.95 * (i as f64 / n as f64);
            let v = ramp * rng.uniform(-0.8, 0.8);
            (v * 32767.0) as i16
        })
        .collect()
}

pub fn write_wav(dir: &Path, name: &str, samples: &[i16]) -> PathBuf {
    let path = dir.join(name);
    write_wav_pcm16(&path, samples, 16_000, 1).expect("write wav");
    path
}

/// Recursive file listing with contents, for byte-level directory
/// comparison.
pub fn dir_snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .expect("read dir")
        .map(|e| {
            let e = e.expect("dir entry");
            let name = e.file_name().to_string_lossy().into_owned();
            let bytes = std::fs::read(e.path()).expect("read file");
            (name, bytes)
        })
        .collect();
    files.sort_by(|a, b| a.0.cmp(&b.0));
    files
}
