//! Minimal RIFF/WAVE PCM16 reader and a matching writer for tests and
//! examples.

use std::fs;
use std::path::Path;

use super::{AudioError, Waveform};

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

/// Reads a PCM 16-bit mono or stereo WAV file. Stereo is downmixed by
/// averaging; samples are scaled to [-1, 1] by 1/32768.
pub fn load_wav(path: &Path) -> Result<Waveform, AudioError> {
    let bytes = fs::read(path)?;
    parse_wav(&bytes)
}

pub fn parse_wav(bytes: &[u8]) -> Result<Waveform, AudioError> {
    if bytes.len() < 12 {
        return Err(AudioError::MalformedHeader(format!(
            "file of {} bytes is too short for a RIFF header",
            bytes.len()
        )));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(AudioError::MalformedHeader("missing RIFF tag".into()));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(AudioError::MalformedHeader("missing WAVE tag".into()));
    }

    let mut pos = 12usize;
    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        if body_start + size > bytes.len() {
            return Err(AudioError::MalformedHeader(format!(
                "chunk {:?} of {size} bytes overruns the file",
                String::from_utf8_lossy(id)
            )));
        }
        let body = &bytes[body_start..body_start + size];
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(AudioError::MalformedHeader(
                        "fmt chunk shorter than 16 bytes".into(),
                    ));
                }
                fmt = Some((
                    u16_at(body, 0),
                    u16_at(body, 2),
                    u32_at(body, 4),
                    u16_at(body, 14),
                ));
            }
            b"data" => data = Some(body),
            _ => {} // skip unknown chunks
        }
        // Chunks are word-aligned.
        pos = body_start + size + (size & 1);
    }

    let (format, channels, sample_rate, bits) =
        fmt.ok_or_else(|| AudioError::MalformedHeader("missing fmt chunk".into()))?;
    if format != 1 {
        return Err(AudioError::UnsupportedCodec(format!(
            "audio format {format} (only PCM = 1 is supported)"
        )));
    }
    if bits != 16 {
        return Err(AudioError::UnsupportedCodec(format!(
            "{bits}-bit samples (only 16-bit is supported)"
        )));
    }
    if channels != 1 && channels != 2 {
        return Err(AudioError::UnsupportedCodec(format!(
            "{channels} channels (only mono and stereo are supported)"
        )));
    }
    let data = data.ok_or_else(|| AudioError::MalformedHeader("missing data chunk".into()))?;
    if data.is_empty() {
        return Err(AudioError::EmptyPayload);
    }
    let frame_bytes = 2 * channels as usize;
    if data.len() % frame_bytes != 0 {
        return Err(AudioError::MalformedHeader(format!(
            "data chunk of {} bytes is not a whole number of {frame_bytes}-byte frames",
            data.len()
        )));
    }

    let scale = 1.0 / 32768.0f32;
    let n = data.len() / frame_bytes;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let at = i * frame_bytes;
        let left = i16::from_le_bytes([data[at], data[at + 1]]) as f32 * scale;
        let sample = if channels == 2 {
            let right = i16::from_le_bytes([data[at + 2], data[at + 3]]) as f32 * scale;
            (left + right) / 2.0
        } else {
            left
        };
        samples.push(sample);
    }
    Ok(Waveform {
        samples,
        sample_rate,
    })
}

/// Writes a PCM 16-bit WAV file, interleaved when `channels` is 2.
pub fn write_wav_pcm16(
    path: &Path,
    samples: &[i16],
    sample_rate: u32,
    channels: u16,
) -> Result<(), AudioError> {
    let data_len = samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * channels as u32 * 2).to_le_bytes());
    out.extend_from_slice(&(channels * 2).to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}
