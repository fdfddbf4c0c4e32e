//! Flat binary weight container.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic    4 bytes  "TPWT"
//! version  u32      currently 1
//! count    u32      number of entries
//! entry*   name_len: u32, name: UTF-8, rank: u32, dims: rank x u32,
//!          payload: product(dims) x f32
//! ```
//!
//! Entries are written in sorted name order so two saves of the same
//! model are byte-identical. The reader validates every length against
//! the remaining file size before allocating, and rejects trailing bytes,
//! so arbitrary corrupt input produces a structured error rather than a
//! crash or an oversized allocation.

use std::fs;
use std::path::Path;

use super::{ModelWeights, WeightError};
use crate::model::ModelConfig;

pub const MAGIC: [u8; 4] = *b"TPWT";
pub const FORMAT_VERSION: u32 = 1;

/// Sanity cap on tensor rank; every real tensor here is rank 1 or 2.
const MAX_RANK: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightEntry {
    pub name: String,
    pub dims: Vec<u32>,
    pub data: Vec<f32>,
}

pub fn write_weight_file(entries: &[WeightEntry]) -> Vec<u8> {
    let mut sorted: Vec<&WeightEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(sorted.len() as u32).to_le_bytes());
    for e in sorted {
        out.extend_from_slice(&(e.name.len() as u32).to_le_bytes());
        out.extend_from_slice(e.name.as_bytes());
        out.extend_from_slice(&(e.dims.len() as u32).to_le_bytes());
        for d in &e.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for v in &e.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, context: &str) -> Result<&'a [u8], WeightError> {
        if self.bytes.len() - self.pos < n {
            return Err(WeightError::Truncated {
                context: context.to_string(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, context: &str) -> Result<u32, WeightError> {
        let b = self.take(4, context)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

pub fn read_weight_file(bytes: &[u8]) -> Result<Vec<WeightEntry>, WeightError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(WeightError::BadMagic {
            got: [magic[0], magic[1], magic[2], magic[3]],
        });
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(WeightError::VersionMismatch {
            expected: FORMAT_VERSION,
            got: version,
        });
    }
    let count = r.u32("entry count")?;
    let mut entries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for i in 0..count {
        let ctx = format!("entry {i} name length");
        let name_len = r.u32(&ctx)? as usize;
        if name_len > r.remaining() {
            return Err(WeightError::Truncated { context: ctx });
        }
        let name_bytes = r.take(name_len, &format!("entry {i} name"))?;
        let name = std::str::from_utf8(name_bytes)
            .map_err(|_| WeightError::BadName)?
            .to_string();
        if !seen.insert(name.clone()) {
            return Err(WeightError::DuplicateName(name));
        }
        let rank = r.u32(&format!("`{name}` rank"))?;
        if rank == 0 || rank > MAX_RANK {
            return Err(WeightError::MalformedEntry {
                name,
                reason: format!("rank {rank} out of range 1..={MAX_RANK}"),
            });
        }
        let mut dims = Vec::with_capacity(rank as usize);
        let mut elems: u64 = 1;
        for d in 0..rank {
            let dim = r.u32(&format!("`{name}` dim {d}"))?;
            elems = elems.saturating_mul(dim as u64);
            dims.push(dim);
        }
        let payload_bytes = elems.saturating_mul(4);
        if payload_bytes > r.remaining() as u64 {
            return Err(WeightError::Truncated {
                context: format!("`{name}` payload ({payload_bytes} bytes)"),
            });
        }
        let raw = r.take(payload_bytes as usize, &format!("`{name}` payload"))?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        entries.push(WeightEntry { name, dims, data });
    }
    if r.remaining() != 0 {
        return Err(WeightError::TrailingBytes(r.remaining()));
    }
    Ok(entries)
}

/// Serializes model weights to `path`; entries in sorted name order.
pub fn save_weights(weights: &ModelWeights, path: &Path) -> Result<(), WeightError> {
    let bytes = write_weight_file(&weights.to_entries());
    fs::write(path, bytes)?;
    Ok(())
}

/// Loads and validates model weights against `cfg`-derived shapes.
pub fn load_weights(path: &Path, cfg: &ModelConfig) -> Result<ModelWeights, WeightError> {
    let bytes = fs::read(path)?;
    let entries = read_weight_file(&bytes)?;
    ModelWeights::from_entries(entries, cfg)
}
