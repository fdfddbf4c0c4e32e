//! Model weight tensors, their binary container, and deterministic
//! toy-weight generation.

mod init;
mod io;
mod rng;

pub use init::random_init;
pub use io::{
    load_weights, read_weight_file, save_weights, write_weight_file, WeightEntry, FORMAT_VERSION,
    MAGIC,
};
pub use rng::{SplitMix64, Xoshiro256StarStar};

use thiserror::Error;

use crate::model::ModelConfig;
use crate::tensor::Matrix;

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic: expected \"TPWT\", got {got:?}")]
    BadMagic { got: [u8; 4] },
    #[error("unsupported format version {got} (expected {expected})")]
    VersionMismatch { expected: u32, got: u32 },
    #[error("file truncated while reading {context}")]
    Truncated { context: String },
    #[error("entry `{name}`: shape mismatch, expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<u32>,
        got: Vec<u32>,
    },
    #[error("duplicate entry name `{0}`")]
    DuplicateName(String),
    #[error("missing tensor `{0}`")]
    MissingTensor(String),
    #[error("entry `{name}`: {reason}")]
    MalformedEntry { name: String, reason: String },
    #[error("trailing bytes after last entry ({0} bytes)")]
    TrailingBytes(usize),
    #[error("entry name is not valid UTF-8")]
    BadName,
}

/// Per-block transformer weights.
#[derive(Debug, Clone)]
pub struct BlockWeights {
    pub ln1_gamma: Vec<f32>,
    pub ln1_beta: Vec<f32>,
    /// dim x 3*dim, columns ordered Q then K then V.
    pub qkv_weight: Matrix,
    pub qkv_bias: Vec<f32>,
    pub proj_weight: Matrix,
    pub proj_bias: Vec<f32>,
    pub ln2_gamma: Vec<f32>,
    pub ln2_beta: Vec<f32>,
    pub fc1_weight: Matrix,
    pub fc1_bias: Vec<f32>,
    pub fc2_weight: Matrix,
    pub fc2_bias: Vec<f32>,
}

/// Full model parameter set.
#[derive(Debug, Clone)]
pub struct ModelWeights {
    /// patch_dim x dim linear projection of flattened patches.
    pub patch_weight: Matrix,
    pub patch_bias: Vec<f32>,
    /// max_tokens x dim, indexed by patch provenance.
    pub pos_embed: Matrix,
    /// Present only for CLS aggregation.
    pub cls_token: Option<Vec<f32>>,
    pub cls_pos: Option<Vec<f32>>,
    pub blocks: Vec<BlockWeights>,
    pub norm_gamma: Vec<f32>,
    pub norm_beta: Vec<f32>,
    pub head_weight: Matrix,
    pub head_bias: Vec<f32>,
}

/// Expected tensor names and shapes for a config, in sorted name order.
/// This is the census the container is validated against.
pub fn tensor_census(cfg: &ModelConfig) -> Vec<(String, Vec<u32>)> {
    let d = cfg.dim as u32;
    let mlp = (cfg.dim * cfg.mlp_ratio) as u32;
    let mut entries: Vec<(String, Vec<u32>)> = Vec::new();
    entries.push(("patch_embed.weight".into(), vec![cfg.patch_dim as u32, d]));
    entries.push(("patch_embed.bias".into(), vec![d]));
    entries.push(("pos_embed".into(), vec![cfg.max_tokens as u32, d]));
    if cfg.uses_cls() {
        entries.push(("cls.token".into(), vec![d]));
        entries.push(("cls.pos_embed".into(), vec![d]));
    }
    for b in 0..cfg.depth {
        let p = format!("blocks.{b}");
        entries.push((format!("{p}.ln1.gamma"), vec![d]));
        entries.push((format!("{p}.ln1.beta"), vec![d]));
        entries.push((format!("{p}.attn.qkv.weight"), vec![d, 3 * d]));
        entries.push((format!("{p}.attn.qkv.bias"), vec![3 * d]));
        entries.push((format!("{p}.attn.proj.weight"), vec![d, d]));
        entries.push((format!("{p}.attn.proj.bias"), vec![d]));
        entries.push((format!("{p}.ln2.gamma"), vec![d]));
        entries.push((format!("{p}.ln2.beta"), vec![d]));
        entries.push((format!("{p}.mlp.fc1.weight"), vec![d, mlp]));
        entries.push((format!("{p}.mlp.fc1.bias"), vec![mlp]));
        entries.push((format!("{p}.mlp.fc2.weight"), vec![mlp, d]));
        entries.push((format!("{p}.mlp.fc2.bias"), vec![d]));
    }
    entries.push(("norm.gamma".into(), vec![d]));
    entries.push(("norm.beta".into(), vec![d]));
    entries.push(("head.weight".into(), vec![d, cfg.num_classes as u32]));
    entries.push(("head.bias".into(), vec![cfg.num_classes as u32]));
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    entries
}

impl ModelWeights {
    /// Flattens to named entries in sorted name order.
    pub fn to_entries(&self) -> Vec<WeightEntry> {
        let mat = |name: &str, m: &Matrix| WeightEntry {
            name: name.to_string(),
            dims: vec![m.rows() as u32, m.cols() as u32],
            data: m.data().to_vec(),
        };
        let vec1 = |name: &str, v: &[f32]| WeightEntry {
            name: name.to_string(),
            dims: vec![v.len() as u32],
            data: v.to_vec(),
        };
        let mut out = Vec::new();
        out.push(mat("patch_embed.weight", &self.patch_weight));
        out.push(vec1("patch_embed.bias", &self.patch_bias));
        out.push(mat("pos_embed", &self.pos_embed));
        if let Some(cls) = &self.cls_token {
            out.push(vec1("cls.token", cls));
        }
        if let Some(pos) = &self.cls_pos {
            out.push(vec1("cls.pos_embed", pos));
        }
        for (b, bw) in self.blocks.iter().enumerate() {
            let p = format!("blocks.{b}");
            out.push(vec1(&format!("{p}.ln1.gamma"), &bw.ln1_gamma));
            out.push(vec1(&format!("{p}.ln1.beta"), &bw.ln1_beta));
            out.push(mat(&format!("{p}.attn.qkv.weight"), &bw.qkv_weight));
            out.push(vec1(&format!("{p}.attn.qkv.bias"), &bw.qkv_bias));
            out.push(mat(&format!("{p}.attn.proj.weight"), &bw.proj_weight));
            out.push(vec1(&format!("{p}.attn.proj.bias"), &bw.proj_bias));
            out.push(vec1(&format!("{p}.ln2.gamma"), &bw.ln2_gamma));
            out.push(vec1(&format!("{p}.ln2.beta"), &bw.ln2_beta));
            out.push(mat(&format!("{p}.mlp.fc1.weight"), &bw.fc1_weight));
            out.push(vec1(&format!("{p}.mlp.fc1.bias"), &bw.fc1_bias));
            out.push(mat(&format!("{p}.mlp.fc2.weight"), &bw.fc2_weight));
            out.push(vec1(&format!("{p}.mlp.fc2.bias"), &bw.fc2_bias));
        }
        out.push(vec1("norm.gamma", &self.norm_gamma));
        out.push(vec1("norm.beta", &self.norm_beta));
        out.push(mat("head.weight", &self.head_weight));
        out.push(vec1("head.bias", &self.head_bias));
        out.sort_by(|a, b| a.name.cmp(&b.name));
        out
    }

    /// Rebuilds the structured weights from named entries, validating every
    /// shape against the config-derived census.
    pub fn from_entries(entries: Vec<WeightEntry>, cfg: &ModelConfig) -> Result<Self, WeightError> {
        use std::collections::HashMap;
        let census = tensor_census(cfg);
        let mut by_name: HashMap<String, WeightEntry> = HashMap::new();
        for e in entries {
            if by_name.insert(e.name.clone(), e).is_some() {
                // load_weights already rejects duplicates; double safety here
                return Err(WeightError::DuplicateName("duplicate entry".into()));
            }
        }
        for (name, dims) in &census {
            match by_name.get(name) {
                None => return Err(WeightError::MissingTensor(name.clone())),
                Some(e) if &e.dims != dims => {
                    return Err(WeightError::ShapeMismatch {
                        name: name.clone(),
                        expected: dims.clone(),
                        got: e.dims.clone(),
                    })
                }
                Some(_) => {}
            }
        }
        if by_name.len() != census.len() {
            let known: std::collections::HashSet<&String> = census.iter().map(|(n, _)| n).collect();
            let extra = by_name
                .keys()
                .find(|k| !known.contains(k))
                .cloned()
                .unwrap_or_default();
            return Err(WeightError::MalformedEntry {
                name: extra,
                reason: "unexpected tensor for this config".into(),
            });
        }

        let mut take_mat = |name: &str| -> Matrix {
            let e = by_name.remove(name).expect("validated above");
            Matrix::from_vec(e.dims[0] as usize, e.dims[1] as usize, e.data)
                .expect("validated above")
        };
        let patch_weight = take_mat("patch_embed.weight");
        let pos_embed = take_mat("pos_embed");
        let head_weight = take_mat("head.weight");
        let mut block_mats = Vec::new();
        for b in 0..cfg.depth {
            let p = format!("blocks.{b}");
            block_mats.push((
                take_mat(&format!("{p}.attn.qkv.weight")),
                take_mat(&format!("{p}.attn.proj.weight")),
                take_mat(&format!("{p}.mlp.fc1.weight")),
                take_mat(&format!("{p}.mlp.fc2.weight")),
            ));
        }
        let mut take_vec =
            |name: &str| -> Vec<f32> { by_name.remove(name).expect("validated above").data };
        let blocks = block_mats
            .into_iter()
            .enumerate()
            .map(|(b, (qkv_weight, proj_weight, fc1_weight, fc2_weight))| {
                let p = format!("blocks.{b}");
                BlockWeights {
                    ln1_gamma: take_vec(&format!("{p}.ln1.gamma")),
                    ln1_beta: take_vec(&format!("{p}.ln1.beta")),
                    qkv_weight,
                    qkv_bias: take_vec(&format!("{p}.attn.qkv.bias")),
                    proj_weight,
                    proj_bias: take_vec(&format!("{p}.attn.proj.bias")),
                    ln2_gamma: take_vec(&format!("{p}.ln2.gamma")),
                    ln2_beta: take_vec(&format!("{p}.ln2.beta")),
                    fc1_weight,
                    fc1_bias: take_vec(&format!("{p}.mlp.fc1.bias")),
                    fc2_weight,
                    fc2_bias: take_vec(&format!("{p}.mlp.fc2.bias")),
                }
            })
            .collect();
        Ok(ModelWeights {
            patch_weight,
            patch_bias: take_vec("patch_embed.bias"),
            pos_embed,
            cls_token: cfg.uses_cls().then(|| take_vec("cls.token")),
            cls_pos: cfg.uses_cls().then(|| take_vec("cls.pos_embed")),
            blocks,
            norm_gamma: take_vec("norm.gamma"),
            norm_beta: take_vec("norm.beta"),
            head_weight,
            head_bias: take_vec("head.bias"),
        })
    }
}
