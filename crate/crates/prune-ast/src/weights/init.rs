//! Deterministic toy-weight generation.

use super::rng::Xoshiro256StarStar;
use super::{BlockWeights, ModelWeights};
use crate::model::ModelConfig;
use crate::tensor::Matrix;

const INIT_SIGMA: f64 = 0.02;

/// Truncated normal: standard normal scaled by sigma, resampled until the
/// unscaled draw lies within two standard deviations.
fn trunc_normal(rng: &mut Xoshiro256StarStar, sigma: f64) -> f32 {
    if sigma == 0.0 {
        return 0.0;
    }
    loop {
        let z = rng.next_standard_normal();
        if z.abs() <= 2.0 {
            return (z * sigma) as f32;
        }
    }
}

fn trunc_normal_matrix(rng: &mut Xoshiro256StarStar, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| trunc_normal(rng, INIT_SIGMA))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("sized to rows*cols")
}

fn trunc_normal_vec(rng: &mut Xoshiro256StarStar, n: usize) -> Vec<f32> {
    (0..n).map(|_| trunc_normal(rng, INIT_SIGMA)).collect()
}

/// Random toy weights for `cfg`: truncated-normal projections (sigma 0.02,
/// clipped at two sigma), zero biases, unit layer-norm gains. The same seed
/// always yields identical weight bytes.
pub fn random_init(cfg: &ModelConfig, seed: u64) -> ModelWeights {
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let d = cfg.dim;
    let mlp = cfg.dim * cfg.mlp_ratio;

    let patch_weight = trunc_normal_matrix(&mut rng, cfg.patch_dim, d);
    let patch_bias = vec![0.0; d];
    let pos_embed = trunc_normal_matrix(&mut rng, cfg.max_tokens, d);
    let (cls_token, cls_pos) = if cfg.uses_cls() {
        (
            Some(trunc_normal_vec(&mut rng, d)),
            Some(trunc_normal_vec(&mut rng, d)),
        )
    } else {
        (None, None)
    };
    let blocks = (0..cfg.depth)
        .map(|_| BlockWeights {
            ln1_gamma: vec![1.0; d],
            ln1_beta: vec![0.0; d],
            qkv_weight: trunc_normal_matrix(&mut rng, d, 3 * d),
            qkv_bias: vec![0.0; 3 * d],
            proj_weight: trunc_normal_matrix(&mut rng, d, d),
            proj_bias: vec![0.0; d],
            ln2_gamma: vec![1.0; d],
            ln2_beta: vec![0.0; d],
            fc1_weight: trunc_normal_matrix(&mut rng, d, mlp),
            fc1_bias: vec![0.0; mlp],
            fc2_weight: trunc_normal_matrix(&mut rng, mlp, d),
            fc2_bias: vec![0.0; d],
        })
        .collect();
    ModelWeights {
        patch_weight,
        patch_bias,
        pos_embed,
        cls_token,
        cls_pos,
        blocks,
        norm_gamma: vec![1.0; d],
        norm_beta: vec![0.0; d],
        head_weight: trunc_normal_matrix(&mut rng, d, cfg.num_classes),
        head_bias: vec![0.0; cfg.num_classes],
    }
}
