//! Multi-head self-attention and the two token-importance scores read
//! off the attention matrix.

use super::{ModelError, TokenState};
use crate::tensor::{layer_norm, matmul, softmax_rows, Matrix};
use crate::weights::BlockWeights;

const LN_EPS: f32 = 1e-6;

/// Full attention tensor of one block, indexed `[head][query][key]`.
#[derive(Debug, Clone)]
pub struct AttentionTensor {
    heads: usize,
    n: usize,
    data: Vec<f32>,
}

impl AttentionTensor {
    pub fn heads(&self) -> usize {
        self.heads
    }

    /// Rows per head (token count including CLS when present).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn at(&self, head: usize, query: usize, key: usize) -> f32 {
        self.data[(head * self.n + query) * self.n + key]
    }

    pub fn from_parts(heads: usize, n: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), heads * n * n);
        AttentionTensor { heads, n, data }
    }
}

/// Attention of one block: the per-token importance scores plus the full
/// tensor for analyses that need it.
#[derive(Debug, Clone)]
pub struct AttentionRecord {
    /// 1-based block index.
    pub block_index: usize,
    pub has_cls: bool,
    /// One score per patch token (CLS excluded), aligned with provenance.
    pub scores: Vec<f32>,
    pub tensor: AttentionTensor,
}

/// Token-to-token importance: the mean attention each token receives,
/// averaged over heads and query rows. Valid only without a CLS token.
pub fn scores_mean_pooling(a: &AttentionTensor) -> Vec<f32> {
    let n = a.n;
    let norm = 1.0 / (a.heads * n) as f32;
    let mut scores = vec![0.0f32; n];
    for h in 0..a.heads {
        for q in 0..n {
            let row = &a.data[(h * n + q) * n..(h * n + q + 1) * n];
            for (s, v) in scores.iter_mut().zip(row) {
                *s += v;
            }
        }
    }
    for s in scores.iter_mut() {
        *s *= norm;
    }
    scores
}

/// CLS importance: the attention the CLS query (row 0) pays to each other
/// token, averaged over heads. The CLS column itself is excluded.
pub fn scores_cls(a: &AttentionTensor, has_cls: bool) -> Result<Vec<f32>, ModelError> {
    if !has_cls {
        return Err(ModelError::ClsAbsent);
    }
    let n = a.n;
    let norm = 1.0 / a.heads as f32;
    let mut scores = vec![0.0f32; n - 1];
    for h in 0..a.heads {
        let row = &a.data[(h * n) * n..(h * n) * n + n];
        for (s, v) in scores.iter_mut().zip(&row[1..]) {
            *s += v;
        }
    }
    for s in scores.iter_mut() {
        *s *= norm;
    }
    Ok(scores)
}

/// Pre-norm multi-head self-attention with residual: `x + proj(attn(ln(x)))`.
///
/// Returns the updated state and the block's attention record; the score
/// field follows the model's aggregation (mean pooling without CLS, CLS
/// row otherwise).
pub fn mhsa_forward(
    state: &TokenState,
    bw: &BlockWeights,
    heads: usize,
    block_index: usize,
) -> Result<(TokenState, AttentionRecord), ModelError> {
    let x = &state.activations;
    let n = x.rows();
    let dim = x.cols();
    let head_dim = dim / heads;
    let scale = 1.0 / (head_dim as f32).sqrt();

    let normed = layer_norm(x, &bw.ln1_gamma, &bw.ln1_beta, LN_EPS)?;
    let mut qkv = matmul(&normed, &bw.qkv_weight)?;
    qkv.add_row_vec(&bw.qkv_bias)?;

    let mut attn_data = vec![0.0f32; heads * n * n];
    let mut context = Matrix::zeros(n, dim);
    for h in 0..heads {
        let q = qkv.col_slice(h * head_dim, (h + 1) * head_dim);
        let k = qkv.col_slice(dim + h * head_dim, dim + (h + 1) * head_dim);
        let v = qkv.col_slice(2 * dim + h * head_dim, 2 * dim + (h + 1) * head_dim);
        let logits = matmul(&q, &k.transpose())?;
        let a = softmax_rows(&logits, scale);
        attn_data[h * n * n..(h + 1) * n * n].copy_from_slice(a.data());
        let ctx = matmul(&a, &v)?;
        for r in 0..n {
            context.row_mut(r)[h * head_dim..(h + 1) * head_dim].copy_from_slice(ctx.row(r));
        }
    }
    let mut out = matmul(&context, &bw.proj_weight)?;
    out.add_row_vec(&bw.proj_bias)?;
    out.add_assign(x)?;

    let tensor = AttentionTensor::from_parts(heads, n, attn_data);
    let scores = if state.has_cls {
        scores_cls(&tensor, true)?
    } else {
        scores_mean_pooling(&tensor)
    };
    let new_state = TokenState {
        activations: out,
        provenance: state.provenance.clone(),
        has_cls: state.has_cls,
    };
    Ok((
        new_state,
        AttentionRecord {
            block_index,
            has_cls: state.has_cls,
            scores,
            tensor,
        },
    ))
}
