//! Multi-head attention restricted to the nonzeros of a product adjacency.
//!
//! For head `h` and an edge `i ← j`:
//!
//! ```text
//! e_ij = LeakyReLU_0.2( a_h · [Q_i,h ‖ K_j,h] )
//! α_ij = softmax_j(e_ij)            over the in-neighbours j of i
//! out_i,h = Σ_j α_ij V_j,h
//! ```
//!
//! with `Q = X W_Q`, `K = X W_K`, `V = X W_V`. Heads occupy consecutive
//! column blocks and are concatenated. Rows without in-neighbours output
//! zeros.

use ndarray::{s, Array2, ArrayView2};

use super::layers::{check_width, init_matrix};
use super::params::{Parameterized, Tensor, TensorMut};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::sparse::SparseAdjacency;

pub const LEAKY_SLOPE: f64 = 0.2;

pub fn leaky_relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        LEAKY_SLOPE * z
    }
}

/// Projections and per-head scoring vectors for one edge type.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub w_q: Array2<f64>,
    pub w_k: Array2<f64>,
    pub w_v: Array2<f64>,
    /// `heads × 2·head_dim`; the first half scores the query, the second the key.
    pub attn: Array2<f64>,
}

impl AttentionParams {
    pub fn seeded(rng: &mut SplitMix64, d_in: usize, d_out: usize, heads: usize) -> Result<Self> {
        check_heads(d_out, heads)?;
        let head_dim = d_out / heads;
        Ok(Self {
            w_q: init_matrix(rng, d_in, d_out, d_in),
            w_k: init_matrix(rng, d_in, d_out, d_in),
            w_v: init_matrix(rng, d_in, d_out, d_in),
            attn: init_matrix(rng, heads, 2 * head_dim, 2 * head_dim),
        })
    }

    pub fn zeros(d_in: usize, d_out: usize, heads: usize) -> Result<Self> {
        check_heads(d_out, heads)?;
        Ok(Self {
            w_q: Array2::zeros((d_in, d_out)),
            w_k: Array2::zeros((d_in, d_out)),
            w_v: Array2::zeros((d_in, d_out)),
            attn: Array2::zeros((heads, 2 * (d_out / heads))),
        })
    }

    pub fn d_in(&self) -> usize {
        self.w_q.nrows()
    }

    pub fn d_out(&self) -> usize {
        self.w_q.ncols()
    }

    pub fn heads(&self) -> usize {
        self.attn.nrows()
    }

    pub fn head_dim(&self) -> usize {
        self.d_out() / self.heads()
    }
}

pub(crate) fn check_heads(d_out: usize, heads: usize) -> Result<()> {
    if heads == 0 || !d_out.is_multiple_of(heads) {
        return Err(Error::ShapeMismatch(format!(
            "width {d_out} is not divisible into {heads} heads"
        )));
    }
    Ok(())
}

impl Parameterized for AttentionParams {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        [
            ("w_q", &self.w_q),
            ("w_k", &self.w_k),
            ("w_v", &self.w_v),
            ("attn", &self.attn),
        ]
        .into_iter()
        .map(|(name, m)| Tensor {
            name: name.into(),
            shape: m.shape().to_vec(),
            data: m.as_slice().expect("standard layout"),
        })
        .collect()
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        [
            ("w_q", &mut self.w_q),
            ("w_k", &mut self.w_k),
            ("w_v", &mut self.w_v),
            ("attn", &mut self.attn),
        ]
        .into_iter()
        .map(|(name, m)| TensorMut {
            name: name.into(),
            shape: m.shape().to_vec(),
            data: m.as_slice_mut().expect("standard layout"),
        })
        .collect()
    }
}

/// Intermediate values of one attention pass.
#[derive(Debug, Clone)]
pub struct AttentionCache {
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// Pre-activation scores, indexed `edge * heads + head`.
    scores: Vec<f64>,
    /// Attention weights, same indexing as `scores`.
    pub weights: Vec<f64>,
}

pub fn sparse_attention(
    x: ArrayView2<'_, f64>,
    adj: &SparseAdjacency,
    params: &AttentionParams,
) -> Result<Array2<f64>> {
    Ok(sparse_attention_cached(x, adj, params)?.0)
}

pub fn sparse_attention_cached(
    x: ArrayView2<'_, f64>,
    adj: &SparseAdjacency,
    params: &AttentionParams,
) -> Result<(Array2<f64>, AttentionCache)> {
    check_width(x, params.d_in(), "attention")?;
    if adj.rows() != x.nrows() || adj.cols() != x.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "adjacency {}x{} for {} product nodes",
            adj.rows(),
            adj.cols(),
            x.nrows()
        )));
    }
    let heads = params.heads();
    let dh = params.head_dim();
    let q = x.dot(&params.w_q);
    let k = x.dot(&params.w_k);
    let v = x.dot(&params.w_v);

    let mut scores = vec![0.0; adj.nnz() * heads];
    let mut weights = vec![0.0; adj.nnz() * heads];
    let mut out = Array2::zeros((x.nrows(), params.d_out()));

    let mut edge = 0;
    for i in 0..adj.rows() {
        let neighbours: Vec<usize> = adj.row_indices(i).collect();
        let first = edge;
        edge += neighbours.len();
        if neighbours.is_empty() {
            continue;
        }
        for h in 0..heads {
            let cols = h * dh..(h + 1) * dh;
            let a_q = params.attn.slice(s![h, ..dh]);
            let a_k = params.attn.slice(s![h, dh..]);
            let query_term = a_q.dot(&q.slice(s![i, cols.clone()]));
            let mut max = f64::NEG_INFINITY;
            for (offset, &j) in neighbours.iter().enumerate() {
                let z = query_term + a_k.dot(&k.slice(s![j, cols.clone()]));
                scores[(first + offset) * heads + h] = z;
                max = max.max(leaky_relu(z));
            }
            let mut total = 0.0;
            for offset in 0..neighbours.len() {
                let idx = (first + offset) * heads + h;
                let w = (leaky_relu(scores[idx]) - max).exp();
                weights[idx] = w;
                total += w;
            }
            let mut out_head = out.slice_mut(s![i, cols.clone()]);
            for (offset, &j) in neighbours.iter().enumerate() {
                let idx = (first + offset) * heads + h;
                weights[idx] /= total;
                out_head.scaled_add(weights[idx], &v.slice(s![j, cols.clone()]));
            }
        }
    }
    Ok((
        out,
        AttentionCache {
            q,
            k,
            v,
            scores,
            weights,
        },
    ))
}

/// Backward pass of [`sparse_attention_cached`]: accumulates parameter
/// gradients into `grad` and returns `∂L/∂x`.
pub fn sparse_attention_backward(
    x: ArrayView2<'_, f64>,
    adj: &SparseAdjacency,
    params: &AttentionParams,
    cache: &AttentionCache,
    d_out: ArrayView2<'_, f64>,
    grad: &mut AttentionParams,
) -> Array2<f64> {
    let heads = params.heads();
    let dh = params.head_dim();
    let mut dq = Array2::<f64>::zeros(cache.q.raw_dim());
    let mut dk = Array2::<f64>::zeros(cache.k.raw_dim());
    let mut dv = Array2::<f64>::zeros(cache.v.raw_dim());

    let mut edge = 0;
    let mut d_weight = Vec::new();
    for i in 0..adj.rows() {
        let neighbours: Vec<usize> = adj.row_indices(i).collect();
        let first = edge;
        edge += neighbours.len();
        for h in 0..heads {
            let cols = h * dh..(h + 1) * dh;
            let g_out = d_out.slice(s![i, cols.clone()]);
            d_weight.clear();
            let mut weighted = 0.0;
            for (offset, &j) in neighbours.iter().enumerate() {
                let alpha = cache.weights[(first + offset) * heads + h];
                dv.slice_mut(s![j, cols.clone()]).scaled_add(alpha, &g_out);
                let dw = g_out.dot(&cache.v.slice(s![j, cols.clone()]));
                weighted += alpha * dw;
                d_weight.push(dw);
            }
            let a_q = params.attn.slice(s![h, ..dh]).to_owned();
            let a_k = params.attn.slice(s![h, dh..]).to_owned();
            for (offset, &j) in neighbours.iter().enumerate() {
                let idx = (first + offset) * heads + h;
                let alpha = cache.weights[idx];
                let de = alpha * (d_weight[offset] - weighted);
                let dz = if cache.scores[idx] > 0.0 { de } else { LEAKY_SLOPE * de };
                if dz == 0.0 {
                    continue;
                }
                let q_i = cache.q.slice(s![i, cols.clone()]);
                let k_j = cache.k.slice(s![j, cols.clone()]);
                grad.attn.slice_mut(s![h, ..dh]).scaled_add(dz, &q_i);
                grad.attn.slice_mut(s![h, dh..]).scaled_add(dz, &k_j);
                dq.slice_mut(s![i, cols.clone()]).scaled_add(dz, &a_q);
                dk.slice_mut(s![j, cols.clone()]).scaled_add(dz, &a_k);
            }
        }
    }

    grad.w_q += &x.t().dot(&dq);
    grad.w_k += &x.t().dot(&dk);
    grad.w_v += &x.t().dot(&dv);
    dq.dot(&params.w_q.t()) + dk.dot(&params.w_k.t()) + dv.dot(&params.w_v.t())
}
