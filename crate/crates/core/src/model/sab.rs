//! The subgraph attention block and the pipeline built around it.

use std::str::FromStr;

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};

use super::attention::{
    check_heads, sparse_attention_backward, sparse_attention_cached, AttentionCache, AttentionParams,
};
use super::layers::{check_width, init_matrix, Linear, Mlp, MlpCache};
use super::params::{prefixed, prefixed_mut, Parameterized, Tensor, TensorMut};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::pe::{NodeMarkIndex, PEMatrix};
use crate::product::ProductGraphBundle;
use crate::rng::SplitMix64;
use crate::sparse::SparseAdjacency;

pub const DEFAULT_HEADS: usize = 4;

/// Features of the `n²` product nodes, row `s·n + v` holding node `v` of
/// subgraph `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    n: usize,
    x: Array2<f64>,
}

impl ProductState {
    pub fn new(n: usize, x: Array2<f64>) -> Result<Self> {
        if x.nrows() != n * n {
            return Err(Error::ShapeMismatch(format!(
                "product state has {} rows, expected {}",
                x.nrows(),
                n * n
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("product state has non-finite entries".into()));
        }
        Ok(Self { n, x })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> usize {
        self.x.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn into_features(self) -> Array2<f64> {
        self.x
    }

    /// Row `(π(s), π(v))` of the result is row `(s, v)` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let lifted = crate::product::product_permutation(perm)?;
        let mut x = Array2::zeros(self.x.raw_dim());
        for (old, &new) in lifted.iter().enumerate() {
            x.row_mut(new).assign(&self.x.row(old));
        }
        Ok(Self { n: self.n, x })
    }
}

/// Parameters of one block: attention for the internal and external edge
/// types, the point-wise GIN branch, and the fusion MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct SABParameters {
    pub internal: AttentionParams,
    pub external: AttentionParams,
    pub eps: f64,
    /// `d_in → d_out → d_out`.
    pub mlp_point: Mlp,
    /// `3·d_out → d_out → d_out`.
    pub mlp_fuse: Mlp,
}

impl SABParameters {
    pub fn seeded(rng: &mut SplitMix64, d_in: usize, d_out: usize, heads: usize) -> Result<Self> {
        check_heads(d_out, heads)?;
        Ok(Self {
            internal: AttentionParams::seeded(rng, d_in, d_out, heads)?,
            external: AttentionParams::seeded(rng, d_in, d_out, heads)?,
            eps: 0.0,
            mlp_point: Mlp::seeded(rng, d_in, d_out, d_out),
            mlp_fuse: Mlp::seeded(rng, 3 * d_out, d_out, d_out),
        })
    }

    pub fn zeros(d_in: usize, d_out: usize, heads: usize) -> Result<Self> {
        Ok(Self {
            internal: AttentionParams::zeros(d_in, d_out, heads)?,
            external: AttentionParams::zeros(d_in, d_out, heads)?,
            eps: 0.0,
            mlp_point: Mlp::zeros(d_in, d_out, d_out),
            mlp_fuse: Mlp::zeros(3 * d_out, d_out, d_out),
        })
    }

    pub fn d_in(&self) -> usize {
        self.internal.d_in()
    }

    pub fn d_out(&self) -> usize {
        self.mlp_fuse.d_out()
    }

    pub fn heads(&self) -> usize {
        self.internal.heads()
    }
}

impl Parameterized for SABParameters {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        let mut out = prefixed("internal", self.internal.tensors());
        out.extend(prefixed("external", self.external.tensors()));
        out.push(Tensor {
            name: "eps".into(),
            shape: vec![],
            data: std::slice::from_ref(&self.eps),
        });
        out.extend(prefixed("mlp_point", self.mlp_point.tensors()));
        out.extend(prefixed("mlp_fuse", self.mlp_fuse.tensors()));
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = prefixed_mut("internal", self.internal.tensors_mut());
        out.extend(prefixed_mut("external", self.external.tensors_mut()));
        out.push(TensorMut {
            name: "eps".into(),
            shape: vec![],
            data: std::slice::from_mut(&mut self.eps),
        });
        out.extend(prefixed_mut("mlp_point", self.mlp_point.tensors_mut()));
        out.extend(prefixed_mut("mlp_fuse", self.mlp_fuse.tensors_mut()));
        out
    }
}

/// `MLP((1 + ε)·X + A_point·X)`.
pub fn point_update(x: ArrayView2<'_, f64>, point: &SparseAdjacency, eps: f64, mlp: &Mlp) -> Result<Array2<f64>> {
    Ok(point_update_cached(x, point, eps, mlp)?.0)
}

struct PointCache {
    input: Array2<f64>,
    mlp: MlpCache,
}

fn point_update_cached(
    x: ArrayView2<'_, f64>,
    point: &SparseAdjacency,
    eps: f64,
    mlp: &Mlp,
) -> Result<(Array2<f64>, PointCache)> {
    let mut input = point.matmul(x)?;
    input.scaled_add(1.0 + eps, &x);
    let (out, mlp_cache) = mlp.forward_cached(input.view())?;
    Ok((out, PointCache { input, mlp: mlp_cache }))
}

/// Everything [`sab_backward`] needs from a forward pass.
pub struct SabCache {
    internal: AttentionCache,
    external: AttentionCache,
    point: PointCache,
    fused_input: Array2<f64>,
    fuse: MlpCache,
}

impl SabCache {
    /// Attention weights of the internal and external branches, indexed
    /// `edge * heads + head` in adjacency entry order.
    pub fn attention_weights(&self) -> (&[f64], &[f64]) {
        (&self.internal.weights, &self.external.weights)
    }
}

/// `MLP_fuse( attn_internal(X) ‖ attn_external(X) ‖ point(X) )`.
pub fn sab_forward(x: &ProductState, bundle: &ProductGraphBundle, params: &SABParameters) -> Result<ProductState> {
    let (out, _) = sab_forward_cached(x, bundle, params)?;
    ProductState::new(x.n, out)
}

pub fn sab_forward_cached(
    x: &ProductState,
    bundle: &ProductGraphBundle,
    params: &SABParameters,
) -> Result<(Array2<f64>, SabCache)> {
    if bundle.n != x.n {
        return Err(Error::ShapeMismatch(format!(
            "state over n = {} with adjacencies over n = {}",
            x.n, bundle.n
        )));
    }
    sab_forward_rows(x.features(), &bundle.internal, &bundle.external, &bundle.point, params)
}

/// The block on an arbitrary row set, e.g. the compacted rows of sampled
/// subgraphs with correspondingly restricted adjacencies.
pub fn sab_forward_rows(
    x: ArrayView2<'_, f64>,
    internal: &SparseAdjacency,
    external: &SparseAdjacency,
    point: &SparseAdjacency,
    params: &SABParameters,
) -> Result<(Array2<f64>, SabCache)> {
    check_width(x, params.d_in(), "subgraph attention block")?;
    let (a_int, c_int) = sparse_attention_cached(x, internal, &params.internal)?;
    let (a_ext, c_ext) = sparse_attention_cached(x, external, &params.external)?;
    let (pt, c_pt) = point_update_cached(x, point, params.eps, &params.mlp_point)?;
    let fused_input = concatenate![Axis(1), a_int, a_ext, pt];
    let (out, c_fuse) = params.mlp_fuse.forward_cached(fused_input.view())?;
    Ok((
        out,
        SabCache {
            internal: c_int,
            external: c_ext,
            point: c_pt,
            fused_input,
            fuse: c_fuse,
        },
    ))
}

/// Accumulates into `grad` and returns `∂L/∂X`.
pub fn sab_backward(
    x: &ProductState,
    bundle: &ProductGraphBundle,
    params: &SABParameters,
    cache: &SabCache,
    d_out: ArrayView2<'_, f64>,
    grad: &mut SABParameters,
) -> Array2<f64> {
    let d = params.d_out();
    let xv = x.features();
    let d_fused = params
        .mlp_fuse
        .backward(cache.fused_input.view(), &cache.fuse, d_out, &mut grad.mlp_fuse);

    let mut dx = sparse_attention_backward(
        xv,
        &bundle.internal,
        &params.internal,
        &cache.internal,
        d_fused.slice(s![.., ..d]),
        &mut grad.internal,
    );
    dx += &sparse_attention_backward(
        xv,
        &bundle.external,
        &params.external,
        &cache.external,
        d_fused.slice(s![.., d..2 * d]),
        &mut grad.external,
    );

    let d_point_input = params.mlp_point.backward(
        cache.point.input.view(),
        &cache.point.mlp,
        d_fused.slice(s![.., 2 * d..]),
        &mut grad.mlp_point,
    );
    grad.eps += (&d_point_input * &xv).sum();
    dx.scaled_add(1.0 + params.eps, &d_point_input);
    dx += &bundle
        .point
        .transpose_matmul(d_point_input.view())
        .expect("shapes checked in forward");
    dx
}

/// Readout aggregation over product nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolVariant {
    /// `Σ_s Σ_v X(s, v)`
    SumSum,
    /// `Σ_s (1/n) Σ_v X(s, v)`
    MeanSum,
}

impl FromStr for PoolVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum_sum" => Ok(Self::SumSum),
            "mean_sum" => Ok(Self::MeanSum),
            other => Err(Error::InvalidInput(format!("unknown pooling variant {other:?}"))),
        }
    }
}

impl PoolVariant {
    fn scale(self, n: usize) -> f64 {
        match self {
            Self::SumSum => 1.0,
            Self::MeanSum => 1.0 / n as f64,
        }
    }
}

/// Aggregates the selected product rows (all rows when `rows` is `None`)
/// before the readout MLP.
pub fn pool_input(x: &ProductState, variant: PoolVariant, rows: Option<&[usize]>) -> Array1<f64> {
    let mut total = Array1::zeros(x.width());
    match rows {
        None => {
            for row in x.x.rows() {
                total += &row;
            }
        }
        Some(rows) => {
            for &r in rows {
                total += &x.x.row(r);
            }
        }
    }
    total * variant.scale(x.n)
}

/// `MLP_T` applied to the pooled aggregate.
pub fn pool(x: &ProductState, variant: PoolVariant, readout: &Mlp) -> Result<Array1<f64>> {
    let pooled = pool_input(x, variant, None).insert_axis(Axis(0));
    Ok(readout.forward(pooled.view())?.remove_axis(Axis(0)))
}

/// Maps `[feat(v) ‖ pe(s, v) ‖ mark_table[mark(s, v)]]` to the initial state
/// with a bias-free linear layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub linear: Linear,
    /// One embedding row per mark value, `n + 1` rows.
    pub mark_table: Array2<f64>,
}

impl Encoder {
    pub fn seeded(
        rng: &mut SplitMix64,
        feature_dim: usize,
        pe_dim: usize,
        vocabulary: usize,
        mark_dim: usize,
        d: usize,
    ) -> Self {
        let mark_table = init_matrix(rng, vocabulary, mark_dim, 1);
        let linear = Linear::seeded(rng, feature_dim + pe_dim + mark_dim, d, false);
        Self { linear, mark_table }
    }
}

impl Parameterized for Encoder {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        let mut out = prefixed("linear", self.linear.tensors());
        out.push(Tensor {
            name: "mark_table".into(),
            shape: self.mark_table.shape().to_vec(),
            data: self.mark_table.as_slice().unwrap(),
        });
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let shape = self.mark_table.shape().to_vec();
        let mut out = prefixed_mut("linear", self.linear.tensors_mut());
        out.push(TensorMut {
            name: "mark_table".into(),
            shape,
            data: self.mark_table.as_slice_mut().unwrap(),
        });
        out
    }
}

/// Raw encoder input rows `[feat(v) ‖ pe(s, v) ‖ mark_table[mark(s, v)]]`.
pub fn encoder_input(
    g: &Graph,
    pe: &PEMatrix,
    marks: &NodeMarkIndex,
    mark_table: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    let n = g.n();
    if pe.rows() != n * n {
        return Err(Error::ShapeMismatch(format!(
            "PE has {} rows, expected {}",
            pe.rows(),
            n * n
        )));
    }
    if marks.n() != n {
        return Err(Error::ShapeMismatch("node marks belong to a different graph".into()));
    }
    if mark_table.nrows() < marks.vocabulary() {
        return Err(Error::ShapeMismatch(format!(
            "mark table has {} rows, marks need {}",
            mark_table.nrows(),
            marks.vocabulary()
        )));
    }
    let feats = g.features_or_constant();
    let (df, dp, dm) = (feats.ncols(), pe.k(), mark_table.ncols());
    let mut input = Array2::zeros((n * n, df + dp + dm));
    for s in 0..n {
        for v in 0..n {
            let r = s * n + v;
            let mut row = input.row_mut(r);
            row.slice_mut(s![..df]).assign(&feats.row(v));
            row.slice_mut(s![df..df + dp]).assign(&pe.data.row(r));
            row.slice_mut(s![df + dp..]).assign(&mark_table.row(marks.get(s, v)));
        }
    }
    Ok(input)
}

pub fn init_state(g: &Graph, pe: &PEMatrix, marks: &NodeMarkIndex, encoder: &Encoder) -> Result<ProductState> {
    let input = encoder_input(g, pe, marks, encoder.mark_table.view())?;
    ProductState::new(g.n(), encoder.linear.forward(input.view())?)
}

/// A stack of blocks followed by pooling and the readout MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct SabStack {
    pub layers: Vec<SABParameters>,
    pub readout: Mlp,
}

impl SabStack {
    pub fn seeded(rng: &mut SplitMix64, d_in: usize, d: usize, heads: usize, layers: usize) -> Result<Self> {
        let mut blocks = Vec::with_capacity(layers);
        for l in 0..layers {
            blocks.push(SABParameters::seeded(rng, if l == 0 { d_in } else { d }, d, heads)?);
        }
        let width = if layers == 0 { d_in } else { d };
        Ok(Self {
            layers: blocks,
            readout: Mlp::seeded(rng, width, d, d),
        })
    }

    /// Block outputs, then the readout of the pooled selected rows.
    pub fn forward(
        &self,
        x0: &ProductState,
        bundle: &ProductGraphBundle,
        variant: PoolVariant,
        rows: Option<&[usize]>,
    ) -> Result<Array1<f64>> {
        let mut x = x0.clone();
        for layer in &self.layers {
            x = sab_forward(&x, bundle, layer)?;
        }
        let pooled = pool_input(&x, variant, rows).insert_axis(Axis(0));
        Ok(self.readout.forward(pooled.view())?.remove_axis(Axis(0)))
    }

    /// Scalar loss `Σ readout(pool(X_T))` and its gradient with respect to
    /// every parameter of the stack.
    pub fn loss_and_gradient(
        &self,
        x0: &ProductState,
        bundle: &ProductGraphBundle,
        variant: PoolVariant,
    ) -> Result<(f64, SabStack)> {
        let mut states = vec![x0.clone()];
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (out, cache) = sab_forward_cached(states.last().unwrap(), bundle, layer)?;
            states.push(ProductState::new(x0.n, out)?);
            caches.push(cache);
        }
        let last = states.last().unwrap();
        let pooled = pool_input(last, variant, None).insert_axis(Axis(0));
        let (y, readout_cache) = self.readout.forward_cached(pooled.view())?;
        let loss = y.sum();

        let mut grad = self.zeros_like();
        let dy = Array2::ones(y.raw_dim());
        let d_pooled = self
            .readout
            .backward(pooled.view(), &readout_cache, dy.view(), &mut grad.readout);
        let scale = variant.scale(x0.n);
        let mut dx = Array2::zeros(last.x.raw_dim());
        for mut row in dx.rows_mut() {
            row.scaled_add(scale, &d_pooled.row(0));
        }
        for (l, layer) in self.layers.iter().enumerate().rev() {
            dx = sab_backward(&states[l], bundle, layer, &caches[l], dx.view(), &mut grad.layers[l]);
        }
        Ok((loss, grad))
    }

    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        out.zero();
        out
    }
}

impl Parameterized for SabStack {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            out.extend(prefixed(&format!("layer{l}"), layer.tensors()));
        }
        out.extend(prefixed("readout", self.readout.tensors()));
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter_mut().enumerate() {
            out.extend(prefixed_mut(&format!("layer{l}"), layer.tensors_mut()));
        }
        out.extend(prefixed_mut("readout", self.readout.tensors_mut()));
        out
    }
}
