//! Brute-force reference implementations.
//!
//! Each function here recomputes a quantity straight from its definition,
//! with dense matrices and exhaustive enumeration, so the sparse and
//! factorized routes elsewhere in the crate can be checked against it.

use ndarray::{s, Array2, ArrayView2};

use crate::graph::{dense_adjacency, Graph};
use crate::model::attention::{leaky_relu, AttentionParams};
use crate::model::layers::Mlp;
use crate::model::rgcn::RGCNParameters;

/// `(a ⊗ b)[i·r + j, i'·c + j'] = a[i,i'] · b[j,j']` by enumeration.
pub fn kron(a: ArrayView2<'_, u8>, b: ArrayView2<'_, u8>) -> Array2<u8> {
    let (p, q) = a.dim();
    let (r, c) = b.dim();
    let mut out = Array2::zeros((p * r, q * c));
    for i in 0..p {
        for ip in 0..q {
            for j in 0..r {
                for jp in 0..c {
                    out[[i * r + j, ip * c + jp]] = a[[i, ip]] * b[[j, jp]];
                }
            }
        }
    }
    out
}

pub fn identity(n: usize) -> Array2<u8> {
    Array2::from_shape_fn((n, n), |(i, j)| u8::from(i == j))
}

/// Dense product adjacency from a predicate on `((s, v), (s', v'))`.
fn product_by_rule(n: usize, rule: impl Fn(usize, usize, usize, usize) -> bool) -> Array2<u8> {
    Array2::from_shape_fn((n * n, n * n), |(r, c)| u8::from(rule(r / n, r % n, c / n, c % n)))
}

pub fn internal(g: &Graph) -> Array2<u8> {
    product_by_rule(g.n(), |s, v, s2, v2| s == s2 && g.has_edge(v, v2))
}

pub fn external(g: &Graph) -> Array2<u8> {
    product_by_rule(g.n(), |s, v, s2, v2| v == v2 && g.has_edge(s, s2))
}

pub fn point(n: usize) -> Array2<u8> {
    product_by_rule(n, |_, v, s2, v2| s2 == v && v2 == v)
}

/// `A ⊗ I + I ⊗ A`.
pub fn cartesian(g: &Graph) -> Array2<u8> {
    let a = dense_adjacency(g);
    let eye = identity(g.n());
    kron(a.view(), eye.view()) + kron(eye.view(), a.view())
}

/// `d`-dimensional hypercube: nodes adjacent iff their labels differ in one bit.
pub fn hypercube(d: u32) -> Array2<u8> {
    let size = 1usize << d;
    Array2::from_shape_fn((size, size), |(i, j)| u8::from((i ^ j).count_ones() == 1))
}

/// Attention with scores set to `-∞` off the mask, softmax over full rows.
pub fn dense_attention(x: ArrayView2<'_, f64>, mask: ArrayView2<'_, u8>, params: &AttentionParams) -> Array2<f64> {
    let heads = params.heads();
    let dh = params.head_dim();
    let q = x.dot(&params.w_q);
    let k = x.dot(&params.w_k);
    let v = x.dot(&params.w_v);
    let rows = x.nrows();
    let mut out = Array2::zeros((rows, params.d_out()));
    for h in 0..heads {
        let cols = s![.., h * dh..(h + 1) * dh];
        let (qh, kh, vh) = (q.slice(cols), k.slice(cols), v.slice(cols));
        let a_q = params.attn.slice(s![h, ..dh]);
        let a_k = params.attn.slice(s![h, dh..]);
        let mut scores = Array2::from_elem((rows, rows), f64::NEG_INFINITY);
        for i in 0..rows {
            for j in 0..rows {
                if mask[[i, j]] == 1 {
                    scores[[i, j]] = leaky_relu(a_q.dot(&qh.row(i)) + a_k.dot(&kh.row(j)));
                }
            }
        }
        for i in 0..rows {
            let row = scores.row(i);
            let max = row.fold(f64::NEG_INFINITY, |m, &z| m.max(z));
            if max == f64::NEG_INFINITY {
                continue;
            }
            let weights = row.mapv(|z| (z - max).exp());
            let weights = &weights / weights.sum();
            out.slice_mut(s![i, h * dh..(h + 1) * dh]).assign(&weights.dot(&vh));
        }
    }
    out
}

pub fn dense_point_update(x: ArrayView2<'_, f64>, point: ArrayView2<'_, u8>, eps: f64, mlp: &Mlp) -> Array2<f64> {
    let input = &x * (1.0 + eps) + point.mapv(f64::from).dot(&x);
    mlp.forward(input.view()).expect("widths match")
}

pub fn dense_rgcn(
    x: ArrayView2<'_, f64>,
    internal: ArrayView2<'_, u8>,
    external: ArrayView2<'_, u8>,
    point: ArrayView2<'_, u8>,
    params: &RGCNParameters,
) -> Array2<f64> {
    let dense = |a: ArrayView2<'_, u8>| a.mapv(f64::from);
    x.dot(&params.w_self)
        + dense(internal).dot(&x).dot(&params.w_internal)
        + dense(external).dot(&x).dot(&params.w_external)
        + dense(point).dot(&x).dot(&params.w_point)
}

/// Max absolute entrywise difference.
pub fn max_abs_diff(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
