//! Brute-force references shared by the integration tests. Everything here
//! is written from the definitions with plain loops and dense matrices.
#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView2};
use subgraph_product::graph::Graph;
use subgraph_product::model::{AttentionParams, Linear, Mlp};

pub fn adjacency(g: &Graph) -> Array2<u8> {
    let mut a = Array2::zeros((g.n(), g.n()));
    for (u, v) in g.edges() {
        a[[u, v]] = 1;
        a[[v, u]] = 1;
    }
    a
}

pub fn eye(n: usize) -> Array2<u8> {
    Array2::from_shape_fn((n, n), |(i, j)| u8::from(i == j))
}

/// `(A ⊗ B)[i·p + k, j·q + l] = A[i, j]·B[k, l]`.
pub fn kron(a: ArrayView2<'_, u8>, b: ArrayView2<'_, u8>) -> Array2<u8> {
    let (m, n) = a.dim();
    let (p, q) = b.dim();
    let mut out = Array2::zeros((m * p, n * q));
    for i in 0..m {
        for j in 0..n {
            for k in 0..p {
                for l in 0..q {
                    out[[i * p + k, j * q + l]] = a[[i, j]] * b[[k, l]];
                }
            }
        }
    }
    out
}

/// `I ⊗ … ⊗ A ⊗ … ⊗ I` with `A` in position `slot` of `order` factors.
pub fn slot_operator(a: ArrayView2<'_, u8>, slot: usize, order: usize) -> Array2<u8> {
    let n = a.nrows();
    let mut out = Array2::from_elem((1, 1), 1u8);
    for position in 0..order {
        let factor = if position == slot { a.to_owned() } else { eye(n) };
        out = kron(out.view(), factor.view());
    }
    out
}

/// `Cᴷ(A) = Cᴷ⁻¹(A) ⊗ I + I ⊗ A`, from `C¹(A) = A`.
pub fn recursive_cartesian(a: ArrayView2<'_, u8>, order: usize) -> Array2<u8> {
    let n = a.nrows();
    let mut c = a.to_owned();
    for k in 2..=order {
        let id_big = eye(n.pow(k as u32 - 1));
        c = kron(c.view(), eye(n).view()) + kron(id_big.view(), a);
    }
    c
}

/// Internal, external and point adjacencies built from the neighbourhood
/// rules on pairs `(s, v)`.
pub fn product_rules(g: &Graph) -> (Array2<u8>, Array2<u8>, Array2<u8>) {
    let n = g.n();
    let a = adjacency(g);
    let mut internal = Array2::zeros((n * n, n * n));
    let mut external = Array2::zeros((n * n, n * n));
    let mut point = Array2::zeros((n * n, n * n));
    for s in 0..n {
        for v in 0..n {
            for t in 0..n {
                for w in 0..n {
                    let (r, c) = (s * n + v, t * n + w);
                    internal[[r, c]] = u8::from(s == t && a[[v, w]] == 1);
                    external[[r, c]] = u8::from(v == w && a[[s, t]] == 1);
                    point[[r, c]] = u8::from(t == v && w == v);
                }
            }
        }
    }
    (internal, external, point)
}

pub fn laplacian(a: ArrayView2<'_, u8>) -> Array2<f64> {
    let n = a.nrows();
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            a.row(i).iter().map(|&x| f64::from(x)).sum()
        } else {
            -f64::from(a[[i, j]])
        }
    })
}

/// Orthogonal projector onto the span of the given columns.
pub fn projector(columns: &[Array1<f64>], dim: usize) -> Array2<f64> {
    let mut p = Array2::zeros((dim, dim));
    for c in columns {
        for i in 0..dim {
            for j in 0..dim {
                p[[i, j]] += c[i] * c[j];
            }
        }
    }
    p
}

pub fn max_abs(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn matmul(x: ArrayView2<'_, f64>, w: ArrayView2<'_, f64>) -> Array2<f64> {
    let (r, k) = x.dim();
    let c = w.ncols();
    Array2::from_shape_fn((r, c), |(i, j)| (0..k).map(|t| x[[i, t]] * w[[t, j]]).sum())
}

pub fn linear(x: ArrayView2<'_, f64>, layer: &Linear) -> Array2<f64> {
    let mut y = matmul(x, layer.weight.view());
    if let Some(b) = &layer.bias {
        for mut row in y.rows_mut() {
            for (o, bb) in row.iter_mut().zip(b) {
                *o += bb;
            }
        }
    }
    y
}

pub fn mlp(x: ArrayView2<'_, f64>, m: &Mlp) -> Array2<f64> {
    let h = linear(x, &m.hidden).mapv(|z| z.max(0.0));
    linear(h.view(), &m.output)
}

/// Attention over the dense mask: each row softmaxes its scores over the
/// columns where `mask` is one.
pub fn attention(x: ArrayView2<'_, f64>, mask: ArrayView2<'_, u8>, p: &AttentionParams) -> Array2<f64> {
    let q = matmul(x, p.w_q.view());
    let k = matmul(x, p.w_k.view());
    let v = matmul(x, p.w_v.view());
    let heads = p.attn.nrows();
    let dh = q.ncols() / heads;
    let rows = x.nrows();
    let mut out = Array2::zeros((rows, q.ncols()));
    for i in 0..rows {
        for h in 0..heads {
            let mut scores = Vec::new();
            for j in 0..rows {
                if mask[[i, j]] == 0 {
                    continue;
                }
                let mut z = 0.0;
                for t in 0..dh {
                    z += p.attn[[h, t]] * q[[i, h * dh + t]] + p.attn[[h, dh + t]] * k[[j, h * dh + t]];
                }
                scores.push((j, if z > 0.0 { z } else { 0.2 * z }));
            }
            let total: f64 = scores.iter().map(|(_, e)| e.exp()).sum();
            for (j, e) in scores {
                for t in 0..dh {
                    out[[i, h * dh + t]] += e.exp() / total * v[[j, h * dh + t]];
                }
            }
        }
    }
    out
}

pub fn dense_mul(a: ArrayView2<'_, u8>, x: ArrayView2<'_, f64>) -> Array2<f64> {
    matmul(a.mapv(f64::from).view(), x)
}

/// Connected labelled graphs on three nodes: the triangle and three paths.
pub fn connected_triples() -> Vec<Graph> {
    vec![
        Graph::new(3, [(0, 1), (1, 2)]).unwrap(),
        Graph::new(3, [(0, 1), (0, 2)]).unwrap(),
        Graph::new(3, [(0, 2), (1, 2)]).unwrap(),
        Graph::complete(3),
    ]
}
