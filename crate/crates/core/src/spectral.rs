//! Graph Laplacians and a dense symmetric eigensolver.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::graph::Graph;

const SYMMETRY_TOLERANCE: f64 = 1e-12;
const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;
/// Entries at or below this magnitude are ignored when fixing eigenvector signs.
pub const SIGN_THRESHOLD: f64 = 1e-9;

/// Combinatorial Laplacian `L = D − A`.
pub fn laplacian(g: &Graph) -> Array2<f64> {
    let n = g.n();
    let mut l = Array2::zeros((n, n));
    for (u, v) in g.edges() {
        l[[u, v]] = -1.0;
        l[[v, u]] = -1.0;
        l[[u, u]] += 1.0;
        l[[v, v]] += 1.0;
    }
    l
}

/// Laplacian of the graph given by a symmetric 0/1 adjacency matrix.
pub fn laplacian_from_adjacency(a: ArrayView2<'_, u8>) -> Array2<f64> {
    let mut l = a.mapv(|x| -f64::from(x));
    for (i, row) in a.rows().into_iter().enumerate() {
        l[[i, i]] = row.iter().map(|&x| f64::from(x)).sum();
    }
    l
}

/// Eigenpairs of a symmetric matrix, ascending by eigenvalue.
///
/// Column `i` of `vectors` is the unit eigenvector for `values[i]`. Each
/// vector is signed so that its first entry larger than [`SIGN_THRESHOLD`] in
/// magnitude is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `max_i ‖M v_i − λ_i v_i‖∞`.
    pub fn max_residual(&self, m: ArrayView2<'_, f64>) -> f64 {
        let mv = m.dot(&self.vectors);
        let mut worst = 0.0_f64;
        for (i, &lambda) in self.values.iter().enumerate() {
            for r in 0..self.dim() {
                worst = worst.max((mv[[r, i]] - lambda * self.vectors[[r, i]]).abs());
            }
        }
        worst
    }

    /// `max |VᵀV − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.vectors.t().dot(&self.vectors);
        gram.indexed_iter()
            .map(|((i, j), &x)| (x - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }
}

fn max_asymmetry(m: ArrayView2<'_, f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((m[[i, j]] - m[[j, i]]).abs());
        }
    }
    worst
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
pub fn eig_sym(m: ArrayView2<'_, f64>) -> Result<EigenDecomposition> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} matrix is not square",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let scale = m.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
    let asym = max_asymmetry(m);
    if asym > SYMMETRY_TOLERANCE * scale || m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotSymmetric(asym));
    }

    // row-major working copies
    let mut a: Vec<f64> = m.iter().copied().collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frobenius = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tolerance = OFF_DIAGONAL_TOLERANCE * frobenius.max(1.0);

    let off_norm = |a: &[f64]| -> f64 {
        let mut sum = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                sum += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        sum.sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&a) > tolerance {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence(MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                // negligible against both diagonal entries: drop without rotating
                let small = 100.0 * apq.abs();
                if sweeps > 4
                    && a[p * n + p].abs() + small == a[p * n + p].abs()
                    && a[q * n + q].abs() + small == a[q * n + q].abs()
                {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                a[p * n + p] -= t * apq;
                a[q * n + q] += t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let g = a[r * n + p];
                        let h = a[r * n + q];
                        let new_p = g - s * (h + g * tau);
                        let new_q = h + s * (g - h * tau);
                        a[r * n + p] = new_p;
                        a[p * n + r] = new_p;
                        a[r * n + q] = new_q;
                        a[q * n + r] = new_q;
                    }
                    let g = v[r * n + p];
                    let h = v[r * n + q];
                    v[r * n + p] = g - s * (h + g * tau);
                    v[r * n + q] = h + s * (g - h * tau);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]).then(i.cmp(&j)));

    let values = Array1::from_iter(order.iter().map(|&i| a[i * n + i]));
    let mut vectors = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        let sign = (0..n)
            .map(|r| v[r * n + src])
            .find(|x| x.abs() > SIGN_THRESHOLD)
            .map_or(1.0, f64::signum);
        for r in 0..n {
            vectors[[r, col]] = sign * v[r * n + src];
        }
    }
    Ok(EigenDecomposition { values, vectors })
}
