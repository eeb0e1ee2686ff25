//! Positional encodings for product nodes.
//!
//! The Laplacian of `G □ G` is `L ⊗ I + I ⊗ L`, so its eigenpairs are
//! `(u_i ⊗ u_j, λ_i + λ_j)` for base eigenpairs `(u_i, λ_i)` of `L`. The
//! product encoding is built from one `n × n` eigendecomposition and never
//! forms an `n² × n²` matrix; the same holds for `K`-tuples.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::graph::{shortest_path_distances, Graph};
use crate::ktuple::tuple_nodes;
use crate::product::cartesian_product_adjacency;
use crate::spectral::{eig_sym, laplacian, laplacian_from_adjacency, EigenDecomposition};

/// Largest base graph accepted by [`pe_oracle_check`].
pub const ORACLE_MAX_NODES: usize = 8;

/// A `rows × k` encoding matrix with one eigenvalue label per column.
#[derive(Debug, Clone, PartialEq)]
pub struct PEMatrix {
    pub data: Array2<f64>,
    pub eigenvalues: Vec<f64>,
}

impl PEMatrix {
    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn k(&self) -> usize {
        self.data.ncols()
    }

    /// Text form: `rows k`, then the labels, then one line per row. Values
    /// carry 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {}", self.rows(), self.k()).unwrap();
        write_row(&mut out, self.eigenvalues.iter());
        for row in self.data.rows() {
            write_row(&mut out, row.iter());
        }
        out
    }

    pub fn read_text(source: impl Read) -> Result<Self> {
        let mut lines = BufReader::new(source).lines();
        let mut next_line = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Parse("truncated PE file".into()))?
                .map_err(Error::from)
        };
        let header = next_line()?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("header {header:?}: {e}")))?;
        let [rows, k] = dims[..] else {
            return Err(Error::Parse(format!("bad header {header:?}")));
        };
        let eigenvalues = parse_floats(&next_line()?, k)?;
        let mut flat = Vec::with_capacity(rows * k);
        for _ in 0..rows {
            flat.extend(parse_floats(&next_line()?, k)?);
        }
        let data = Array2::from_shape_vec((rows, k), flat).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(Self { data, eigenvalues })
    }
}

fn write_row<'a>(out: &mut String, values: impl Iterator<Item = &'a f64>) {
    let line: Vec<String> = values.map(|x| format!("{x:.16e}")).collect();
    out.push_str(&line.join(" "));
    out.push('\n');
}

fn parse_floats(line: &str, expected: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = line
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(format!("{e} in {line:?}")))?;
    if values.len() != expected {
        return Err(Error::Parse(format!(
            "expected {expected} values, found {}",
            values.len()
        )));
    }
    Ok(values)
}

/// Base Laplacian eigendecomposition of `g`.
pub fn base_spectrum(g: &Graph) -> Result<EigenDecomposition> {
    eig_sym(laplacian(g).view())
}

/// Builds the first `k` columns of the `order`-fold tensor-product basis.
///
/// Candidates are index tuples ranked by `(Σ λ, tuple)`; the tuple is
/// compared lexicographically, which is the order of its flattened index.
fn tensor_columns(eig: &EigenDecomposition, order: u32, k: usize) -> PEMatrix {
    let n = eig.dim();
    let size = n.pow(order);
    let digits = |mut index: usize, out: &mut [usize]| {
        for slot in out.iter_mut().rev() {
            *slot = index % n;
            index /= n;
        }
    };

    let mut tuple = vec![0; order as usize];
    let mut candidates: Vec<(f64, usize)> = (0..size)
        .map(|flat| {
            digits(flat, &mut tuple);
            let mut label = eig.values[tuple[0]];
            for &i in &tuple[1..] {
                label += eig.values[i];
            }
            (label, flat)
        })
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    candidates.truncate(k);

    let u = &eig.vectors;
    let mut data = Array2::zeros((size, k));
    let mut index_tuple = vec![0; order as usize];
    let mut node_tuple = vec![0; order as usize];
    for (col, &(_, flat)) in candidates.iter().enumerate() {
        digits(flat, &mut index_tuple);
        for row in 0..size {
            digits(row, &mut node_tuple);
            let mut value = u[[node_tuple[0], index_tuple[0]]];
            for slot in 1..order as usize {
                value *= u[[node_tuple[slot], index_tuple[slot]]];
            }
            data[[row, col]] = value;
        }
    }
    PEMatrix {
        data,
        eigenvalues: candidates.into_iter().map(|(label, _)| label).collect(),
    }
}

/// First `k` product-graph eigenvectors `u_i ⊗ u_j` over the `n²` product
/// nodes, labelled `λ_i + λ_j`. Row `(s, v)` of column `(i, j)` is
/// `U[s, i] · U[v, j]`.
pub fn product_pe(g: &Graph, k: usize) -> Result<PEMatrix> {
    let n = g.n();
    if k == 0 || k > n * n {
        return Err(Error::Range(format!("k = {k} outside 1..={}", n * n)));
    }
    Ok(tensor_columns(&base_spectrum(g)?, 2, k))
}

/// First `k` eigenvectors of the `order`-fold Cartesian power, from the base
/// spectrum.
pub fn k_tuple_pe(g: &Graph, order: usize, k: usize) -> Result<PEMatrix> {
    if order == 0 {
        return Err(Error::Range("tuple order must be at least 1".into()));
    }
    let size = tuple_nodes(g.n(), order)?;
    if k == 0 || k > size {
        return Err(Error::Range(format!("k = {k} outside 1..={size}")));
    }
    Ok(tensor_columns(&base_spectrum(g)?, order as u32, k))
}

/// Row `(s, v)` is `[U[s, :k] ‖ U[v, :k]]`; the labels repeat the first `k`
/// base eigenvalues once per half.
pub fn concatenation_pe(g: &Graph, k: usize) -> Result<PEMatrix> {
    let n = g.n();
    if k == 0 || k > n {
        return Err(Error::Range(format!("k = {k} outside 1..={n}")));
    }
    let eig = base_spectrum(g)?;
    let mut data = Array2::zeros((n * n, 2 * k));
    for s in 0..n {
        for v in 0..n {
            let mut row = data.row_mut(s * n + v);
            for c in 0..k {
                row[c] = eig.vectors[[s, c]];
                row[k + c] = eig.vectors[[v, c]];
            }
        }
    }
    let half = eig.values.iter().take(k).copied();
    Ok(PEMatrix {
        data,
        eigenvalues: half.clone().chain(half).collect(),
    })
}

/// Distance-based node marks: `marks(s, v) = dist(s, v)`, with unreachable
/// pairs mapped to `n`. Marks index an embedding table of `n + 1` rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMarkIndex {
    n: usize,
    marks: Vec<usize>,
}

impl NodeMarkIndex {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vocabulary(&self) -> usize {
        self.n + 1
    }

    pub fn get(&self, s: usize, v: usize) -> usize {
        self.marks[s * self.n + v]
    }

    /// Marks in flattened product order.
    pub fn as_slice(&self) -> &[usize] {
        &self.marks
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for row in self.marks.chunks(self.n) {
            let line: Vec<String> = row.iter().map(usize::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

pub fn node_mark_indices(g: &Graph) -> NodeMarkIndex {
    let dist = shortest_path_distances(g);
    let n = g.n();
    let marks = (0..n * n).map(|i| dist.get(i / n, i % n)).collect();
    NodeMarkIndex { n, marks }
}

/// Outcome of comparing the factorized product spectrum against direct
/// diagonalization of `L(G □ G)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeOracleReport {
    pub eigenvalues: Vec<f64>,
    pub max_eigenvalue_deviation: f64,
    pub max_projector_deviation: f64,
}

impl PeOracleReport {
    pub const EIGENVALUE_TOLERANCE: f64 = 1e-8;
    pub const PROJECTOR_TOLERANCE: f64 = 1e-6;

    pub fn passed(&self) -> bool {
        self.max_eigenvalue_deviation <= Self::EIGENVALUE_TOLERANCE
            && self.max_projector_deviation <= Self::PROJECTOR_TOLERANCE
    }
}

/// Groups ascending eigenvalues into runs whose neighbours differ by at
/// most `gap`; returns `[start, end)` ranges.
pub fn eigenvalue_clusters(values: &[f64], gap: f64) -> Vec<(usize, usize)> {
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > gap {
            clusters.push((start, i));
            start = i;
        }
    }
    clusters
}

/// Max-norm distance between the orthogonal projectors onto the column
/// spans of `a[:, range]` and `b[:, range]`, over all clusters.
pub fn projector_deviation(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, clusters: &[(usize, usize)]) -> f64 {
    let mut worst = 0.0_f64;
    for &(lo, hi) in clusters {
        let ca = a.slice(ndarray::s![.., lo..hi]);
        let cb = b.slice(ndarray::s![.., lo..hi]);
        let diff = ca.dot(&ca.t()) - cb.dot(&cb.t());
        worst = diff.iter().fold(worst, |m, x| m.max(x.abs()));
    }
    worst
}

/// Diagonalizes `L(G □ G)` directly and compares it with the full product
/// encoding: eigenvalue multisets and, per eigenvalue cluster, eigenspace
/// projectors.
pub fn pe_oracle_check(g: &Graph) -> Result<PeOracleReport> {
    let n = g.n();
    if n > ORACLE_MAX_NODES {
        return Err(Error::Scale {
            size: n * n,
            limit: ORACLE_MAX_NODES * ORACLE_MAX_NODES,
        });
    }
    let direct = eig_sym(laplacian_from_adjacency(cartesian_product_adjacency(g).to_dense().view()).view())?;
    let factored = product_pe(g, n * n)?;

    let max_eigenvalue_deviation = direct
        .values
        .iter()
        .zip(&factored.eigenvalues)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let clusters = eigenvalue_clusters(direct.values.as_slice().unwrap(), PeOracleReport::PROJECTOR_TOLERANCE);
    let max_projector_deviation = projector_deviation(direct.vectors.view(), factored.data.view(), &clusters);

    Ok(PeOracleReport {
        eigenvalues: factored.eigenvalues,
        max_eigenvalue_deviation,
        max_projector_deviation,
    })
}
