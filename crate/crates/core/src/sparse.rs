//! Binary sparse matrices in coordinate form.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// A 0/1 matrix stored as its sorted, deduplicated set of nonzero
/// `(row, col)` coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseAdjacency {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize)>,
    // entries[row_start[r]..row_start[r + 1]] belong to row r
    row_start: Vec<usize>,
}

impl SparseAdjacency {
    pub fn new(rows: usize, cols: usize, mut entries: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(r, c)) = entries.iter().find(|&&(r, c)| r >= rows || c >= cols) {
            return Err(Error::InvalidInput(format!(
                "entry ({r}, {c}) outside a {rows}x{cols} matrix"
            )));
        }
        entries.sort_unstable();
        entries.dedup();
        Ok(Self::from_sorted(rows, cols, entries))
    }

    /// `entries` must already be strictly sorted and in bounds.
    pub(crate) fn from_sorted(rows: usize, cols: usize, entries: Vec<(usize, usize)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0] < w[1]));
        let mut row_start = vec![0; rows + 1];
        for &(r, _) in &entries {
            row_start[r + 1] += 1;
        }
        for r in 0..rows {
            row_start[r + 1] += row_start[r];
        }
        Self {
            rows,
            cols,
            entries,
            row_start,
        }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self::from_sorted(rows, cols, Vec::new())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.entries.binary_search(&(row, col)).is_ok()
    }

    /// Column indices of the nonzeros in `row`, ascending.
    pub fn row_indices(&self, row: usize) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.entries[self.row_start[row]..self.row_start[row + 1]]
            .iter()
            .map(|&(_, c)| c)
    }

    pub fn from_dense(dense: ArrayView2<'_, u8>) -> Result<Self> {
        let mut entries = Vec::new();
        for ((r, c), &x) in dense.indexed_iter() {
            match x {
                0 => {}
                1 => entries.push((r, c)),
                other => return Err(Error::InvalidInput(format!("non-binary value {other} at ({r}, {c})"))),
            }
        }
        Ok(Self::from_sorted(dense.nrows(), dense.ncols(), entries))
    }

    pub fn to_dense(&self) -> Array2<u8> {
        let mut out = Array2::zeros((self.rows, self.cols));
        for &(r, c) in &self.entries {
            out[[r, c]] = 1;
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let entries = self.entries.iter().map(|&(r, c)| (c, r)).collect();
        Self::new(self.cols, self.rows, entries).expect("transpose stays in bounds")
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && self.entries.iter().all(|&(r, c)| self.contains(c, r))
    }

    /// Entrywise OR of two equally shaped matrices.
    pub fn union(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut entries = Vec::with_capacity(self.nnz() + other.nnz());
        entries.extend_from_slice(&self.entries);
        entries.extend_from_slice(&other.entries);
        Self::new(self.rows, self.cols, entries)
    }

    /// Number of coordinates present in both matrices, i.e. the Frobenius
    /// inner product of two binary matrices.
    pub fn overlap(&self, other: &Self) -> Result<usize> {
        self.check_same_shape(other)?;
        Ok(self.entries.iter().filter(|&&(r, c)| other.contains(r, c)).count())
    }

    /// Keeps only the entries for which `keep` returns true.
    pub fn filter(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Self {
        let entries = self.entries.iter().copied().filter(|&(r, c)| keep(r, c)).collect();
        Self::from_sorted(self.rows, self.cols, entries)
    }

    /// Symmetric relabelling `(r, c) -> (perm[r], perm[c])` of a square matrix.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if self.rows != self.cols || perm.len() != self.rows {
            return Err(Error::ShapeMismatch(format!(
                "permutation of length {} for a {}x{} matrix",
                perm.len(),
                self.rows,
                self.cols
            )));
        }
        crate::graph::validate_permutation(perm, self.rows)?;
        let entries = self.entries.iter().map(|&(r, c)| (perm[r], perm[c])).collect();
        Self::new(self.rows, self.cols, entries)
    }

    /// Principal submatrix on `indices`, reindexed to `0..indices.len()`.
    /// `indices` must be strictly ascending.
    pub fn principal_submatrix(&self, indices: &[usize]) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::ShapeMismatch(
                "principal submatrix of a non-square matrix".into(),
            ));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) || indices.last().is_some_and(|&i| i >= self.rows) {
            return Err(Error::InvalidInput("indices must be ascending and in range".into()));
        }
        let mut position = vec![usize::MAX; self.rows];
        for (new, &old) in indices.iter().enumerate() {
            position[old] = new;
        }
        let entries = self
            .entries
            .iter()
            .filter_map(|&(r, c)| {
                let (r, c) = (position[r], position[c]);
                (r != usize::MAX && c != usize::MAX).then_some((r, c))
            })
            .collect();
        Ok(Self::from_sorted(indices.len(), indices.len(), entries))
    }

    /// `self · x`.
    pub fn matmul(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.nrows() != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "sparse {}x{} times dense {}x{}",
                self.rows,
                self.cols,
                x.nrows(),
                x.ncols()
            )));
        }
        let mut out = Array2::zeros((self.rows, x.ncols()));
        for &(r, c) in &self.entries {
            let mut row = out.row_mut(r);
            row += &x.row(c);
        }
        Ok(out)
    }

    /// `selfᵀ · x`.
    pub fn transpose_matmul(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.nrows() != self.rows {
            return Err(Error::ShapeMismatch(format!(
                "transposed sparse {}x{} times dense {}x{}",
                self.cols,
                self.rows,
                x.nrows(),
                x.ncols()
            )));
        }
        let mut out = Array2::zeros((self.cols, x.ncols()));
        for &(r, c) in &self.entries {
            let mut row = out.row_mut(c);
            row += &x.row(r);
        }
        Ok(out)
    }

    /// Sorted COO text: a `rows cols nnz` header, then one `row col` per line.
    pub fn to_coo_string(&self) -> String {
        let mut out = String::with_capacity(16 * (self.nnz() + 1));
        writeln!(out, "{} {} {}", self.rows, self.cols, self.nnz()).unwrap();
        for &(r, c) in &self.entries {
            writeln!(out, "{r} {c}").unwrap();
        }
        out
    }

    pub fn read_coo(source: impl Read) -> Result<Self> {
        let mut lines = BufReader::new(source).lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty COO file".into()))??;
        let header = parse_fields::<3>(&header)?;
        let [rows, cols, nnz] = header;
        let mut entries = Vec::with_capacity(nnz);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let [r, c] = parse_fields::<2>(&line)?;
            entries.push((r, c));
        }
        if entries.len() != nnz {
            return Err(Error::Parse(format!(
                "header declares {nnz} entries but {} were read",
                entries.len()
            )));
        }
        if entries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse("COO entries are not strictly sorted".into()));
        }
        Self::new(rows, cols, entries)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

fn parse_fields<const N: usize>(line: &str) -> Result<[usize; N]> {
    let mut out = [0; N];
    let mut fields = line.split_whitespace();
    for slot in &mut out {
        *slot = fields
            .next()
            .ok_or_else(|| Error::Parse(format!("expected {N} integers in {line:?}")))?
            .parse()
            .map_err(|e| Error::Parse(format!("{line:?}: {e}")))?;
    }
    if fields.next().is_some() {
        return Err(Error::Parse(format!("expected {N} integers in {line:?}")));
    }
    Ok(out)
}
