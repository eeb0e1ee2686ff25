//! Product-graph adjacencies over `(subgraph, node)` pairs.
//!
//! A node-marking subgraph GNN on an `n`-node graph works on `n²` product
//! nodes `(s, v)`, flattened as `s·n + v`. Three edge types carry its
//! aggregations:
//!
//! | adjacency  | edge `(s,v) ← (s',v')` when | Kronecker form |
//! |------------|-----------------------------|----------------|
//! | internal   | `s = s'` and `v ~ v'`       | `I ⊗ A`        |
//! | external   | `v = v'` and `s ~ s'`       | `A ⊗ I`        |
//! | point      | `s' = v' = v`               | (asymmetric)   |
//!
//! Internal plus external is the Cartesian product graph `G □ G`.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sparse::SparseAdjacency;

/// Row-major flattening of `k`-tuples over `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TupleIndexing {
    n: usize,
    k: usize,
}

impl TupleIndexing {
    pub fn new(n: usize, k: usize) -> Self {
        assert!(n >= 1 && k >= 1, "tuple indexing needs n >= 1 and k >= 1");
        Self { n, k }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of tuples, `n^k`, or `None` on overflow.
    pub fn tuple_count(&self) -> Option<usize> {
        self.n.checked_pow(self.k as u32)
    }

    pub fn flatten(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.k);
        tuple.iter().fold(0, |acc, &t| {
            debug_assert!(t < self.n);
            acc * self.n + t
        })
    }

    pub fn unflatten(&self, mut index: usize) -> Vec<usize> {
        let mut tuple = vec![0; self.k];
        for slot in tuple.iter_mut().rev() {
            *slot = index % self.n;
            index /= self.n;
        }
        tuple
    }
}

#[inline]
fn pair(n: usize, s: usize, v: usize) -> usize {
    s * n + v
}

/// Internal, external and point adjacencies of one graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductGraphBundle {
    pub n: usize,
    pub internal: SparseAdjacency,
    pub external: SparseAdjacency,
    pub point: SparseAdjacency,
}

impl ProductGraphBundle {
    pub fn new(g: &Graph) -> Self {
        Self {
            n: g.n(),
            internal: internal_adjacency(g),
            external: external_adjacency(g),
            point: point_adjacency(g.n()),
        }
    }

    /// The same bundle with every adjacency restricted to sampled subgraphs.
    pub fn masked(&self, mask: &SamplingMask) -> Result<Self> {
        Ok(Self {
            n: self.n,
            internal: apply_sampling_mask(&self.internal, mask)?,
            external: apply_sampling_mask(&self.external, mask)?,
            point: apply_sampling_mask(&self.point, mask)?,
        })
    }

    /// Relabels every adjacency by the product permutation induced by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let lifted = product_permutation(perm)?;
        Ok(Self {
            n: self.n,
            internal: self.internal.permute(&lifted)?,
            external: self.external.permute(&lifted)?,
            point: self.point.permute(&lifted)?,
        })
    }
}

/// `(s, v') ← (s, v)` for every edge `v ~ v'`; equals `I ⊗ A`.
pub fn internal_adjacency(g: &Graph) -> SparseAdjacency {
    let n = g.n();
    let neighbors = g.neighbors();
    let mut entries = Vec::with_capacity(2 * n * g.num_edges());
    for s in 0..n {
        for (v, nbrs) in neighbors.iter().enumerate() {
            entries.extend(nbrs.iter().map(|&w| (pair(n, s, v), pair(n, s, w))));
        }
    }
    SparseAdjacency::from_sorted(n * n, n * n, entries)
}

/// `(s', v) ← (s, v)` for every edge `s ~ s'`; equals `A ⊗ I`.
pub fn external_adjacency(g: &Graph) -> SparseAdjacency {
    let n = g.n();
    let neighbors = g.neighbors();
    let mut entries = Vec::with_capacity(2 * n * g.num_edges());
    for (s, nbrs) in neighbors.iter().enumerate() {
        for v in 0..n {
            entries.extend(nbrs.iter().map(|&t| (pair(n, s, v), pair(n, t, v))));
        }
    }
    SparseAdjacency::new(n * n, n * n, entries).expect("indices are in range")
}

/// Each `(s, v)` receives from its root `(v, v)`.
pub fn point_adjacency(n: usize) -> SparseAdjacency {
    let entries = (0..n)
        .flat_map(|s| (0..n).map(move |v| (pair(n, s, v), pair(n, v, v))))
        .collect();
    SparseAdjacency::from_sorted(n * n, n * n, entries)
}

/// Adjacency of `G □ G`, the union of internal and external edges.
pub fn cartesian_product_adjacency(g: &Graph) -> SparseAdjacency {
    internal_adjacency(g)
        .union(&external_adjacency(g))
        .expect("both adjacencies are n²×n²")
}

/// All-to-all connectivity inside each subgraph (`I ⊗ (11ᵀ − I)`) and across
/// subgraphs at the same node (`(11ᵀ − I) ⊗ I`).
pub fn global_adjacencies(n: usize) -> (SparseAdjacency, SparseAdjacency) {
    let complete = Graph::complete(n);
    (internal_adjacency(&complete), external_adjacency(&complete))
}

/// Lifts a node permutation to product nodes: `(s, v) ↦ (π(s), π(v))`.
pub fn product_permutation(perm: &[usize]) -> Result<Vec<usize>> {
    let n = perm.len();
    crate::graph::validate_permutation(perm, n)?;
    Ok((0..n * n).map(|i| pair(n, perm[i / n], perm[i % n])).collect())
}

/// Transposition of tuple slots, `(s, v) ↦ (v, s)`.
pub fn slot_transposition(n: usize) -> Vec<usize> {
    (0..n * n).map(|i| pair(n, i % n, i / n)).collect()
}

/// The set of sampled subgraphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingMask {
    n: usize,
    sampled: Vec<usize>,
    selected: Vec<bool>,
}

impl SamplingMask {
    pub fn new(n: usize, sampled: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut selected = vec![false; n];
        for s in sampled {
            if s >= n {
                return Err(Error::InvalidInput(format!("subgraph {s} out of range for n = {n}")));
            }
            selected[s] = true;
        }
        let sampled: Vec<usize> = (0..n).filter(|&s| selected[s]).collect();
        if sampled.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(Self { n, sampled, selected })
    }

    pub fn all(n: usize) -> Self {
        Self::new(n, 0..n).expect("n >= 1")
    }

    /// `ceil(ratio · n)` subgraphs drawn uniformly without replacement.
    pub fn sample(n: usize, ratio: f64, seed: u64) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::Range(format!("sample ratio {ratio} not in (0, 1]")));
        }
        let count = ((ratio * n as f64).ceil() as usize).min(n);
        if count == 0 {
            return Err(Error::EmptySample);
        }
        let mut rng = crate::rng::seeded(seed);
        Self::new(n, crate::rng::sample_without_replacement(&mut rng, n, count))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sampled subgraph indices, ascending.
    pub fn sampled(&self) -> &[usize] {
        &self.sampled
    }

    pub fn is_sampled(&self, s: usize) -> bool {
        self.selected[s]
    }

    pub fn is_full(&self) -> bool {
        self.sampled.len() == self.n
    }

    /// Flattened product indices `(s, v)` with `s` sampled, ascending.
    pub fn product_rows(&self) -> Vec<usize> {
        self.sampled
            .iter()
            .flat_map(|&s| (0..self.n).map(move |v| pair(self.n, s, v)))
            .collect()
    }
}

/// Keeps edge `(s,v) ~ (s',v')` only when both `s` and `s'` are sampled.
pub fn apply_sampling_mask(adj: &SparseAdjacency, mask: &SamplingMask) -> Result<SparseAdjacency> {
    let n = mask.n();
    if adj.rows() != n * n || adj.cols() != n * n {
        return Err(Error::ShapeMismatch(format!(
            "adjacency is {}x{}, mask expects {}x{}",
            adj.rows(),
            adj.cols(),
            n * n,
            n * n
        )));
    }
    Ok(adj.filter(|r, c| mask.is_sampled(r / n) && mask.is_sampled(c / n)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_round_trip() {
        let idx = TupleIndexing::new(3, 3);
        assert_eq!(idx.tuple_count(), Some(27));
        for i in 0..27 {
            assert_eq!(idx.flatten(&idx.unflatten(i)), i);
        }
        assert_eq!(TupleIndexing::new(3, 2).flatten(&[2, 1]), 7);
    }

    #[test]
    fn p2_adjacencies() {
        let p2 = Graph::path(2);
        assert_eq!(internal_adjacency(&p2).entries(), &[(0, 1), (1, 0), (2, 3), (3, 2)]);
        assert_eq!(external_adjacency(&p2).entries(), &[(0, 2), (1, 3), (2, 0), (3, 1)]);
        assert_eq!(point_adjacency(2).entries(), &[(0, 0), (1, 3), (2, 0), (3, 3)]);
        let c4 = cartesian_product_adjacency(&p2);
        assert_eq!(c4.nnz(), 8);
        // 0-1-3-2-0
        for (a, b) in [(0, 1), (1, 3), (3, 2), (2, 0)] {
            assert!(c4.contains(a, b) && c4.contains(b, a));
        }
    }

    #[test]
    fn empty_and_small_cases() {
        let e2 = Graph::empty(2);
        assert_eq!(internal_adjacency(&e2).nnz(), 0);
        assert_eq!(external_adjacency(&e2).nnz(), 0);
        assert_eq!(cartesian_product_adjacency(&Graph::empty(3)).nnz(), 0);
        assert_eq!(point_adjacency(1).entries(), &[(0, 0)]);
        assert_eq!(internal_adjacency(&Graph::complete(3)).nnz(), 18);
        let p3 = point_adjacency(3);
        assert_eq!(p3.row_indices(7).collect::<Vec<_>>(), vec![4]);
    }

    #[test]
    fn external_is_slot_transposed_internal() {
        for seed in 0..20 {
            let g = Graph::random(2, 6, seed);
            let t = slot_transposition(g.n());
            assert_eq!(internal_adjacency(&g).permute(&t).unwrap(), external_adjacency(&g));
        }
    }

    #[test]
    fn global_adjacency_counts() {
        let (gi, ge) = global_adjacencies(2);
        assert_eq!(gi, internal_adjacency(&Graph::path(2)));
        assert_eq!(ge, external_adjacency(&Graph::path(2)));
        let (gi, ge) = global_adjacencies(1);
        assert_eq!((gi.nnz(), ge.nnz()), (0, 0));
        let (gi, ge) = global_adjacencies(3);
        assert_eq!((gi.nnz(), ge.nnz()), (18, 18));
    }

    #[test]
    fn sampling_mask_examples() {
        let p2 = Graph::path(2);
        let full = SamplingMask::all(2);
        let internal = internal_adjacency(&p2);
        assert_eq!(apply_sampling_mask(&internal, &full).unwrap(), internal);

        let first = SamplingMask::new(2, [0]).unwrap();
        assert_eq!(
            apply_sampling_mask(&internal, &first).unwrap().entries(),
            &[(0, 1), (1, 0)]
        );
        assert_eq!(apply_sampling_mask(&external_adjacency(&p2), &first).unwrap().nnz(), 0);

        assert!(matches!(SamplingMask::new(2, []), Err(Error::EmptySample)));
        assert!(matches!(SamplingMask::sample(4, 0.0, 1), Err(Error::Range(_))));
        assert_eq!(SamplingMask::sample(5, 0.5, 3).unwrap().sampled().len(), 3);
        assert!(SamplingMask::sample(5, 1.0, 3).unwrap().is_full());
    }

    #[test]
    fn masking_is_idempotent() {
        let g = Graph::random(3, 7, 11);
        let mask = SamplingMask::sample(g.n(), 0.5, 4).unwrap();
        let once = apply_sampling_mask(&cartesian_product_adjacency(&g), &mask).unwrap();
        assert_eq!(apply_sampling_mask(&once, &mask).unwrap(), once);
    }
}
