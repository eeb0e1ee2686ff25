//! Dense Kronecker constructions for `K`-tuple product graphs.
//!
//! These operate on dense 0/1 matrices and are limited to
//! [`MAX_TUPLE_NODES`] tuple nodes.

use ndarray::{s, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::product::TupleIndexing;
use crate::sparse::SparseAdjacency;

/// Largest `n^K` accepted by the dense tuple constructions.
pub const MAX_TUPLE_NODES: usize = 4096;

pub type BinaryMatrix = Array2<u8>;

/// `n^k` after checking it against [`MAX_TUPLE_NODES`].
pub fn tuple_nodes(n: usize, k: usize) -> Result<usize> {
    match n.checked_pow(k as u32) {
        Some(size) if size <= MAX_TUPLE_NODES => Ok(size),
        Some(size) => Err(Error::Scale {
            size,
            limit: MAX_TUPLE_NODES,
        }),
        None => Err(Error::Scale {
            size: usize::MAX,
            limit: MAX_TUPLE_NODES,
        }),
    }
}

pub fn identity(n: usize) -> BinaryMatrix {
    Array2::from_diag_elem(n, 1)
}

/// Kronecker product: `(a ⊗ b)[i·r + j, i'·s + j'] = a[i, i'] · b[j, j']`.
pub fn kron(a: ArrayView2<'_, u8>, b: ArrayView2<'_, u8>) -> BinaryMatrix {
    let (r, s_) = b.dim();
    let mut out = Array2::zeros((a.nrows() * r, a.ncols() * s_));
    for ((i, ip), &x) in a.indexed_iter() {
        if x != 0 {
            out.slice_mut(s![i * r..(i + 1) * r, ip * s_..(ip + 1) * s_])
                .assign(&b.mapv(|y| x * y));
        }
    }
    out
}

/// Requires a square, binary, symmetric matrix with zero diagonal.
fn check_simple_adjacency(a: ArrayView2<'_, u8>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!("adjacency is {}x{}", a.nrows(), a.ncols())));
    }
    for ((i, j), &x) in a.indexed_iter() {
        if x > 1 {
            return Err(Error::InvalidInput(format!("non-binary entry at ({i}, {j})")));
        }
        if i == j && x != 0 {
            return Err(Error::InvalidInput(format!("self loop at node {i}")));
        }
        if x != a[[j, i]] {
            return Err(Error::InvalidInput(format!("asymmetric entry at ({i}, {j})")));
        }
    }
    Ok(())
}

/// Recursive Cartesian power: `C¹(A) = A`,
/// `Cᵏ(A) = Cᵏ⁻¹(A) ⊗ I_n + I_{n^{k-1}} ⊗ A`.
pub fn cartesian_operator(a: ArrayView2<'_, u8>, k: usize) -> Result<BinaryMatrix> {
    if k == 0 {
        return Err(Error::Range("tuple order must be at least 1".into()));
    }
    check_simple_adjacency(a)?;
    let n = a.nrows();
    tuple_nodes(n, k)?;
    let eye = identity(n);
    let mut current = a.to_owned();
    for order in 2..=k {
        let left = kron(current.view(), eye.view());
        let right = kron(identity(n.pow(order as u32 - 1)).view(), a);
        current = left + right;
    }
    Ok(current)
}

/// `I ⊗ … ⊗ A ⊗ … ⊗ I` with `A` in slot `slot` (0-based from the left) of
/// `order` factors.
pub fn k_factor_adjacency(a: ArrayView2<'_, u8>, slot: usize, order: usize) -> Result<BinaryMatrix> {
    if slot >= order {
        return Err(Error::Range(format!(
            "slot {slot} out of range for tuple order {order}"
        )));
    }
    check_simple_adjacency(a)?;
    let n = a.nrows();
    tuple_nodes(n, order)?;
    let left = identity(n.pow(slot as u32));
    let right = identity(n.pow((order - slot - 1) as u32));
    Ok(kron(kron(left.view(), a).view(), right.view()))
}

/// Slot-sum form of the Cartesian power, `Σ_k A^k_K`. Fails if any cell of
/// the sum exceeds one.
pub fn closed_form_cartesian(a: ArrayView2<'_, u8>, order: usize) -> Result<BinaryMatrix> {
    if order == 0 {
        return Err(Error::Range("tuple order must be at least 1".into()));
    }
    let size = tuple_nodes(a.nrows(), order)?;
    let mut sum = Array2::<u8>::zeros((size, size));
    for slot in 0..order {
        sum += &k_factor_adjacency(a, slot, order)?;
    }
    if let Some(((i, j), _)) = sum.indexed_iter().find(|(_, &x)| x > 1) {
        return Err(Error::InvalidInput(format!("slot adjacencies overlap at ({i}, {j})")));
    }
    Ok(sum)
}

/// Generalized point update for `order`-tuples with the free slot `free_slot`
/// (1-based). Tuple `(v_1, …, v_K)` receives from the root `(c, …, c)` when
/// `v_j = c` for every `j ≠ free_slot`.
pub fn k_point_adjacency(n: usize, order: usize, free_slot: usize) -> Result<SparseAdjacency> {
    if order == 0 || free_slot == 0 || free_slot > order {
        return Err(Error::Range(format!("slot {free_slot} out of range 1..={order}")));
    }
    let size = tuple_nodes(n, order)?;
    let indexing = TupleIndexing::new(n, order);
    let mut entries = Vec::with_capacity(n * n);
    for c in 0..n {
        let root = indexing.flatten(&vec![c; order]);
        for free in 0..n {
            let mut tuple = vec![c; order];
            tuple[free_slot - 1] = free;
            entries.push((indexing.flatten(&tuple), root));
        }
    }
    SparseAdjacency::new(size, size, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{dense_adjacency, Graph};
    use crate::product::{point_adjacency, slot_transposition};
    use ndarray::array;

    fn p2() -> BinaryMatrix {
        dense_adjacency(&Graph::path(2))
    }

    #[test]
    fn kron_examples() {
        let a = p2();
        let left = kron(identity(2).view(), a.view());
        assert_eq!(left, array![[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]);
        let right = kron(a.view(), identity(2).view());
        assert_eq!(right, array![[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]]);
        let zero = Array2::<u8>::zeros((2, 3));
        assert_eq!(kron(zero.view(), a.view()), Array2::<u8>::zeros((4, 6)));
    }

    #[test]
    fn cartesian_operator_base_and_cube() {
        let a = p2();
        assert_eq!(cartesian_operator(a.view(), 1).unwrap(), a);
        let q3 = cartesian_operator(a.view(), 3).unwrap();
        assert_eq!(q3.iter().map(|&x| x as usize).sum::<usize>(), 24);
        for row in q3.rows() {
            assert_eq!(row.iter().map(|&x| x as usize).sum::<usize>(), 3);
        }
        // hypercube: adjacent iff labels differ in exactly one bit
        for ((i, j), &x) in q3.indexed_iter() {
            assert_eq!(x == 1, (i ^ j).count_ones() == 1);
        }
    }

    #[test]
    fn closed_form_matches_recursion() {
        let a = p2();
        assert_eq!(
            closed_form_cartesian(a.view(), 3).unwrap(),
            cartesian_operator(a.view(), 3).unwrap()
        );
        let k3 = dense_adjacency(&Graph::complete(3));
        let c = closed_form_cartesian(k3.view(), 2).unwrap();
        for row in c.rows() {
            assert_eq!(row.iter().filter(|&&x| x == 1).count(), 4);
        }
    }

    #[test]
    fn rejects_self_loops_and_scale() {
        let looped = array![[1u8, 1], [1, 0]];
        assert!(matches!(
            closed_form_cartesian(looped.view(), 2),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            cartesian_operator(looped.view(), 2),
            Err(Error::InvalidInput(_))
        ));
        let big = dense_adjacency(&Graph::path(17));
        assert!(matches!(cartesian_operator(big.view(), 3), Err(Error::Scale { .. })));
        assert!(matches!(k_point_adjacency(65, 2, 1), Err(Error::Scale { .. })));
    }

    #[test]
    fn point_generalization() {
        // the free slot holds the node index, the others match the root
        assert_eq!(k_point_adjacency(3, 2, 1).unwrap(), point_adjacency(3));
        let t = slot_transposition(3);
        assert_eq!(
            k_point_adjacency(3, 2, 2).unwrap(),
            point_adjacency(3).permute(&t).unwrap()
        );
        assert_eq!(
            k_point_adjacency(2, 2, 1).unwrap().entries(),
            &[(0, 0), (1, 3), (2, 0), (3, 3)]
        );
        for order in 1..4 {
            for slot in 1..=order {
                assert_eq!(k_point_adjacency(1, order, slot).unwrap().entries(), &[(0, 0)]);
            }
        }
        assert!(k_point_adjacency(3, 2, 0).is_err());
    }
}
