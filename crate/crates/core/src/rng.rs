//! Seeded randomness.
//!
//! Every random choice in the crate (graphs, permutations, weights, subgraph
//! samples) is drawn from [`SplitMix64`], so a seed reproduces the same values
//! on every platform.

use rand::seq::index;
use rand::{Rng, SeedableRng};
pub use rand_xoshiro::SplitMix64;

pub fn seeded(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// Uniform draw in `[-bound, bound]`.
pub fn uniform_symmetric(rng: &mut SplitMix64, bound: f64) -> f64 {
    rng.gen_range(-bound..=bound)
}

/// A uniformly random permutation of `0..n`, as `perm[old] = new`.
pub fn random_permutation(rng: &mut SplitMix64, n: usize) -> Vec<usize> {
    index::sample(rng, n, n).into_vec()
}

/// `amount` distinct values from `0..n`, sorted ascending.
pub fn sample_without_replacement(rng: &mut SplitMix64, n: usize, amount: usize) -> Vec<usize> {
    let mut picked = index::sample(rng, n, amount).into_vec();
    picked.sort_unstable();
    picked
}

/// A `rows × cols` matrix of uniform draws in `[-bound, bound]`.
pub fn uniform_matrix(rng: &mut SplitMix64, rows: usize, cols: usize, bound: f64) -> ndarray::Array2<f64> {
    ndarray::Array2::from_shape_simple_fn((rows, cols), || uniform_symmetric(rng, bound))
}
