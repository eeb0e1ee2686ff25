//! Self-verification suite: every structural identity and numerical
//! property of the crate, checked against brute-force references.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::graph::{dense_adjacency, permute_graph, shortest_path_distances, Graph};
use crate::ktuple::{cartesian_operator, closed_form_cartesian, k_factor_adjacency};
use crate::model::attention::{sparse_attention_cached, AttentionParams};
use crate::model::gradcheck::{grad_check, PooledSabObjective, DEFAULT_TOLERANCE};
use crate::model::layers::Mlp;
use crate::model::sab::{encoder_input, sab_forward_rows};
use crate::model::{
    point_update, rgcn_layer, sab_forward, Encoder, Parameterized, PoolVariant, ProductState, RGCNParameters,
    SABParameters, SabStack,
};
use crate::oracle;
use crate::pe::{
    base_spectrum, concatenation_pe, eigenvalue_clusters, k_tuple_pe, node_mark_indices, pe_oracle_check, product_pe,
    projector_deviation, PeOracleReport,
};
use crate::product::{
    apply_sampling_mask, cartesian_product_adjacency, external_adjacency, internal_adjacency, point_adjacency,
    product_permutation, ProductGraphBundle, SamplingMask,
};
use crate::rng::{self, uniform_matrix};
use crate::sparse::SparseAdjacency;
use crate::spectral::{eig_sym, laplacian};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyScale {
    Quick,
    Full,
}

impl FromStr for VerifyScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Self::Quick),
            "full" => Ok(Self::Full),
            other => Err(Error::InvalidInput(format!("unknown scale {other:?}"))),
        }
    }
}

impl VerifyScale {
    fn pick(self, quick: usize, full: usize) -> usize {
        match self {
            Self::Quick => quick,
            Self::Full => full,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub max_deviation: f64,
    pub elapsed: Duration,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            writeln!(
                out,
                "{:<4} {:<34} dev={:<11.3e} {:>9.3}s  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.max_deviation,
                c.elapsed.as_secs_f64(),
                c.detail
            )
            .unwrap();
        }
        let failed = self.failures().count();
        writeln!(
            out,
            "{} checks, {} failed: {}",
            self.checks.len(),
            failed,
            if failed == 0 { "PASS" } else { "FAIL" }
        )
        .unwrap();
        out
    }
}

/// Outcome of a single check before timing is attached.
struct Outcome {
    passed: bool,
    deviation: f64,
    detail: String,
}

impl Outcome {
    fn exact(mismatches: usize, what: impl Into<String>) -> Self {
        Self {
            passed: mismatches == 0,
            deviation: mismatches as f64,
            detail: what.into(),
        }
    }

    fn within(deviation: f64, tolerance: f64, what: impl Into<String>) -> Self {
        Self {
            passed: deviation <= tolerance,
            deviation,
            detail: format!("{} (tol {tolerance:e})", what.into()),
        }
    }
}

type Check = fn(VerifyScale) -> Result<Outcome>;

const CHECKS: &[(&str, Check)] = &[
    ("graph.permutation_conjugation", check_graph_permutation),
    ("graph.distances", check_distances),
    ("sparse.dense_round_trip", check_sparse_round_trip),
    ("product.kronecker_equivalence", check_kronecker),
    ("product.closed_form", check_closed_form),
    ("product.slot_disjointness", check_disjointness),
    ("product.edge_counts", check_edge_counts),
    ("product.permutation_equivariance", check_adjacency_equivariance),
    ("product.sampling_mask", check_mask),
    ("spectral.eigensolver", check_eigensolver),
    ("pe.spectrum_sum_law", check_spectrum_sum),
    ("pe.factorization", check_factorization),
    ("pe.tuple_specializations", check_tuple_specializations),
    ("pe.permutation_covariance", check_pe_permutation),
    ("pe.node_marks", check_node_marks),
    ("pe.allocation_bound", check_pe_allocation),
    ("pe.cost_scaling", check_pe_scaling),
    ("sab.dense_oracles", check_dense_oracles),
    ("sab.attention_row_stochastic", check_row_stochastic),
    ("sab.permutation_equivariance", check_sab_equivariance),
    ("sab.pooled_invariance", check_pooled_invariance),
    ("sab.masked_forward", check_masked_forward),
    ("sab.gradient", check_gradients),
    ("sab.rgcn_simulation", check_rgcn_simulation),
    ("cli.determinism", check_determinism),
];

/// Names of every check, in execution order.
pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(name, _)| *name).collect()
}

pub fn run_verify(scale: VerifyScale) -> VerifyReport {
    run_verify_jobs(scale, 1)
}

/// Runs the checks on up to `jobs` threads. Timing-sensitive checks always
/// run alone afterwards so they never compete for cores.
pub fn run_verify_jobs(scale: VerifyScale, jobs: usize) -> VerifyReport {
    let jobs = jobs.max(1);
    let (timed, untimed): (Vec<usize>, Vec<usize>) =
        (0..CHECKS.len()).partition(|&i| TIMING_SENSITIVE.contains(&CHECKS[i].0));
    let mut results: Vec<Option<CheckResult>> = vec![None; CHECKS.len()];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|worker| {
                let mine: Vec<usize> = untimed.iter().copied().skip(worker).step_by(jobs).collect();
                scope.spawn(move || mine.into_iter().map(|i| (i, run_check(i, scale))).collect::<Vec<_>>())
            })
            .collect();
        for handle in handles {
            for (i, result) in handle.join().expect("verification thread panicked") {
                results[i] = Some(result);
            }
        }
    });
    for i in timed {
        results[i] = Some(run_check(i, scale));
    }
    VerifyReport {
        checks: results.into_iter().map(|r| r.expect("every check ran")).collect(),
    }
}

const TIMING_SENSITIVE: &[&str] = &["pe.cost_scaling"];

fn run_check(index: usize, scale: VerifyScale) -> CheckResult {
    let (name, check) = CHECKS[index];
    let start = Instant::now();
    let outcome = check(scale).unwrap_or_else(|e| Outcome {
        passed: false,
        deviation: f64::NAN,
        detail: e.to_string(),
    });
    CheckResult {
        name,
        passed: outcome.passed,
        max_deviation: outcome.deviation,
        elapsed: start.elapsed(),
        detail: outcome.detail,
    }
}

fn random_graphs(count: usize, min_n: usize, max_n: usize, salt: u64) -> impl Iterator<Item = Graph> {
    (0..count as u64).map(move |i| Graph::random(min_n, max_n, salt.wrapping_mul(1000).wrapping_add(i)))
}

fn count_mismatches(a: &Array2<u8>, b: &Array2<u8>) -> usize {
    if a.dim() != b.dim() {
        return usize::MAX;
    }
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn check_graph_permutation(scale: VerifyScale) -> Result<Outcome> {
    let mut mismatches = 0;
    let mut rng = rng::seeded(1);
    for g in random_graphs(scale.pick(20, 100), 1, 10, 1) {
        let perm = rng::random_permutation(&mut rng, g.n());
        let a = dense_adjacency(&g);
        let pa = dense_adjacency(&permute_graph(&g, &perm)?);
        for u in 0..g.n() {
            for v in 0..g.n() {
                mismatches += usize::from(pa[[perm[u], perm[v]]] != a[[u, v]]);
            }
        }
    }
    Ok(Outcome::exact(mismatches, "A(π g) = P A Pᵀ"))
}

#[allow(clippy::needless_range_loop)]
fn check_distances(scale: VerifyScale) -> Result<Outcome> {
    let mut mismatches = 0;
    for g in random_graphs(scale.pick(40, 200), 1, 10, 2) {
        let n = g.n();
        // Floyd–Warshall reference
        let mut fw = vec![vec![n; n]; n];
        for (v, row) in fw.iter_mut().enumerate() {
            row[v] = 0;
        }
        for (u, v) in g.edges() {
            fw[u][v] = 1;
            fw[v][u] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if fw[i][k] < n && fw[k][j] < n && fw[i][k] + fw[k][j] < fw[i][j] {
                        fw[i][j] = fw[i][k] + fw[k][j];
                    }
                }
            }
        }
        let d = shortest_path_distances(&g);
        for i in 0..n {
            for j in 0..n {
                mismatches += usize::from(d.get(i, j) != fw[i][j] || d.get(i, j) != d.get(j, i));
            }
        }
    }
    Ok(Outcome::exact(mismatches, "BFS vs Floyd–Warshall, symmetric"))
}

fn check_sparse_round_trip(scale: VerifyScale) -> Result<Outcome> {
    let mut rng = rng::seeded(3);
    let mut mismatches = 0;
    for _ in 0..scale.pick(20, 100) {
        let m = uniform_matrix(&mut rng, 7, 5, 1.0).mapv(|x| u8::from(x > 0.3));
        let sparse = SparseAdjacency::from_dense(m.view())?;
        mismatches += count_mismatches(&sparse.to_dense(), &m);
        mismatches += usize::from(SparseAdjacency::read_coo(sparse.to_coo_string().as_bytes())? != sparse);
    }
    Ok(Outcome::exact(mismatches, "dense → sparse → dense and COO text"))
}

fn check_kronecker(scale: VerifyScale) -> Result<Outcome> {
    let mut mismatches = 0;
    for g in random_graphs(scale.pick(50, 200), 2, 8, 4) {
        let a = dense_adjacency(&g);
        let eye = oracle::identity(g.n());
        let i_a = oracle::kron(eye.view(), a.view());
        let a_i = oracle::kron(a.view(), eye.view());
        mismatches += count_mismatches(&internal_adjacency(&g).to_dense(), &i_a);
        mismatches += count_mismatches(&external_adjacency(&g).to_dense(), &a_i);
        mismatches += count_mismatches(&cartesian_product_adjacency(&g).to_dense(), &(a_i + i_a));
        mismatches += count_mismatches(&internal_adjacency(&g).to_dense(), &oracle::internal(&g));
        mismatches += count_mismatches(&external_adjacency(&g).to_dense(), &oracle::external(&g));
        mismatches += count_mismatches(&point_adjacency(g.n()).to_dense(), &oracle::point(g.n()));
    }
    Ok(Outcome::exact(mismatches, "I⊗A, A⊗I, A⊗I+I⊗A and point rule"))
}

fn check_closed_form(scale: VerifyScale) -> Result<Outcome> {
    let mut mismatches = 0;
    for g in random_graphs(scale.pick(20, 60), 2, 4, 5) {
        let a = dense_adjacency(&g);
        for order in 1..=3 {
            mismatches += count_mismatches(
                &cartesian_operator(a.view(), order)?,
                &closed_form_cartesian(a.view(), order)?,
            );
        }
        mismatches += count_mismatches(&cartesian_operator(a.view(), 2)?, &oracle::cartesian(&g));
    }
    let cube = cartesian_operator(dense_adjacency(&Graph::path(2)).view(), 3)?;
    mismatches += count_mismatches(&cube, &oracle::hypercube(3));
    Ok(Outcome::exact(
        mismatches,
        "recursive Cᴷ = Σ slot adjacencies; P2 at K=3 is Q3",
    ))
}

fn check_disjointness(_: VerifyScale) -> Result<Outcome> {
    let mut overlap = 0usize;
    for n in 1..=4 {
        for seed in 0..5 {
            let g = Graph::erdos_renyi(n, 0.6, seed);
            let a = dense_adjacency(&g);
            for order in 1..=3 {
                let slots: Vec<Array2<u8>> = (0..order)
                    .map(|k| k_factor_adjacency(a.view(), k, order))
                    .collect::<Result<_>>()?;
                for k in 0..order {
                    for k2 in k + 1..order {
                        overlap += slots[k]
                            .iter()
                            .zip(&slots[k2])
                            .map(|(x, y)| usize::from(x * y))
                            .sum::<usize>();
                    }
                }
            }
        }
    }
    Ok(Outcome::exact(overlap, "⟨Aᵏ, Aᵏ'⟩_F = 0 for k ≠ k'"))
}

fn check_edge_counts(scale: VerifyScale) -> Result<Outcome> {
    let mut mismatches = 0;
    let fixed = [
        Graph::path(2),
        Graph::path(4),
        Graph::complete(3),
        Graph::cycle(5),
        Graph::empty(3),
    ];
    for g in fixed.into_iter().chain(random_graphs(scale.pick(30, 100), 1, 12, 6)) {
        let n = g.n();
        let directed = 2 * g.num_edges();
        let bundle = ProductGraphBundle::new(&g);
        mismatches += usize::from(bundle.internal.nnz() != n * directed);
        mismatches += usize::from(bundle.external.nnz() != n * directed);
        mismatches += usize::from(bundle.point.nnz() != n * n);
        mismatches += usize::from(bundle.internal.overlap(&bundle.external)? != 0);
        mismatches += usize::from(!bundle.internal.is_symmetric() || !bundle.external.is_symmetric());
    }
    Ok(Outcome::exact(mismatches, "nnz = 2n|E|, 2n|E|, n²"))
}

fn check_adjacency_equivariance(scale: VerifyScale) -> Result<Outcome> {
    let mut rng = rng::seeded(7);
    let mut mismatches = 0;
    for g in random_graphs(scale.pick(20, 100), 1, 8, 7) {
        let perm = rng::random_permutation(&mut rng, g.n());
        let lhs = ProductGraphBundle::new(&permute_graph(&g, &perm)?);
        let rhs = ProductGraphBundle::new(&g).permuted(&perm)?;
        mismatches += usize::from(lhs != rhs);
    }
    Ok(Outcome::exact(mismatches, "bundle(π g) = Π bundle(g) Πᵀ"))
}

fn check_mask(scale: VerifyScale) -> Result<Outcome> {
    let mut violations = 0;
    for (i, g) in random_graphs(scale.pick(20, 100), 1, 8, 8).enumerate() {
        let n = g.n();
        let mask = SamplingMask::sample(n, 0.5, i as u64)?;
        for adj in [cartesian_product_adjacency(&g), point_adjacency(n)] {
            let once = apply_sampling_mask(&adj, &mask)?;
            violations += usize::from(apply_sampling_mask(&once, &mask)? != once);
            let expected = adj
                .entries()
                .iter()
                .filter(|(r, c)| mask.is_sampled(r / n) && mask.is_sampled(c / n))
                .count();
            violations += usize::from(once.nnz() != expected);
            violations += once
                .entries()
                .iter()
                .filter(|(r, c)| !mask.is_sampled(r / n) || !mask.is_sampled(c / n))
                .count();
            violations += usize::from(apply_sampling_mask(&adj, &SamplingMask::all(n))? != adj);
        }
    }
    Ok(Outcome::exact(
        violations,
        "entries kept iff both subgraphs sampled; idempotent",
    ))
}

fn check_eigensolver(scale: VerifyScale) -> Result<Outcome> {
    let mut worst = 0.0_f64;
    for g in random_graphs(scale.pick(20, 100), 1, 24, 9) {
        let l = laplacian(&g);
        let eig = eig_sym(l.view())?;
        let inf_norm = l
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(1.0, f64::max);
        worst = worst.max(eig.max_residual(l.view()) / (1e-8 * inf_norm));
        worst = worst.max(eig.orthonormality_error() / 1e-10);
        worst = worst.max(-eig.values[0] / 1e-10);
    }
    Ok(Outcome::within(
        worst,
        1.0,
        "residual, orthonormality and PSD, as a fraction of tolerance",
    ))
}

fn check_spectrum_sum(scale: VerifyScale) -> Result<Outcome> {
    let fixed = [Graph::path(2), Graph::path(4), Graph::complete(3), Graph::cycle(5)];
    let mut worst_value = 0.0_f64;
    let mut worst_projector = 0.0_f64;
    for g in fixed.into_iter().chain(random_graphs(scale.pick(20, 60), 2, 8, 10)) {
        let report = pe_oracle_check(&g)?;
        worst_value = worst_value.max(report.max_eigenvalue_deviation);
        worst_projector = worst_projector.max(report.max_projector_deviation);
    }
    let p2 = product_pe(&Graph::path(2), 4)?.eigenvalues;
    let exact = p2 == [0.0, 2.0, 2.0, 4.0];
    Ok(Outcome {
        passed: exact && worst_value <= 1e-8 && worst_projector <= 1e-6,
        deviation: worst_value.max(worst_projector),
        detail: format!(
            "eigenvalues {worst_value:.2e} (tol 1e-8), projectors {worst_projector:.2e} (tol 1e-6), P2 {p2:?}"
        ),
    })
}

fn check_factorization(scale: VerifyScale) -> Result<Outcome> {
    let mut worst = 0.0_f64;
    for g in random_graphs(scale.pick(10, 40), 2, 6, 11) {
        let n = g.n();
        let product = product_pe(&g, n * n)?;
        let concat = concatenation_pe(&g, n)?;
        for col in product.data.columns() {
            // best matching pair of halves
            let mut best = f64::INFINITY;
            for i in 0..n {
                for j in 0..n {
                    let dev = (0..n * n)
                        .map(|r| (col[r] - concat.data[[r, i]] * concat.data[[r, n + j]]).abs())
                        .fold(0.0, f64::max);
                    best = best.min(dev);
                }
            }
            worst = worst.max(best);
        }
    }
    Ok(Outcome::within(worst, 1e-12, "product column = s-half ⊙ v-half"))
}

fn check_tuple_specializations(scale: VerifyScale) -> Result<Outcome> {
    let mut mismatches = 0;
    for g in random_graphs(scale.pick(10, 40), 1, 8, 12) {
        let n = g.n();
        mismatches += usize::from(k_tuple_pe(&g, 2, n * n)? != product_pe(&g, n * n)?);
        let eig = base_spectrum(&g)?;
        let k1 = k_tuple_pe(&g, 1, n)?;
        mismatches += usize::from(k1.data != eig.vectors || k1.eigenvalues != eig.values.to_vec());
    }
    let cube = k_tuple_pe(&Graph::path(2), 3, 8)?;
    let want = [0.0, 2.0, 2.0, 2.0, 4.0, 4.0, 4.0, 6.0];
    mismatches += cube
        .eigenvalues
        .iter()
        .zip(want)
        .filter(|(a, b)| (*a - b).abs() > 1e-10)
        .count();
    Ok(Outcome::exact(mismatches, "K=2 ≡ product, K=1 ≡ base, Q3 spectrum"))
}

fn check_pe_permutation(scale: VerifyScale) -> Result<Outcome> {
    let mut rng = rng::seeded(13);
    let mut worst = 0.0_f64;
    for g in random_graphs(scale.pick(30, 100), 2, 8, 13) {
        let n = g.n();
        let perm = rng::random_permutation(&mut rng, n);
        let lifted = product_permutation(&perm)?;
        let original = product_pe(&g, n * n)?;
        let permuted = product_pe(&permute_graph(&g, &perm)?, n * n)?;
        worst = worst.max(
            original
                .eigenvalues
                .iter()
                .zip(&permuted.eigenvalues)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
        let mut moved = original.data.clone();
        for (old, &new) in lifted.iter().enumerate() {
            moved.row_mut(new).assign(&original.data.row(old));
        }
        let clusters = eigenvalue_clusters(&original.eigenvalues, PeOracleReport::PROJECTOR_TOLERANCE);
        worst = worst.max(projector_deviation(permuted.data.view(), moved.view(), &clusters));
        // columns with a unique label agree up to sign
        for &(lo, hi) in &clusters {
            if hi - lo == 1 {
                let dev = (0..n * n)
                    .map(|r| (permuted.data[[r, lo]].abs() - moved[[r, lo]].abs()).abs())
                    .fold(0.0, f64::max);
                worst = worst.max(dev);
            }
        }
    }
    Ok(Outcome::within(
        worst,
        PeOracleReport::PROJECTOR_TOLERANCE,
        "labels, per-label projectors and |entries| of unique-label columns of PE(π g) vs Π PE(g)",
    ))
}

fn check_node_marks(scale: VerifyScale) -> Result<Outcome> {
    let mut mismatches = 0;
    for g in random_graphs(scale.pick(20, 100), 1, 10, 14) {
        let n = g.n();
        let marks = node_mark_indices(&g);
        let dist = shortest_path_distances(&g);
        for s in 0..n {
            mismatches += usize::from(marks.get(s, s) != 0);
            for v in 0..n {
                mismatches += usize::from(marks.get(s, v) != dist.get(s, v).min(n));
                mismatches += usize::from(marks.get(s, v) >= marks.vocabulary());
            }
        }
    }
    Ok(Outcome::exact(
        mismatches,
        "mark(s, v) = dist(s, v) clipped to n, mark(v, v) = 0",
    ))
}

fn check_pe_allocation(_: VerifyScale) -> Result<Outcome> {
    let mut detail = Vec::new();
    let mut passed = true;
    let mut worst_ratio = 0.0_f64;
    for n in [16usize, 32, 64] {
        let g = Graph::erdos_renyi(n, 0.3, n as u64);
        let (result, peak) = crate::alloc_probe::track(|| product_pe(&g, 8));
        result?;
        let Some(peak) = peak else {
            return Ok(Outcome {
                passed: false,
                deviation: f64::NAN,
                detail: "allocation probe not installed".into(),
            });
        };
        let bound = n.pow(4);
        passed &= peak < bound;
        worst_ratio = worst_ratio.max(peak as f64 / bound as f64);
        detail.push(format!("n={n}: {peak} B"));
    }
    Ok(Outcome {
        passed,
        deviation: worst_ratio,
        detail: format!("largest allocation < n⁴ bytes ({})", detail.join(", ")),
    })
}

/// Best-of-`repeats` wall time of `product_pe(G(n, 0.3), 8)`.
pub fn time_product_pe(n: usize, repeats: usize) -> Result<Duration> {
    let g = Graph::erdos_renyi(n, 0.3, n as u64);
    let mut best = Duration::MAX;
    for _ in 0..repeats {
        let start = Instant::now();
        std::hint::black_box(product_pe(&g, 8)?);
        best = best.min(start.elapsed());
    }
    Ok(best)
}

/// Allowed growth of product-PE wall time per doubling of `n`.
pub const MAX_DOUBLING_GROWTH: f64 = 6.0;

fn check_pe_scaling(scale: VerifyScale) -> Result<Outcome> {
    let repeats = scale.pick(5, 15);
    let times: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| time_product_pe(n, repeats).map(|d| d.as_secs_f64()))
        .collect::<Result<_>>()?;
    let ratios = [times[1] / times[0], times[2] / times[1]];
    let worst = ratios[0].max(ratios[1]);
    Ok(Outcome::within(
        worst,
        MAX_DOUBLING_GROWTH,
        format!("time ratios per doubling {:.2}, {:.2}", ratios[0], ratios[1]),
    ))
}

fn random_state(rng: &mut rng::SplitMix64, n: usize, d: usize) -> Result<ProductState> {
    ProductState::new(n, uniform_matrix(rng, n * n, d, 1.0))
}

fn check_dense_oracles(scale: VerifyScale) -> Result<Outcome> {
    let mut worst = 0.0_f64;
    for (seed, g) in random_graphs(scale.pick(20, 60), 1, 5, 14).enumerate() {
        let mut rng = rng::seeded(seed as u64);
        let n = g.n();
        let x = uniform_matrix(&mut rng, n * n, 3, 1.0);
        let bundle = ProductGraphBundle::new(&g);
        let params = AttentionParams::seeded(&mut rng, 3, 8, 4)?;
        for adj in [&bundle.internal, &bundle.external, &bundle.point] {
            let (sparse, _) = sparse_attention_cached(x.view(), adj, &params)?;
            worst = worst.max(oracle::max_abs_diff(
                sparse.view(),
                oracle::dense_attention(x.view(), adj.to_dense().view(), &params).view(),
            ));
        }
        let mlp = Mlp::seeded(&mut rng, 3, 4, 4);
        let eps = rng::uniform_symmetric(&mut rng, 1.0);
        let sparse = point_update(x.view(), &bundle.point, eps, &mlp)?;
        let dense = oracle::dense_point_update(x.view(), bundle.point.to_dense().view(), eps, &mlp);
        worst = worst.max(oracle::max_abs_diff(sparse.view(), dense.view()));
        let rgcn = RGCNParameters {
            w_self: uniform_matrix(&mut rng, 3, 5, 1.0),
            w_internal: uniform_matrix(&mut rng, 3, 5, 1.0),
            w_external: uniform_matrix(&mut rng, 3, 5, 1.0),
            w_point: uniform_matrix(&mut rng, 3, 5, 1.0),
        };
        let sparse = rgcn_layer(x.view(), &bundle, &rgcn)?;
        let dense = oracle::dense_rgcn(
            x.view(),
            bundle.internal.to_dense().view(),
            bundle.external.to_dense().view(),
            bundle.point.to_dense().view(),
            &rgcn,
        );
        worst = worst.max(oracle::max_abs_diff(sparse.view(), dense.view()));
    }
    Ok(Outcome::within(
        worst,
        1e-12,
        "attention, point and RGCN vs dense masked",
    ))
}

fn check_row_stochastic(scale: VerifyScale) -> Result<Outcome> {
    let mut worst = 0.0_f64;
    for (seed, g) in random_graphs(scale.pick(20, 60), 1, 6, 15).enumerate() {
        let mut rng = rng::seeded(seed as u64);
        let n = g.n();
        let x = uniform_matrix(&mut rng, n * n, 4, 2.0);
        let params = AttentionParams::seeded(&mut rng, 4, 8, 4)?;
        for adj in [internal_adjacency(&g), external_adjacency(&g)] {
            let (_, cache) = sparse_attention_cached(x.view(), &adj, &params)?;
            let mut edge = 0;
            for i in 0..adj.rows() {
                let deg = adj.row_indices(i).len();
                for h in 0..4 {
                    if deg == 0 {
                        continue;
                    }
                    let weights: Vec<f64> = (edge..edge + deg).map(|e| cache.weights[e * 4 + h]).collect();
                    if weights.iter().any(|&w| w < 0.0) {
                        worst = f64::INFINITY;
                    }
                    worst = worst.max((weights.iter().sum::<f64>() - 1.0).abs());
                }
                edge += deg;
            }
        }
    }
    Ok(Outcome::within(worst, 1e-12, "Σ_j α_ij = 1, α ≥ 0"))
}

fn check_sab_equivariance(scale: VerifyScale) -> Result<Outcome> {
    let mut worst = 0.0_f64;
    for (seed, g) in random_graphs(scale.pick(10, 40), 2, 5, 16).enumerate() {
        let mut rng = rng::seeded(seed as u64);
        let n = g.n();
        let perm = rng::random_permutation(&mut rng, n);
        let x = random_state(&mut rng, n, 4)?;
        let params = SABParameters::seeded(&mut rng, 4, 8, 4)?;
        let bundle = ProductGraphBundle::new(&g);
        let lhs = sab_forward(&x.permuted(&perm)?, &bundle.permuted(&perm)?, &params)?;
        let rhs = sab_forward(&x, &bundle, &params)?.permuted(&perm)?;
        worst = worst.max(oracle::max_abs_diff(lhs.features(), rhs.features()));
    }
    Ok(Outcome::within(worst, 1e-10, "SAB(Π X, Π A) = Π SAB(X, A)"))
}

/// Pooled output of the encoder + stack with explicit inputs; used to test
/// invariance where the positional encoding is permuted along with the
/// graph rather than recomputed.
fn pooled_with_pe(
    g: &Graph,
    pe: &crate::pe::PEMatrix,
    encoder: &Encoder,
    stack: &SabStack,
    variant: PoolVariant,
) -> Result<ndarray::Array1<f64>> {
    let marks = node_mark_indices(g);
    let input = encoder_input(g, pe, &marks, encoder.mark_table.view())?;
    let x0 = ProductState::new(g.n(), encoder.linear.forward(input.view())?)?;
    stack.forward(&x0, &ProductGraphBundle::new(g), variant, None)
}

fn check_pooled_invariance(scale: VerifyScale) -> Result<Outcome> {
    let mut worst = 0.0_f64;
    let graphs = [Graph::path(4), Graph::complete(3), Graph::cycle(5)];
    for (gi, g) in graphs
        .into_iter()
        .chain(random_graphs(scale.pick(2, 7), 3, 6, 17))
        .enumerate()
    {
        let mut rng = rng::seeded(100 + gi as u64);
        let n = g.n();
        let g = g.with_features(uniform_matrix(&mut rng, n, 2, 1.0))?;
        let pe = product_pe(&g, 3.min(n * n))?;
        let encoder = Encoder::seeded(&mut rng, 2, pe.k(), n + 1, 3, 8);
        let stack = SabStack::seeded(&mut rng, 8, 8, 4, 2)?;
        for variant in [PoolVariant::SumSum, PoolVariant::MeanSum] {
            let base = pooled_with_pe(&g, &pe, &encoder, &stack, variant)?;
            for _ in 0..scale.pick(10, 20) {
                let perm = rng::random_permutation(&mut rng, n);
                let lifted = product_permutation(&perm)?;
                let mut pe_perm = pe.clone();
                for (old, &new) in lifted.iter().enumerate() {
                    pe_perm.data.row_mut(new).assign(&pe.data.row(old));
                }
                let out = pooled_with_pe(&permute_graph(&g, &perm)?, &pe_perm, &encoder, &stack, variant)?;
                worst = worst.max((&out - &base).iter().fold(0.0, |m, x| m.max(x.abs())));
            }
        }
    }
    Ok(Outcome::within(worst, 1e-10, "pooled output under node permutation"))
}

fn check_masked_forward(scale: VerifyScale) -> Result<Outcome> {
    let mut worst = 0.0_f64;
    let mut mismatches = 0;
    for (seed, g) in random_graphs(scale.pick(10, 40), 2, 6, 18).enumerate() {
        let mut rng = rng::seeded(seed as u64);
        let n = g.n();
        let x = random_state(&mut rng, n, 4)?;
        let params = SABParameters::seeded(&mut rng, 4, 8, 4)?;
        let bundle = ProductGraphBundle::new(&g);

        let full = SamplingMask::all(n);
        let masked_full = sab_forward(&x, &bundle.masked(&full)?, &params)?;
        mismatches += usize::from(masked_full != sab_forward(&x, &bundle, &params)?);

        let mask = SamplingMask::sample(n, 0.5, seed as u64)?;
        let rows = mask.product_rows();
        let masked = bundle.masked(&mask)?;
        let whole = sab_forward(&x, &masked, &params)?;
        let compact = |a: &SparseAdjacency| a.principal_submatrix(&rows);
        let x_rows = x.features().select(Axis(0), &rows);
        let (restricted, _) = sab_forward_rows(
            x_rows.view(),
            &compact(&masked.internal)?,
            &compact(&masked.external)?,
            &compact(&masked.point)?,
            &params,
        )?;
        let whole_rows = whole.features().select(Axis(0), &rows);
        worst = worst.max(oracle::max_abs_diff(restricted.view(), whole_rows.view()));
    }
    Ok(Outcome {
        passed: mismatches == 0 && worst <= 1e-12,
        deviation: worst.max(mismatches as f64),
        detail: format!("full mask bit-identical ({mismatches} mismatches); restricted system within {worst:.1e}"),
    })
}

fn check_gradients(scale: VerifyScale) -> Result<Outcome> {
    let mut worst = 0.0_f64;
    let mut worst_name = String::new();
    for g in [Graph::path(2), Graph::path(4), Graph::complete(3)] {
        for seed in 0..scale.pick(2, 5) as u64 {
            let mut rng = rng::seeded(seed);
            let n = g.n();
            let x0 = random_state(&mut rng, n, 3)?;
            let bundle = ProductGraphBundle::new(&g);
            let mut stack = SabStack::seeded(&mut rng, 3, 4, 2, 2)?;
            for layer in &mut stack.layers {
                layer.eps = rng::uniform_symmetric(&mut rng, 0.5);
            }
            let theta = stack.to_flat();
            let objective = PooledSabObjective {
                stack,
                x0: &x0,
                bundle: &bundle,
                variant: PoolVariant::MeanSum,
            };
            let report = grad_check(&objective, &theta, DEFAULT_TOLERANCE)?;
            if report.max_relative_error > worst {
                worst = report.max_relative_error;
                worst_name = report.worst_parameter;
            }
        }
    }
    Ok(Outcome::within(
        worst,
        DEFAULT_TOLERANCE,
        format!("central differences, worst at {worst_name}"),
    ))
}

/// All labelled connected graphs on three nodes.
pub fn connected_three_node_graphs() -> Vec<Graph> {
    let pairs = [(0, 1), (0, 2), (1, 2)];
    (1u8..8)
        .map(|bits| {
            Graph::new(
                3,
                pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| bits >> i & 1 == 1)
                    .map(|(_, &e)| e),
            )
            .unwrap()
        })
        .filter(|g| (0..3).all(|v| shortest_path_distances(g).is_reachable(0, v)))
        .collect()
}

/// Canonical form of the GNN-SSWL+ update input at `(s, v)` under a
/// colouring: own colour, root colour, and the colour multisets of
/// in-subgraph and cross-subgraph neighbours.
type SswlKey = (usize, usize, Vec<usize>, Vec<usize>);

fn sswl_key(g: &Graph, colours: &[usize], s: usize, v: usize) -> SswlKey {
    let n = g.n();
    let mut inner: Vec<usize> = (0..n)
        .filter(|&w| g.has_edge(v, w))
        .map(|w| colours[s * n + w])
        .collect();
    let mut outer: Vec<usize> = (0..n)
        .filter(|&t| g.has_edge(s, t))
        .map(|t| colours[t * n + v])
        .collect();
    inner.sort_unstable();
    outer.sort_unstable();
    (colours[s * n + v], colours[v * n + v], inner, outer)
}

fn check_rgcn_simulation(_: VerifyScale) -> Result<Outcome> {
    let d = 2;
    let mut violations = 0;
    for g in connected_three_node_graphs() {
        let bundle = ProductGraphBundle::new(&g);
        let params = RGCNParameters::concatenating(d);
        for code in 0..(1usize << 9) {
            let colours: Vec<usize> = (0..9).map(|r| code >> r & 1).collect();
            let x = Array2::from_shape_fn((9, d), |(r, c)| f64::from(u8::from(colours[r] == c)));
            let out = rgcn_layer(x.view(), &bundle, &params)?;
            let expected = ndarray::concatenate![
                Axis(1),
                x,
                bundle.point.matmul(x.view())?,
                bundle.internal.matmul(x.view())?,
                bundle.external.matmul(x.view())?
            ];
            violations += usize::from(out != expected);
            let mut seen: HashMap<Vec<u64>, SswlKey> = HashMap::new();
            let mut by_key: BTreeMap<SswlKey, Vec<u64>> = BTreeMap::new();
            for s in 0..3 {
                for v in 0..3 {
                    let row: Vec<u64> = out.row(s * 3 + v).iter().map(|x| x.to_bits()).collect();
                    let key = sswl_key(&g, &colours, s, v);
                    if let Some(prev) = seen.insert(row.clone(), key.clone()) {
                        violations += usize::from(prev != key);
                    }
                    if let Some(prev) = by_key.insert(key, row.clone()) {
                        violations += usize::from(prev != row);
                    }
                }
            }
        }
    }
    Ok(Outcome::exact(
        violations,
        "block weights give [X, A_pt X, A_G X, A_GS X]; rows ↔ update inputs bijective",
    ))
}

fn check_determinism(scale: VerifyScale) -> Result<Outcome> {
    let mut mismatches = 0;
    for (seed, g) in random_graphs(scale.pick(5, 20), 2, 7, 19).enumerate() {
        let seed = seed as u64;
        let config = crate::pipeline::ForwardConfig {
            seed,
            ..Default::default()
        };
        let run = || -> Result<(Vec<u64>, Vec<usize>, String)> {
            let model = config.build(&g)?;
            let mask = SamplingMask::sample(g.n(), 0.5, seed)?;
            let (pooled, pe) = crate::pipeline::forward_traced(&g, &model, &config, Some(&mask))?;
            Ok((
                pooled.iter().map(|x| x.to_bits()).collect(),
                mask.sampled().to_vec(),
                pe.to_text(),
            ))
        };
        mismatches += usize::from(run()? != run()?);
        mismatches += usize::from(Graph::random(1, 9, seed) != Graph::random(1, 9, seed));
    }
    Ok(Outcome::exact(
        mismatches,
        "graphs, masks, encodings and pooled outputs repeat bit-for-bit",
    ))
}
