//! Undirected simple graphs, their JSON file format, breadth-first distances
//! and node relabelling.

use std::collections::{BTreeSet, VecDeque};
use std::io::Read;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// An undirected graph without self loops, with optional node features.
///
/// Edges are stored once as `(u, v)` with `u < v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    features: Option<Array2<f64>>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: i64,
    edges: Vec<[i64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features: Option<Vec<Vec<f64>>>,
}

impl Graph {
    /// Builds a graph from an edge list. Direction and duplicates are ignored.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("graph must have at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Validation(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::Validation(format!("self loop at node {u}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Self {
            n,
            edges: set,
            features: None,
        })
    }

    /// Attaches an `n × d` feature matrix.
    pub fn with_features(mut self, features: Array2<f64>) -> Result<Self> {
        if features.nrows() != self.n {
            return Err(Error::Validation(format!(
                "feature matrix has {} rows, expected {}",
                features.nrows(),
                self.n
            )));
        }
        self.features = Some(features);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn features(&self) -> Option<&Array2<f64>> {
        self.features.as_ref()
    }

    /// Node features, or a single constant column of ones when none are set.
    pub fn features_or_constant(&self) -> Array2<f64> {
        match &self.features {
            Some(f) => f.clone(),
            None => Array2::ones((self.n, 1)),
        }
    }

    /// Sorted neighbor lists.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn to_json(&self) -> String {
        let file = GraphFile {
            n: self.n as i64,
            edges: self.edges.iter().map(|&(u, v)| [u as i64, v as i64]).collect(),
            features: self
                .features
                .as_ref()
                .map(|f| f.rows().into_iter().map(|r| r.to_vec()).collect()),
        };
        serde_json::to_string(&file).expect("graph serialization cannot fail")
    }

    /// Path graph `0 - 1 - … - (n-1)`.
    pub fn path(n: usize) -> Self {
        Self::new(n, (1..n).map(|v| (v - 1, v))).expect("path graph is valid")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 nodes");
        Self::new(n, (0..n).map(|v| (v, (v + 1) % n))).expect("cycle graph is valid")
    }

    pub fn complete(n: usize) -> Self {
        Self::new(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)))).expect("complete graph is valid")
    }

    pub fn empty(n: usize) -> Self {
        Self::new(n, std::iter::empty()).expect("empty graph is valid")
    }

    /// Erdős–Rényi `G(n, p)` drawn from a seeded generator.
    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        Self::new(n, edges).expect("sampled graph is valid")
    }

    /// A seeded random graph with node count drawn uniformly from
    /// `min_n..=max_n` and edge density drawn from `[0.2, 0.8]`.
    pub fn random(min_n: usize, max_n: usize, seed: u64) -> Self {
        let mut rng = rng::seeded(seed ^ 0x5eed_9a4f_0b1e_c7d3);
        let n = rng.gen_range(min_n..=max_n);
        let p = rng.gen_range(0.2..=0.8);
        Self::erdos_renyi(n, p, rng.gen())
    }
}

/// Reads a graph from the JSON graph format: `{"n": .., "edges": [[u, v], ..],
/// "features": [[..], ..]}` with `features` optional.
pub fn load_graph(mut source: impl Read) -> Result<Graph> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::Parse(e.to_string()))?;
    parse_graph(&text)
}

pub fn parse_graph(text: &str) -> Result<Graph> {
    let file: GraphFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.n <= 0 {
        return Err(Error::Validation(format!(
            "node count must be positive, got {}",
            file.n
        )));
    }
    let n = file.n as usize;
    let mut edges = Vec::with_capacity(file.edges.len());
    for [u, v] in file.edges {
        if u < 0 || v < 0 {
            return Err(Error::Validation(format!("negative node index in edge [{u}, {v}]")));
        }
        edges.push((u as usize, v as usize));
    }
    let graph = Graph::new(n, edges)?;
    match file.features {
        None => Ok(graph),
        Some(rows) => {
            let d = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != d) {
                return Err(Error::Validation("feature rows have unequal widths".into()));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            let features =
                Array2::from_shape_vec((rows.len(), d), flat).map_err(|e| Error::Validation(e.to_string()))?;
            graph.with_features(features)
        }
    }
}

/// The symmetric 0/1 adjacency matrix with zero diagonal.
pub fn dense_adjacency(g: &Graph) -> Array2<u8> {
    let mut a = Array2::zeros((g.n, g.n));
    for (u, v) in g.edges() {
        a[[u, v]] = 1;
        a[[v, u]] = 1;
    }
    a
}

/// All-pairs hop distances. Pairs in different components hold
/// [`DistanceMatrix::unreachable`], which equals `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    dist: Vec<usize>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn unreachable(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: usize, v: usize) -> usize {
        self.dist[u * self.n + v]
    }

    pub fn is_reachable(&self, u: usize, v: usize) -> bool {
        self.get(u, v) != self.n
    }

    pub fn as_rows(&self) -> Vec<Vec<usize>> {
        self.dist.chunks(self.n).map(<[usize]>::to_vec).collect()
    }
}

pub fn shortest_path_distances(g: &Graph) -> DistanceMatrix {
    let n = g.n;
    let adj = g.neighbors();
    let mut dist = vec![n; n * n];
    let mut queue = VecDeque::new();
    for source in 0..n {
        let row = &mut dist[source * n..(source + 1) * n];
        row[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if row[w] == n {
                    row[w] = row[u] + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    DistanceMatrix { n, dist }
}

/// Checks that `perm` is a bijection on `0..n`.
pub fn validate_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "length {} does not match node count {n}",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidPermutation(format!("{perm:?} is not a bijection")));
        }
    }
    Ok(())
}

/// Relabels node `u` as `perm[u]`; feature row `u` moves to row `perm[u]`.
pub fn permute_graph(g: &Graph, perm: &[usize]) -> Result<Graph> {
    validate_permutation(perm, g.n)?;
    let mut out = Graph::new(g.n, g.edges().map(|(u, v)| (perm[u], perm[v])))?;
    if let Some(f) = &g.features {
        let mut permuted = Array2::zeros(f.raw_dim());
        for (u, row) in f.rows().into_iter().enumerate() {
            permuted.row_mut(perm[u]).assign(&row);
        }
        out.features = Some(permuted);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn loads_minimal_and_triangle() {
        let p2 = parse_graph(r#"{"n":2,"edges":[[0,1]]}"#).unwrap();
        assert_eq!(p2.n(), 2);
        assert_eq!(p2.edges().collect::<Vec<_>>(), vec![(0, 1)]);

        let k3 = parse_graph(r#"{"n":3,"edges":[[0,1],[1,2],[0,2]]}"#).unwrap();
        assert_eq!(k3, Graph::complete(3));
    }

    #[test]
    fn direction_and_duplicates_collapse() {
        let g = parse_graph(r#"{"n":3,"edges":[[1,0],[0,1],[2,1]]}"#).unwrap();
        assert_eq!(g.num_edges(), 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            parse_graph(r#"{"n":2,"edges":[[0,0]]}"#),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            parse_graph(r#"{"n":2,"edges":[[0,2]]}"#),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            parse_graph(r#"{"n":2,"edges":[[0,1]],"features":[[1.0]]}"#),
            Err(Error::Validation(_))
        ));
        assert!(matches!(parse_graph(r#"{"n":2,"edges":[[0,1]"#), Err(Error::Parse(_))));
        assert!(matches!(
            parse_graph(r#"{"n":2,"edges":[[0,1,1]]}"#),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn features_round_trip_through_json() {
        let g = Graph::path(2).with_features(array![[1.0, 2.0], [3.0, 4.5]]).unwrap();
        assert_eq!(parse_graph(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn dense_adjacency_examples() {
        assert_eq!(dense_adjacency(&Graph::path(2)), array![[0, 1], [1, 0]]);
        assert_eq!(dense_adjacency(&Graph::empty(3)), Array2::<u8>::zeros((3, 3)));
        assert_eq!(
            dense_adjacency(&Graph::complete(3)),
            array![[0, 1, 1], [1, 0, 1], [1, 1, 0]]
        );
    }

    #[test]
    fn distances() {
        assert_eq!(
            shortest_path_distances(&Graph::path(2)).as_rows(),
            vec![vec![0, 1], vec![1, 0]]
        );
        let d = shortest_path_distances(&Graph::empty(2));
        assert_eq!(d.as_rows(), vec![vec![0, 2], vec![2, 0]]);
        assert!(!d.is_reachable(0, 1));
        assert_eq!(shortest_path_distances(&Graph::path(4)).get(0, 3), 3);
    }

    #[test]
    fn permutation_examples() {
        let p2 = Graph::path(2);
        assert_eq!(permute_graph(&p2, &[0, 1]).unwrap(), p2);
        assert_eq!(permute_graph(&p2, &[1, 0]).unwrap(), p2);
        let reversed = permute_graph(&Graph::path(4), &[3, 2, 1, 0]).unwrap();
        assert_eq!(reversed.degrees(), vec![1, 2, 2, 1]);
        assert!(matches!(permute_graph(&p2, &[0, 0]), Err(Error::InvalidPermutation(_))));
    }
}
