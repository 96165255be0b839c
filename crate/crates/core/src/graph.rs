//! Undirected communication graphs and the random connected-graph generator.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::Matrix;

pub const MIN_NODES: usize = 3;
pub const MAX_NODES: usize = 64;

/// Consecutive disconnected draws tolerated before generation gives up.
pub const MAX_REJECTIONS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("node count {0} outside supported range {MIN_NODES}..={MAX_NODES}")]
    NodeCount(usize),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("edge {0}-{1} references a node outside 0..{2}")]
    EdgeOutOfRange(usize, usize, usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("edge {0}-{1} not present")]
    MissingEdge(usize, usize),
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("no connected graph after {0} consecutive rejections (edge probability range too low?)")]
    GenerationFailed(usize),
}

/// Simple undirected graph on nodes `0..n`.
///
/// Edges are stored once as `(i, j)` with `i < j`, sorted lexicographically.
/// Adjacency lists are sorted ascending, which fixes every neighbour summation
/// order downstream.
///
/// Construction does not require connectivity (edge deletion experiments need
/// disconnected graphs); the generator and the dataset loader enforce it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        if !(MIN_NODES..=MAX_NODES).contains(&n) {
            return Err(GraphError::NodeCount(n));
        }
        let mut normalized = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if a >= n || b >= n {
                return Err(GraphError::EdgeOutOfRange(a, b, n));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &normalized {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            n,
            edges: normalized,
            adjacency,
        })
    }

    pub fn complete(n: usize) -> Result<Self, GraphError> {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn path(n: usize) -> Result<Self, GraphError> {
        Self::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn cycle(n: usize) -> Result<Self, GraphError> {
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    /// Star on `n` nodes: centre 0 joined to `n - 1` leaves.
    pub fn star(n: usize) -> Result<Self, GraphError> {
        Self::new(n, (1..n).map(|i| (0, i)))
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbours of `v` in ascending order.
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.n && self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(Option::is_some)
    }

    /// Hop distances from `source`; `None` for unreachable nodes.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap_or(0);
            for &w in &self.adjacency[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// L = D - A.
    pub fn laplacian(&self) -> Matrix {
        laplacian_from_edges(self.n, &self.edges)
    }

    /// Relabels node `v` as `perm[v]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph, GraphError> {
        if perm.len() != self.n {
            return Err(GraphError::InvalidPermutation(format!(
                "length {} for {} nodes",
                perm.len(),
                self.n
            )));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || seen[p] {
                return Err(GraphError::InvalidPermutation(format!("{perm:?} is not a bijection")));
            }
            seen[p] = true;
        }
        Graph::new(self.n, self.edges.iter().map(|&(i, j)| (perm[i], perm[j])))
    }

    pub fn without_edge(&self, a: usize, b: usize) -> Result<Graph, GraphError> {
        let key = (a.min(b), a.max(b));
        if !self.edges.contains(&key) {
            return Err(GraphError::MissingEdge(a, b));
        }
        Graph::new(self.n, self.edges.iter().copied().filter(|&e| e != key))
    }
}

impl fmt::Display for Graph {
    /// `n=<n> edges=<i-j,...>`, the dataset line prefix.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} edges=", self.n)?;
        for (k, (i, j)) in self.edges.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}-{j}")?;
        }
        Ok(())
    }
}

/// Laplacian of an arbitrary edge list on `n` nodes (no node-count bounds).
pub fn laplacian_from_edges(n: usize, edges: &[(usize, usize)]) -> Matrix {
    let mut l = Matrix::zeros(n, n);
    for &(i, j) in edges {
        l[(i, i)] += 1.0;
        l[(j, j)] += 1.0;
        l[(i, j)] -= 1.0;
        l[(j, i)] -= 1.0;
    }
    l
}

/// Parameters of the G(n, p) generator: `n ~ U{n_min..=n_max}`,
/// `p ~ U[p_min, p_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphGenConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub seed: u64,
}

impl Default for GraphGenConfig {
    fn default() -> Self {
        Self {
            n_min: 9,
            n_max: 11,
            p_min: 0.2,
            p_max: 0.6,
            seed: 0,
        }
    }
}

impl GraphGenConfig {
    pub fn with_nodes(n_min: usize, n_max: usize, seed: u64) -> Self {
        Self {
            n_min,
            n_max,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.n_min > self.n_max {
            return Err(GraphError::InvalidConfig(format!(
                "n_min {} > n_max {}",
                self.n_min, self.n_max
            )));
        }
        for n in [self.n_min, self.n_max] {
            if !(MIN_NODES..=MAX_NODES).contains(&n) {
                return Err(GraphError::NodeCount(n));
            }
        }
        let p_ok = |p: f64| p > 0.0 && p <= 1.0;
        if !(p_ok(self.p_min) && p_ok(self.p_max) && self.p_min <= self.p_max) {
            return Err(GraphError::InvalidConfig(format!(
                "edge probability range [{}, {}] must lie in (0, 1]",
                self.p_min, self.p_max
            )));
        }
        Ok(())
    }
}

/// Draws the `draw_index`-th connected graph of the stream defined by `cfg.seed`.
///
/// Node count and edge probability are drawn once per index; edge sets are
/// resampled until connected so the node-count law stays exactly uniform.
pub fn generate_connected_graph(cfg: &GraphGenConfig, draw_index: u64) -> Result<Graph, GraphError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(draw_index);
    let n = rng.gen_range(cfg.n_min..=cfg.n_max);
    let p = if cfg.p_min == cfg.p_max {
        cfg.p_min
    } else {
        rng.gen_range(cfg.p_min..=cfg.p_max)
    };
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for _ in 0..MAX_REJECTIONS {
        edges.clear();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        let g = Graph::new(n, edges.iter().copied())?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(GraphError::GenerationFailed(MAX_REJECTIONS))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_graphs() {
        assert_eq!(Graph::new(2, [(0, 1)]), Err(GraphError::NodeCount(2)));
        assert_eq!(Graph::new(65, []), Err(GraphError::NodeCount(65)));
        assert_eq!(Graph::new(3, [(1, 1)]), Err(GraphError::SelfLoop(1)));
        assert_eq!(Graph::new(3, [(0, 1), (1, 0)]), Err(GraphError::DuplicateEdge(0, 1)));
        assert!(matches!(Graph::new(3, [(0, 3)]), Err(GraphError::EdgeOutOfRange(..))));
    }

    #[test]
    fn connectivity_examples() {
        assert!(Graph::complete(4).unwrap().is_connected());
        assert!(!Graph::new(4, [(0, 1), (2, 3)]).unwrap().is_connected());
        assert!(Graph::path(5).unwrap().is_connected());
    }

    #[test]
    fn laplacian_examples() {
        let l = laplacian_from_edges(2, &[(0, 1)]);
        assert_eq!(l, Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]));

        let k3 = Graph::complete(3).unwrap().laplacian();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(k3[(i, j)], if i == j { 2.0 } else { -1.0 });
            }
        }
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let cfg = GraphGenConfig::default();
        for k in 0..20 {
            let l = generate_connected_graph(&cfg, k).unwrap().laplacian();
            for i in 0..l.rows() {
                assert_eq!(l.row(i).iter().sum::<f64>(), 0.0);
                for j in 0..l.cols() {
                    assert_eq!(l[(i, j)], l[(j, i)]);
                }
            }
        }
    }

    #[test]
    fn permute_relabels_edges() {
        let p3 = Graph::path(3).unwrap();
        assert_eq!(p3.permute(&[0, 1, 2]).unwrap(), p3);
        let swapped = p3.permute(&[1, 0, 2]).unwrap();
        assert_eq!(swapped.edges(), &[(0, 1), (0, 2)]);
        assert!(matches!(p3.permute(&[0, 0, 2]), Err(GraphError::InvalidPermutation(_))));
        assert!(matches!(p3.permute(&[0, 1]), Err(GraphError::InvalidPermutation(_))));
    }

    #[test]
    fn generator_examples() {
        let k3_cfg = GraphGenConfig {
            n_min: 3,
            n_max: 3,
            p_min: 1.0,
            p_max: 1.0,
            seed: 99,
        };
        for k in 0..5 {
            assert_eq!(generate_connected_graph(&k3_cfg, k).unwrap(), Graph::complete(3).unwrap());
        }

        let cfg = GraphGenConfig::with_nodes(9, 11, 7);
        for k in 0..50 {
            let g = generate_connected_graph(&cfg, k).unwrap();
            assert!((9..=11).contains(&g.node_count()));
            assert!(g.is_connected());
            assert_eq!(g, generate_connected_graph(&cfg, k).unwrap());
        }
    }

    #[test]
    fn generator_reports_degenerate_probability() {
        let cfg = GraphGenConfig {
            n_min: 40,
            n_max: 40,
            p_min: 1e-6,
            p_max: 1e-6,
            seed: 1,
        };
        assert_eq!(generate_connected_graph(&cfg, 0), Err(GraphError::GenerationFailed(MAX_REJECTIONS)));
    }

    #[test]
    fn generator_rejects_bad_config() {
        let mut cfg = GraphGenConfig::default();
        cfg.n_min = 12;
        cfg.n_max = 9;
        assert!(generate_connected_graph(&cfg, 0).is_err());
        let cfg = GraphGenConfig {
            p_min: 0.0,
            ..GraphGenConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn display_lists_sorted_edges() {
        let g = Graph::new(4, [(3, 2), (1, 0), (0, 2)]).unwrap();
        assert_eq!(g.to_string(), "n=4 edges=0-1,0-2,2-3");
    }
}
