//! Simple connected undirected graphs.

use std::collections::VecDeque;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::check::BoundCheck;
use crate::error::{Result, WalkError};

/// A validated simple, connected, undirected graph on vertices `0..n`.
///
/// Neighbour lists are strictly increasing and never contain their owner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreeStats {
    pub d_min: usize,
    pub d_max: usize,
    /// Exactly `2|E| / n`.
    pub d_avg: Ratio<u64>,
}

impl DegreeStats {
    pub fn d_avg_f64(&self) -> f64 {
        *self.d_avg.numer() as f64 / *self.d_avg.denom() as f64
    }

    /// `d_avg / d_min`.
    pub fn imbalance(&self) -> f64 {
        self.d_avg_f64() / self.d_min as f64
    }
}

/// Canonical on-disk form: `{"n": .., "edges": [[i, j], ..]}` with `i < j`
/// and edges sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl Graph {
    /// Validates and builds a graph. Rejects loops, duplicate edges,
    /// out-of-range endpoints and disconnected inputs.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n < 2 {
            return Err(WalkError::TooSmall(n));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(WalkError::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(WalkError::SelfLoop(u));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for (u, nbrs) in adjacency.iter_mut().enumerate() {
            nbrs.sort_unstable();
            if let Some(w) = nbrs.windows(2).find(|w| w[0] == w[1]) {
                let (a, b) = (u.min(w[0]), u.max(w[0]));
                return Err(WalkError::DuplicateEdge(a, b));
            }
        }
        let g = Self { adjacency, edge_count: edges.len() };
        if !g.is_connected() {
            return Err(WalkError::Disconnected);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges `(i, j)` with `i < j` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
            .collect()
    }

    pub fn degree_stats(&self) -> DegreeStats {
        let degrees = self.degrees();
        DegreeStats {
            d_min: *degrees.iter().min().expect("n >= 2"),
            d_max: *degrees.iter().max().expect("n >= 2"),
            d_avg: Ratio::new(2 * self.edge_count as u64, self.n() as u64),
        }
    }

    /// BFS distances from `source`. All finite because the graph is connected.
    pub fn distances(&self, source: usize) -> Vec<usize> {
        bfs(&self.adjacency, source)
            .into_iter()
            .map(|d| d.expect("connected graph"))
            .collect()
    }

    pub fn diameter(&self) -> usize {
        (0..self.n())
            .map(|s| self.distances(s).into_iter().max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Relabels vertex `v` as `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let edges: Vec<_> = self.edges().into_iter().map(|(u, v)| (perm[u], perm[v])).collect();
        Self::new(self.n(), &edges)
    }

    /// Copy of the graph with one edge removed; fails if that disconnects it.
    pub fn without_edge(&self, u: usize, v: usize) -> Result<Self> {
        let (a, b) = (u.min(v), u.max(v));
        let edges: Vec<_> = self.edges().into_iter().filter(|&e| e != (a, b)).collect();
        Self::new(self.n(), &edges)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson { n: self.n(), edges: self.edges().into_iter().map(|(u, v)| [u, v]).collect() }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        let edges: Vec<_> = json.edges.iter().map(|e| (e[0], e[1])).collect();
        Self::new(json.n, &edges)
    }

    /// Canonical JSON text (single line, trailing newline).
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string(&self.to_json()).expect("graph json");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(text)?)
    }

    fn is_connected(&self) -> bool {
        bfs(&self.adjacency, 0).iter().all(Option::is_some)
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, m={})", self.n(), self.edge_count)
    }
}

pub(crate) fn bfs(adjacency: &[Vec<usize>], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adjacency.len()];
    let mut queue = VecDeque::new();
    dist[source] = Some(0);
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap_or(0);
        for &v in &adjacency[u] {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Geodesic length bound: `diam(G) <= 3n/d_min - 1`.
pub fn check_path_fact(g: &Graph, context: &str) -> BoundCheck {
    let stats = g.degree_stats();
    let rhs = 3.0 * g.n() as f64 / stats.d_min as f64 - 1.0;
    BoundCheck::at_most("path_fact", context, g.diameter() as f64, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> Graph {
        Graph::new(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn k2_has_unit_degrees() {
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        assert_eq!(g.degrees(), vec![1, 1]);
        let s = g.degree_stats();
        assert_eq!((s.d_min, s.d_max, s.d_avg), (1, 1, Ratio::from_integer(1)));
    }

    #[test]
    fn p3_degree_stats() {
        let g = p3();
        assert_eq!(g.degrees(), vec![1, 2, 1]);
        let s = g.degree_stats();
        assert_eq!((s.d_min, s.d_max, s.d_avg), (1, 2, Ratio::new(4, 3)));
    }

    #[test]
    fn star4_degree_stats() {
        let g = Graph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let s = g.degree_stats();
        assert_eq!((s.d_min, s.d_max, s.d_avg), (1, 3, Ratio::new(3, 2)));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(Graph::new(3, &[(0, 1)]), Err(WalkError::Disconnected)));
        assert!(matches!(Graph::new(1, &[]), Err(WalkError::TooSmall(1))));
        assert!(matches!(Graph::new(2, &[(0, 0), (0, 1)]), Err(WalkError::SelfLoop(0))));
        assert!(matches!(Graph::new(2, &[(0, 1), (1, 0)]), Err(WalkError::DuplicateEdge(0, 1))));
        assert!(matches!(
            Graph::new(2, &[(0, 2)]),
            Err(WalkError::VertexOutOfRange { vertex: 2, n: 2 })
        ));
    }

    #[test]
    fn bfs_distances() {
        assert_eq!(p3().distances(0), vec![0, 1, 2]);
        assert_eq!(Graph::new(2, &[(0, 1)]).unwrap().distances(1), vec![1, 0]);
        let c4 = Graph::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(c4.distances(0), vec![0, 1, 2, 1]);
    }

    #[test]
    fn path_fact_examples() {
        let c = check_path_fact(&p3(), "P3");
        assert_eq!((c.lhs, c.rhs, c.pass), (2.0, 8.0, true));
        let c = check_path_fact(&Graph::new(2, &[(0, 1)]).unwrap(), "K2");
        assert_eq!((c.lhs, c.rhs, c.pass), (1.0, 5.0, true));
        let c8: Vec<_> = (0..8).map(|i| (i, (i + 1) % 8)).collect();
        let c = check_path_fact(&Graph::new(8, &c8).unwrap(), "C8");
        assert_eq!((c.lhs, c.rhs, c.pass), (4.0, 11.0, true));
    }

    #[test]
    fn json_is_canonical() {
        let g = Graph::new(3, &[(2, 1), (1, 0)]).unwrap();
        assert_eq!(g.to_json_string(), "{\"n\":3,\"edges\":[[0,1],[1,2]]}\n");
        assert_eq!(Graph::from_json_str(&g.to_json_string()).unwrap(), g);
    }
}
