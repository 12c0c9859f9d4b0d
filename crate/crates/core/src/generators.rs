//! Graph families: the deterministic classics plus random regular graphs
//! (pairing model), lollipops and stretched expanders.

use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WalkError};
use crate::graph::{bfs, Graph};
use crate::rng::{rng_from_seed, split};

/// Rejection budget for the pairing model.
pub const DEFAULT_RETRY_BUDGET: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Path { n: usize },
    Cycle { n: usize },
    Complete { n: usize },
    Star { n: usize },
    /// `d`-regular body on `n/2` vertices with a pendant path of `n/2` vertices.
    Lollipop { d: usize, n: usize },
    /// Random 3-regular base on `n0` vertices, every edge subdivided into `k` edges.
    StretchedExpander { n0: usize, k: usize },
    RandomRegular { n: usize, d: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FamilySpec {
    #[serde(flatten)]
    pub family: Family,
    /// Only consulted by randomized families.
    #[serde(default)]
    pub seed: u64,
}

impl FamilySpec {
    pub fn new(family: Family) -> Self {
        Self { family, seed: 0 }
    }

    pub fn seeded(family: Family, seed: u64) -> Self {
        Self { family, seed }
    }

    pub fn is_randomized(&self) -> bool {
        matches!(
            self.family,
            Family::Lollipop { .. } | Family::StretchedExpander { .. } | Family::RandomRegular { .. }
        )
    }

    /// Stable label used in report rows.
    pub fn label(&self) -> String {
        self.to_string()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(WalkError::InfeasibleSpec(msg));
        match self.family {
            Family::Path { n } | Family::Complete { n } | Family::Star { n } if n < 2 => {
                bad(format!("{self}: need n >= 2"))
            }
            Family::Cycle { n } if n < 3 => bad(format!("{self}: need n >= 3")),
            Family::RandomRegular { n, d } => regular_feasible(n, d).or_else(|m| bad(format!("{self}: {m}"))),
            Family::Lollipop { d, n } => {
                if n % 2 != 0 {
                    return bad(format!("{self}: n must be even"));
                }
                regular_feasible(n / 2, d).or_else(|m| bad(format!("{self}: body {m}")))
            }
            Family::StretchedExpander { n0, k } => {
                if k == 0 {
                    return bad(format!("{self}: k must be >= 1"));
                }
                regular_feasible(n0, 3).or_else(|m| bad(format!("{self}: base {m}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Path { n } => write!(f, "path(n={n})"),
            Family::Cycle { n } => write!(f, "cycle(n={n})"),
            Family::Complete { n } => write!(f, "complete(n={n})"),
            Family::Star { n } => write!(f, "star(n={n})"),
            Family::Lollipop { d, n } => write!(f, "lollipop(d={d},n={n},seed={})", self.seed),
            Family::StretchedExpander { n0, k } => {
                write!(f, "stretched_expander(n0={n0},k={k},seed={})", self.seed)
            }
            Family::RandomRegular { n, d } => write!(f, "random_regular(n={n},d={d},seed={})", self.seed),
        }
    }
}

fn regular_feasible(n: usize, d: usize) -> std::result::Result<(), String> {
    if n < 2 {
        return Err(format!("needs at least 2 vertices, got {n}"));
    }
    if d == 0 || d >= n {
        return Err(format!("degree {d} must lie in 1..{n}"));
    }
    if (n * d) % 2 != 0 {
        return Err(format!("n*d = {} must be even", n * d));
    }
    if d == 1 && n > 2 {
        return Err("a 1-regular graph on more than 2 vertices is disconnected".into());
    }
    Ok(())
}

pub fn generate(spec: &FamilySpec) -> Result<Graph> {
    generate_with_budget(spec, DEFAULT_RETRY_BUDGET)
}

pub fn generate_with_budget(spec: &FamilySpec, budget: usize) -> Result<Graph> {
    spec.validate()?;
    match spec.family {
        Family::Path { n } => Graph::new(n, &(0..n - 1).map(|i| (i, i + 1)).collect::<Vec<_>>()),
        Family::Cycle { n } => Graph::new(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>()),
        Family::Complete { n } => {
            let edges: Vec<_> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
            Graph::new(n, &edges)
        }
        Family::Star { n } => Graph::new(n, &(1..n).map(|i| (0, i)).collect::<Vec<_>>()),
        Family::RandomRegular { n, d } => random_regular(n, d, spec.seed, budget),
        Family::Lollipop { d, n } => {
            let half = n / 2;
            let body = random_regular(half, d, split(spec.seed, 0), budget)?;
            let mut edges = body.edges();
            // Pendant path half, half+1, .., n-1 hanging off vertex 0.
            edges.push((0, half));
            edges.extend((half..n - 1).map(|v| (v, v + 1)));
            Graph::new(n, &edges)
        }
        Family::StretchedExpander { n0, k } => {
            let base = random_regular(n0, 3, split(spec.seed, 0), budget)?;
            subdivide(&base, k)
        }
    }
}

/// Replaces every edge by a path of `k` edges. New vertices are numbered
/// after the originals, edge by edge in canonical order.
pub fn subdivide(base: &Graph, k: usize) -> Result<Graph> {
    assert!(k >= 1, "subdivision length must be positive");
    let mut next = base.n();
    let mut edges = Vec::with_capacity(base.edge_count() * k);
    for (u, v) in base.edges() {
        let mut prev = u;
        for _ in 1..k {
            edges.push((prev, next));
            prev = next;
            next += 1;
        }
        edges.push((prev, v));
    }
    Graph::new(next, &edges)
}

/// Pairing-model `d`-regular graph, rejecting loops, multi-edges and
/// disconnected outcomes. Deterministic in `seed`.
pub fn random_regular(n: usize, d: usize, seed: u64, budget: usize) -> Result<Graph> {
    regular_feasible(n, d).map_err(WalkError::InfeasibleSpec)?;
    let mut rng = rng_from_seed(seed);
    let mut points: Vec<usize> = (0..n * d).map(|p| p / d).collect();
    for _ in 0..budget {
        points.shuffle(&mut rng);
        if let Some(edges) = pairs_if_simple(&points, n) {
            let adjacency = adjacency_of(n, &edges);
            if bfs(&adjacency, 0).iter().all(Option::is_some) {
                return Graph::new(n, &edges);
            }
        }
    }
    Err(WalkError::GenerationFailed(budget))
}

fn pairs_if_simple(points: &[usize], n: usize) -> Option<Vec<(usize, usize)>> {
    let mut seen = vec![Vec::new(); n];
    let mut edges = Vec::with_capacity(points.len() / 2);
    for pair in points.chunks_exact(2) {
        let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
        if u == v || seen[u].contains(&v) {
            return None;
        }
        seen[u].push(v);
        edges.push((u, v));
    }
    Some(edges)
}

fn adjacency_of(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    adj
}
