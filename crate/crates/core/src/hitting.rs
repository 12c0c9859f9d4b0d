//! Hitting times, Green's functions and return probabilities, plus the
//! verifiers for the hitting-time and return-probability bounds.

use std::f64::consts::E;

use rayon::prelude::*;

use crate::chain::{lazy_walk_chain, return_probabilities, spectrum, star_chain, Chain, Spectrum};
use crate::check::BoundCheck;
use crate::error::Result;
use crate::graph::{DegreeStats, Graph};
use crate::linalg::{solve, Matrix};

/// Tolerance for identities that compare two independent numerical routes.
pub const IDENTITY_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct HittingProfile {
    /// Entry `(y, x)` is `E_y[tau_x]`; the diagonal is zero.
    pub expected_hit: Matrix,
    /// `E_pi[tau_x]`.
    pub from_pi: Vec<f64>,
    pub t_hit: f64,
}

impl HittingProfile {
    pub fn hit(&self, from: usize, to: usize) -> f64 {
        self.expected_hit[(from, to)]
    }

    /// `max_{x,y} (E_x[tau_y] + E_y[tau_x])`.
    pub fn max_commute(&self) -> f64 {
        let n = self.from_pi.len();
        let mut best: f64 = 0.0;
        for x in 0..n {
            for y in (x + 1)..n {
                best = best.max(self.hit(x, y) + self.hit(y, x));
            }
        }
        best
    }
}

/// Expected hitting times for every ordered pair, one absorbing solve
/// `(I - Q) h = 1` per target.
pub fn hitting_times(c: &Chain) -> Result<HittingProfile> {
    let n = c.n();
    let columns: Vec<Vec<f64>> = (0..n).into_par_iter().map(|x| hitting_column(c, x)).collect::<Result<_>>()?;
    let mut expected_hit = Matrix::zeros(n, n);
    for (x, col) in columns.iter().enumerate() {
        for (y, &h) in col.iter().enumerate() {
            expected_hit[(y, x)] = h;
        }
    }
    let from_pi: Vec<f64> = (0..n).map(|x| (0..n).map(|y| c.pi()[y] * expected_hit[(y, x)]).sum()).collect();
    let t_hit = expected_hit.as_slice().iter().copied().fold(0.0, f64::max);
    Ok(HittingProfile { expected_hit, from_pi, t_hit })
}

/// `E_y[tau_target]` for all `y`.
pub fn hitting_column(c: &Chain, target: usize) -> Result<Vec<f64>> {
    let n = c.n();
    let others: Vec<usize> = (0..n).filter(|&y| y != target).collect();
    let k = others.len();
    let mut a = Matrix::zeros(k, k);
    for (i, &y) in others.iter().enumerate() {
        for (j, &z) in others.iter().enumerate() {
            a[(i, j)] = if i == j { 1.0 } else { 0.0 } - c.kernel()[(y, z)];
        }
    }
    let h = solve(&a, &vec![1.0; k])?;
    let mut col = vec![0.0; n];
    for (i, &y) in others.iter().enumerate() {
        col[y] = h[i];
    }
    Ok(col)
}

/// `g_t(x,x) = sum_{s=0}^t P^s(x,x)`.
pub fn green_function(c: &Chain, x: usize, t: u64) -> f64 {
    return_probabilities(c, x, t).iter().sum()
}

/// `P^t(x,x) - pi(x)`.
pub fn return_gap(c: &Chain, x: usize, t: u64) -> f64 {
    return_probabilities(c, x, t)[t as usize] - c.pi()[x]
}

/// `ceil` that treats values within 1e-9 above an integer as that integer.
pub fn robust_ceil(v: f64) -> u64 {
    (v - 1e-9).ceil().max(0.0) as u64
}

/// All `t <= min(horizon, 10 ceil(t_rel))`, plus powers of two up to `horizon`.
pub fn verification_grid(horizon: u64, t_rel: f64) -> Vec<u64> {
    let dense = horizon.min(10 * robust_ceil(t_rel));
    let mut grid: Vec<u64> = (0..=dense).collect();
    let mut p = 1u64;
    while p <= horizon {
        if p > dense {
            grid.push(p);
        }
        p = match p.checked_mul(2) {
            Some(next) => next,
            None => break,
        };
    }
    grid
}

/// Everything the graph verifiers share: the lazy walk, its spectrum and
/// relaxation time, and the hitting profile.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub label: String,
    pub graph: Graph,
    pub stats: DegreeStats,
    pub chain: Chain,
    pub spectrum: Spectrum,
    pub t_rel: f64,
    pub hitting: HittingProfile,
}

impl Analysis {
    pub fn new(graph: &Graph, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        let chain = lazy_walk_chain(graph).with_label(label.clone());
        let spectrum = spectrum(&chain)?;
        let t_rel = spectrum.relaxation_time()?;
        let hitting = hitting_times(&chain)?;
        Ok(Self { label, graph: graph.clone(), stats: graph.degree_stats(), chain, spectrum, t_rel, hitting })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn pi(&self, x: usize) -> f64 {
        self.chain.pi()[x]
    }

    /// `d_avg * n / d_min`.
    pub fn volume_ratio(&self) -> f64 {
        self.stats.imbalance() * self.n() as f64
    }
}

/// `pi(x) E_pi[tau_x]` against the closed form of `sum_s (P^s(x,x) - pi(x))`.
pub fn check_hitting_identity(c: &Chain, s: &Spectrum, profile: &HittingProfile, x: usize) -> BoundCheck {
    let lhs = c.pi()[x] * profile.from_pi[x];
    let rhs = s.excess_return_sum(x);
    BoundCheck::equal("hitting_return_identity", c.label(), lhs, rhs, IDENTITY_TOLERANCE).at(x)
}

pub fn verify_hitting_bounds(a: &Analysis) -> Result<Vec<BoundCheck>> {
    let ctx = a.label.as_str();
    let n = a.n();
    let t_hit = a.hitting.t_hit;
    let mut checks = vec![
        BoundCheck::at_most(
            "thit_relaxation_bound",
            ctx,
            t_hit,
            20.0 * a.stats.imbalance() * n as f64 * (a.t_rel + 1.0).sqrt(),
        ),
        BoundCheck::at_most(
            "thit_general_bound",
            ctx,
            t_hit,
            2.0 * (0..n).map(|x| (1.0 - a.pi(x)) / a.pi(x)).fold(0.0, f64::max) * a.t_rel,
        ),
        BoundCheck::at_most(
            "thit_vs_stationary_start",
            ctx,
            t_hit,
            2.0 * a.hitting.from_pi.iter().copied().fold(0.0, f64::max),
        ),
    ];
    for x in 0..n {
        checks.push(check_hitting_identity(&a.chain, &a.spectrum, &a.hitting, x));
    }
    // The chain that holds w.p. 1 - 1/t_rel and otherwise resamples from pi.
    let star = star_chain(a.chain.pi(), 1.0 / a.t_rel)?;
    let star_hits = hitting_times(&star)?;
    for x in 0..n {
        let closed = (1.0 - a.pi(x)) * a.t_rel;
        let walk = a.pi(x) * a.hitting.from_pi[x];
        checks.push(BoundCheck::at_most("stationary_hitting_vs_star_chain", ctx, walk, closed).at(x));
        let star_value = a.pi(x) * star_hits.from_pi[x];
        checks.push(BoundCheck::equal("star_chain_hitting_identity", ctx, star_value, closed, IDENTITY_TOLERANCE).at(x));
    }
    Ok(checks)
}

pub fn verify_return_bounds(a: &Analysis, horizon: u64) -> Vec<BoundCheck> {
    let grid = verification_grid(horizon, a.t_rel);
    let last = *grid.last().expect("grid contains 0");
    let ctx = a.label.as_str();
    let d_min = a.stats.d_min as f64;
    let d_max = a.stats.d_max as f64;
    let per_vertex: Vec<Vec<BoundCheck>> = (0..a.n())
        .into_par_iter()
        .map(|x| {
            let returns = return_probabilities(&a.chain, x, last);
            let px = a.pi(x);
            let dx = a.graph.degree(x) as f64;
            let mut out = Vec::with_capacity(grid.len() * 3);
            for &t in &grid {
                let gap = returns[t as usize] - px;
                let tp1 = (t + 1) as f64;
                let rel = 10.0 * dx / d_min * (1.0 / tp1.sqrt()).min((a.t_rel + 1.0).sqrt() / tp1);
                out.push(BoundCheck::at_most("return_relaxation_bound", ctx, gap, rel).at(x).when(t));
                let general = crate::chain::pow_u64(1.0 - 1.0 / a.t_rel, t) * (1.0 - px);
                out.push(BoundCheck::at_most("return_general_bound", ctx, gap, general).at(x).when(t));
                let prior = 13.0 * d_max / d_min / tp1.sqrt();
                out.push(BoundCheck::at_most("return_prior_art", ctx, gap, prior).at(x).when(t).report_only());
            }
            out
        })
        .collect();
    per_vertex.into_iter().flatten().collect()
}

pub fn verify_green_lemmas(a: &Analysis, horizon: u64) -> Vec<BoundCheck> {
    let grid = verification_grid(horizon, a.t_rel);
    let ceil_rel = robust_ceil(a.t_rel);
    let last = (*grid.last().expect("grid contains 0")).max(ceil_rel);
    let ctx = a.label.as_str();
    let growth = 6.0 * a.volume_ratio();
    let e_factor = E / (E - 1.0);
    let per_vertex: Vec<Vec<BoundCheck>> = (0..a.n())
        .into_par_iter()
        .map(|x| {
            let returns = return_probabilities(&a.chain, x, last);
            let green: Vec<f64> = returns
                .iter()
                .scan(0.0, |acc, p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect();
            let px = a.pi(x);
            let mut out = Vec::new();
            for &t in &grid {
                let tp1 = (t + 1) as f64;
                let g = green[t as usize];
                let gap = returns[t as usize] - px;
                let average = (g - tp1 * px) / tp1;
                out.push(BoundCheck::at_most("green_average_lower", ctx, gap, average).at(x).when(t));
                let cut = (ceil_rel.saturating_sub(1)).min(t) as usize;
                let upper = e_factor * green[cut] / tp1;
                out.push(BoundCheck::at_most("green_average_upper", ctx, average, upper).at(x).when(t));
                let closed = a.spectrum.green_closed_form(x, t);
                out.push(BoundCheck::equal("green_closed_form", ctx, g, closed, IDENTITY_TOLERANCE).at(x).when(t));
            }
            for t in 0..=ceil_rel {
                let lhs = green[t as usize] / px;
                let rhs = growth * ((t + 1) as f64).sqrt();
                out.push(BoundCheck::at_most("green_growth", ctx, lhs, rhs).at(x).when(t));
            }
            out
        })
        .collect();
    per_vertex.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::star_chain;
    use approx::assert_abs_diff_eq;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::new(n, edges).unwrap()
    }

    #[test]
    fn k2_hitting() {
        let p = hitting_times(&lazy_walk_chain(&graph(2, &[(0, 1)]))).unwrap();
        assert_abs_diff_eq!(p.hit(0, 1), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.t_hit, 2.0, epsilon = 1e-12);
        assert_eq!(p.hit(0, 0), 0.0);
    }

    #[test]
    fn p3_hitting() {
        let p = hitting_times(&lazy_walk_chain(&graph(3, &[(0, 1), (1, 2)]))).unwrap();
        assert_abs_diff_eq!(p.hit(0, 2), 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.hit(1, 2), 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.t_hit, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn star_leaf_to_leaf() {
        let p = hitting_times(&lazy_walk_chain(&graph(4, &[(0, 1), (0, 2), (0, 3)]))).unwrap();
        assert_abs_diff_eq!(p.hit(1, 2), 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.t_hit, 12.0, epsilon = 1e-12);
    }

    #[test]
    fn green_values() {
        let k2 = lazy_walk_chain(&graph(2, &[(0, 1)]));
        assert_eq!(green_function(&k2, 0, 0), 1.0);
        assert_abs_diff_eq!(green_function(&k2, 0, 4), 3.0, epsilon = 1e-15);
        let p3 = lazy_walk_chain(&graph(3, &[(0, 1), (1, 2)]));
        // P^2(1,1) = 1/4 * 1/2 + 1/2 * 1/2 + 1/4 * 1/2 = 1/2, leaves move inward w.p. 1/2.
        assert_abs_diff_eq!(green_function(&p3, 1, 2), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn return_gaps() {
        let k2 = lazy_walk_chain(&graph(2, &[(0, 1)]));
        for t in 1..5 {
            assert_abs_diff_eq!(return_gap(&k2, 0, t), 0.0, epsilon = 1e-15);
        }
        let p3 = lazy_walk_chain(&graph(3, &[(0, 1), (1, 2)]));
        assert_abs_diff_eq!(return_gap(&p3, 1, 1), 0.0, epsilon = 1e-15);
        let star = star_chain(&[0.25; 4], 0.5).unwrap();
        assert_abs_diff_eq!(return_gap(&star, 0, 3), 3.0 / 32.0, epsilon = 1e-15);
    }

    #[test]
    fn hitting_identity_examples() {
        let k2 = lazy_walk_chain(&graph(2, &[(0, 1)]));
        let check = |c: &Chain, x| {
            let s = spectrum(c).unwrap();
            check_hitting_identity(c, &s, &hitting_times(c).unwrap(), x)
        };
        let k = check(&k2, 0);
        assert!(k.pass);
        assert_abs_diff_eq!(k.lhs, 0.5, epsilon = 1e-12);
        let star = star_chain(&[0.25; 4], 0.5).unwrap();
        let k = check(&star, 2);
        assert!(k.pass);
        assert_abs_diff_eq!(k.lhs, 1.5, epsilon = 1e-10);
        assert_abs_diff_eq!(k.rhs, 1.5, epsilon = 1e-10);
        assert!(check(&lazy_walk_chain(&graph(3, &[(0, 1), (1, 2)])), 0).pass);
    }

    #[test]
    fn grid_layout() {
        assert_eq!(verification_grid(3, 1.0), vec![0, 1, 2, 3]);
        assert_eq!(verification_grid(40, 1.0), vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 16, 32]);
        let g = verification_grid(100, 2.0);
        assert_eq!(&g[..21], &(0..=20).collect::<Vec<_>>()[..]);
        assert_eq!(&g[21..], &[32, 64]);
        assert_eq!(robust_ceil(1.0000000000000002), 1);
        assert_eq!(robust_ceil(1.5), 2);
    }

    #[test]
    fn bound_examples() {
        let a = Analysis::new(&graph(2, &[(0, 1)]), "K2").unwrap();
        let checks = verify_hitting_bounds(&a).unwrap();
        let thm = &checks[0];
        assert_abs_diff_eq!(thm.lhs, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(thm.rhs, 40.0 * 2f64.sqrt(), epsilon = 1e-9);
        assert!(checks.iter().all(|c| c.pass));

        let a = Analysis::new(&graph(3, &[(0, 1), (1, 2)]), "P3").unwrap();
        let thm = &verify_hitting_bounds(&a).unwrap()[0];
        assert_abs_diff_eq!(thm.rhs, 20.0 * 4.0 / 3.0 * 3.0 * 3f64.sqrt(), epsilon = 1e-9);

        let c4 = Analysis::new(&graph(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]), "C4").unwrap();
        let general = &verify_hitting_bounds(&c4).unwrap()[1];
        assert_abs_diff_eq!(general.lhs, 8.0, epsilon = 1e-10);
        assert_abs_diff_eq!(general.rhs, 12.0, epsilon = 1e-9);
    }

    #[test]
    fn return_and_green_examples() {
        let k2 = Analysis::new(&graph(2, &[(0, 1)]), "K2").unwrap();
        let rows = verify_return_bounds(&k2, 8);
        let r = rows
            .iter()
            .find(|c| c.name == "return_relaxation_bound" && c.x == Some(0) && c.t == Some(1))
            .unwrap();
        assert_abs_diff_eq!(r.lhs, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.rhs, 10.0 / 2f64.sqrt(), epsilon = 1e-12);
        for c in rows.iter().filter(|c| c.name == "return_general_bound" && c.t == Some(0)) {
            assert_eq!(c.margin, 0.0);
        }
        let g = verify_green_lemmas(&k2, 8);
        let r = g.iter().find(|c| c.name == "green_growth" && c.x == Some(0) && c.t == Some(0)).unwrap();
        assert_eq!((r.lhs, r.rhs), (2.0, 12.0));

        let p3 = Analysis::new(&graph(3, &[(0, 1), (1, 2)]), "P3").unwrap();
        let r = verify_return_bounds(&p3, 8);
        let r = r.iter().find(|c| c.name == "return_relaxation_bound" && c.x == Some(1) && c.t == Some(0)).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.5, 20.0));
        let g = verify_green_lemmas(&p3, 8);
        let r = g.iter().find(|c| c.name == "green_growth" && c.x == Some(1) && c.t == Some(2)).unwrap();
        assert_abs_diff_eq!(r.lhs, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.rhs, 24.0 * 3f64.sqrt(), epsilon = 1e-12);
        for c in g.iter().filter(|c| c.name == "green_average_lower" && c.t == Some(0)) {
            assert_eq!(c.lhs, c.rhs);
        }
        assert!(g.iter().all(|c| c.pass));
    }
}
