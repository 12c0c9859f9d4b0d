//! Electrical networks: conductances `c(a,b) = pi(a) P(a,b)` from a chain,
//! or unit conductances on graph edges. Effective resistances come from the
//! reduced Laplacian with the target set grounded.

use rand::seq::index::sample;
use rayon::prelude::*;

use crate::chain::{Chain, CHAIN_TOLERANCE};
use crate::check::BoundCheck;
use crate::error::{Result, WalkError};
use crate::graph::{check_path_fact, Graph};
use crate::hitting::{Analysis, IDENTITY_TOLERANCE};
use crate::linalg::{Lu, Matrix};
use crate::rng::{rng_from_seed, split};

/// Random target sets drawn per size class in the proposition sweep.
pub const RANDOM_SETS_PER_SIZE: usize = 20;

#[derive(Debug, Clone)]
pub struct ConductanceNetwork {
    conductance: Matrix,
    node_weight: Vec<f64>,
}

impl ConductanceNetwork {
    pub fn n(&self) -> usize {
        self.node_weight.len()
    }

    pub fn conductance(&self, a: usize, b: usize) -> f64 {
        self.conductance[(a, b)]
    }

    pub fn node_weight(&self, a: usize) -> f64 {
        self.node_weight[a]
    }

    fn laplacian_restricted(&self, keep: &[usize]) -> Matrix {
        let n = self.n();
        let mut l = Matrix::zeros(keep.len(), keep.len());
        for (i, &a) in keep.iter().enumerate() {
            let total: f64 = (0..n).filter(|&b| b != a).map(|b| self.conductance[(a, b)]).sum();
            l[(i, i)] = total;
            for (j, &b) in keep.iter().enumerate() {
                if i != j {
                    l[(i, j)] = -self.conductance[(a, b)];
                }
            }
        }
        l
    }
}

pub fn chain_network(c: &Chain) -> Result<ConductanceNetwork> {
    let n = c.n();
    let mut conductance = Matrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            if a != b {
                conductance[(a, b)] = c.pi()[a] * c.kernel()[(a, b)];
            }
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if (conductance[(a, b)] - conductance[(b, a)]).abs() > CHAIN_TOLERANCE {
                return Err(WalkError::NotReversible(a, b));
            }
        }
    }
    Ok(ConductanceNetwork { conductance, node_weight: c.pi().to_vec() })
}

/// Unit conductance on every edge; node weight is the degree.
pub fn unit_network(g: &Graph) -> ConductanceNetwork {
    let n = g.n();
    let mut conductance = Matrix::zeros(n, n);
    for (u, v) in g.edges() {
        conductance[(u, v)] = 1.0;
        conductance[(v, u)] = 1.0;
    }
    ConductanceNetwork { conductance, node_weight: g.degrees().into_iter().map(|d| d as f64).collect() }
}

fn validate_targets(n: usize, x: Option<usize>, targets: &[usize]) -> Result<Vec<bool>> {
    if targets.is_empty() {
        return Err(WalkError::InvalidTargets("target set is empty".into()));
    }
    let mut member = vec![false; n];
    for &a in targets {
        if a >= n {
            return Err(WalkError::StateOutOfRange { state: a, n });
        }
        member[a] = true;
    }
    if let Some(x) = x {
        if x >= n {
            return Err(WalkError::StateOutOfRange { state: x, n });
        }
        if member[x] {
            return Err(WalkError::InvalidTargets(format!("source {x} lies in the target set")));
        }
    }
    Ok(member)
}

/// `R_eff(x <-> targets)`.
pub fn effective_resistance(net: &ConductanceNetwork, x: usize, targets: &[usize]) -> Result<f64> {
    validate_targets(net.n(), Some(x), targets)?;
    let all = resistances_to_set(net, targets)?;
    Ok(all[x].expect("x is outside the target set"))
}

/// `R_eff(y <-> targets)` for every `y` outside the set (one grounded solve).
pub fn resistances_to_set(net: &ConductanceNetwork, targets: &[usize]) -> Result<Vec<Option<f64>>> {
    let member = validate_targets(net.n(), None, targets)?;
    let free: Vec<usize> = (0..net.n()).filter(|&v| !member[v]).collect();
    let mut out = vec![None; net.n()];
    if free.is_empty() {
        return Ok(out);
    }
    // Unit current injected at y, ground on the targets: R_eff = v(y) = (L_free^{-1})_{yy}.
    let inv = Lu::factor(&net.laplacian_restricted(&free))?.inverse();
    for (i, &y) in free.iter().enumerate() {
        out[y] = Some(inv[(i, i)]);
    }
    Ok(out)
}

/// Expected visits to `x` strictly before hitting `targets`, started at `x`.
pub fn visits_before_hitting(c: &Chain, x: usize, targets: &[usize]) -> Result<f64> {
    validate_targets(c.n(), Some(x), targets)?;
    Ok(killed_green_diagonal(c, targets)?[x].expect("x is outside the target set"))
}

/// Diagonal of the Green's function of the chain killed on `targets`:
/// `(I - Q)^{-1}` with `Q` the kernel restricted to the complement.
pub fn killed_green_diagonal(c: &Chain, targets: &[usize]) -> Result<Vec<Option<f64>>> {
    let member = validate_targets(c.n(), None, targets)?;
    let free: Vec<usize> = (0..c.n()).filter(|&v| !member[v]).collect();
    let mut out = vec![None; c.n()];
    if free.is_empty() {
        return Ok(out);
    }
    let mut a = c.kernel().principal_submatrix(&free);
    for i in 0..free.len() {
        for j in 0..free.len() {
            a[(i, j)] = if i == j { 1.0 } else { 0.0 } - a[(i, j)];
        }
    }
    let inv = Lu::factor(&a)?.inverse();
    for (i, &y) in free.iter().enumerate() {
        out[y] = Some(inv[(i, i)]);
    }
    Ok(out)
}

/// Target sets probed by the proposition sweep: every singleton, then
/// [`RANDOM_SETS_PER_SIZE`] seeded random sets for each size in
/// `{1, ceil(n/4), ceil(n/2), n-1}`.
pub fn sample_target_sets(n: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut sets: Vec<Vec<usize>> = (0..n).map(|y| vec![y]).collect();
    let mut sizes = vec![1, n.div_ceil(4), n.div_ceil(2), n - 1];
    sizes.dedup();
    for (k, &size) in sizes.iter().enumerate() {
        let mut rng = rng_from_seed(split(seed, k as u64));
        for _ in 0..RANDOM_SETS_PER_SIZE {
            let mut set = sample(&mut rng, n, size).into_vec();
            set.sort_unstable();
            sets.push(set);
        }
    }
    sets
}

pub fn verify_network_propositions(a: &Analysis, seed: u64) -> Result<Vec<BoundCheck>> {
    let ctx = a.label.as_str();
    let n = a.n();
    let net = chain_network(&a.chain)?;
    let mut checks = vec![check_path_fact(&a.graph, ctx)];

    let commute = a.hitting.max_commute();
    let d_ratio = a.stats.imbalance();
    checks.push(BoundCheck::at_most("relaxation_vs_commute", ctx, a.t_rel, commute));
    checks.push(BoundCheck::at_most("commute_bound", ctx, commute, 6.0 * d_ratio * (n * n) as f64 - 4.0));

    let prop_scale = 9.0 * a.volume_ratio().powi(2);
    let sets = sample_target_sets(n, seed);
    let per_set: Vec<Vec<BoundCheck>> = sets
        .par_iter()
        .map(|set| -> Result<Vec<BoundCheck>> {
            let visits = killed_green_diagonal(&a.chain, set)?;
            let resist = resistances_to_set(&net, set)?;
            let pi_set: f64 = set.iter().map(|&v| a.pi(v)).sum();
            let label = format!("{ctx} A={}", set_label(set));
            let mut out = Vec::new();
            for x in 0..n {
                let (Some(g), Some(r)) = (visits[x], resist[x]) else { continue };
                let normalized = g / a.pi(x);
                out.push(BoundCheck::equal("visits_resistance_identity", &label, normalized, r, IDENTITY_TOLERANCE).at(x));
                out.push(BoundCheck::at_most("visits_before_exit_bound", &label, normalized, prop_scale * (1.0 - pi_set)).at(x));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    checks.extend(per_set.into_iter().flatten());

    // Unit resistances scale like sqrt(t_rel)/d_min up to an unspecified
    // constant, so this row is informational.
    let worst = max_unit_resistance(&a.graph)?;
    let scale = a.t_rel.sqrt() / a.stats.d_min as f64;
    checks.push(BoundCheck::at_most("unit_resistance_scale", ctx, worst, scale).report_only());
    Ok(checks)
}

/// Largest unit-network two-point resistance divided by `sqrt(t_rel)/d_min`.
pub fn unit_resistance_ratio(a: &Analysis) -> Result<f64> {
    Ok(max_unit_resistance(&a.graph)? * a.stats.d_min as f64 / a.t_rel.sqrt())
}

/// Largest two-point effective resistance with unit edge conductances.
pub fn max_unit_resistance(g: &Graph) -> Result<f64> {
    let unit = unit_network(g);
    let mut worst: f64 = 0.0;
    for y in 0..g.n() {
        for v in resistances_to_set(&unit, &[y])?.into_iter().flatten() {
            worst = worst.max(v);
        }
    }
    Ok(worst)
}

fn set_label(set: &[usize]) -> String {
    let parts: Vec<String> = set.iter().map(usize::to_string).collect();
    format!("{{{}}}", parts.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{lazy_walk_chain, star_chain};
    use approx::assert_abs_diff_eq;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::new(n, edges).unwrap()
    }

    fn k2() -> Graph {
        graph(2, &[(0, 1)])
    }

    fn p3() -> Graph {
        graph(3, &[(0, 1), (1, 2)])
    }

    fn c4() -> Graph {
        graph(4, &[(0, 1), (1, 2), (2, 3), (0, 3)])
    }

    #[test]
    fn chain_network_conductances() {
        let net = chain_network(&lazy_walk_chain(&k2())).unwrap();
        assert_eq!(net.conductance(0, 1), 0.25);
        let net = chain_network(&lazy_walk_chain(&p3())).unwrap();
        assert_eq!(net.conductance(0, 1), 0.125);
        assert_eq!(net.conductance(1, 2), 0.125);
        assert_eq!(net.conductance(0, 2), 0.0);
        assert_eq!(net.node_weight(1), 0.5);
        let net = chain_network(&star_chain(&[1.0 / 3.0; 3], 1.0).unwrap()).unwrap();
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            assert_abs_diff_eq!(net.conductance(a, b), 1.0 / 9.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn unit_networks() {
        let net = unit_network(&c4());
        assert_eq!((0..4).map(|v| net.conductance(v, (v + 1) % 4)).sum::<f64>(), 4.0);
        assert_eq!(net.conductance(0, 2), 0.0);
    }

    #[test]
    fn resistance_examples() {
        let r = effective_resistance(&chain_network(&lazy_walk_chain(&k2())).unwrap(), 0, &[1]).unwrap();
        assert_abs_diff_eq!(r, 4.0, epsilon = 1e-12);
        let r = effective_resistance(&chain_network(&lazy_walk_chain(&p3())).unwrap(), 0, &[2]).unwrap();
        assert_abs_diff_eq!(r, 16.0, epsilon = 1e-12);
        let r = effective_resistance(&unit_network(&c4()), 0, &[2]).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn visits_examples() {
        assert_abs_diff_eq!(visits_before_hitting(&lazy_walk_chain(&k2()), 0, &[1]).unwrap(), 2.0, epsilon = 1e-12);
        let p3 = lazy_walk_chain(&p3());
        assert_abs_diff_eq!(visits_before_hitting(&p3, 0, &[2]).unwrap(), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(visits_before_hitting(&p3, 1, &[0, 2]).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn target_validation() {
        let c = lazy_walk_chain(&p3());
        assert!(matches!(visits_before_hitting(&c, 0, &[]), Err(WalkError::InvalidTargets(_))));
        assert!(matches!(visits_before_hitting(&c, 0, &[0, 2]), Err(WalkError::InvalidTargets(_))));
        assert!(matches!(visits_before_hitting(&c, 0, &[7]), Err(WalkError::StateOutOfRange { .. })));
    }

    #[test]
    fn proposition_examples() {
        let a = Analysis::new(&k2(), "K2").unwrap();
        let checks = verify_network_propositions(&a, 1).unwrap();
        let rel = checks.iter().find(|c| c.name == "relaxation_vs_commute").unwrap();
        assert_abs_diff_eq!(rel.lhs, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rel.rhs, 4.0, epsilon = 1e-10);
        let com = checks.iter().find(|c| c.name == "commute_bound").unwrap();
        assert_abs_diff_eq!(com.rhs, 20.0, epsilon = 1e-12);
        assert!(checks.iter().all(|c| c.pass));

        let a = Analysis::new(&p3(), "P3").unwrap();
        let checks = verify_network_propositions(&a, 1).unwrap();
        let pick = |name: &str| {
            checks.iter().find(|c| c.name == name && c.x == Some(0) && c.context == "P3 A={2}").unwrap().clone()
        };
        let id = pick("visits_resistance_identity");
        assert_abs_diff_eq!(id.lhs, 16.0, epsilon = 1e-10);
        assert_abs_diff_eq!(id.margin, 0.0, epsilon = 1e-10);
        let prop = pick("visits_before_exit_bound");
        assert_abs_diff_eq!(prop.lhs, 16.0, epsilon = 1e-10);
        assert_abs_diff_eq!(prop.rhs, 108.0, epsilon = 1e-10);
    }

    #[test]
    fn sampled_sets_cover_singletons_and_sizes() {
        let sets = sample_target_sets(10, 5);
        assert_eq!(sets.len(), 10 + 4 * RANDOM_SETS_PER_SIZE);
        assert!(sets[10..].iter().all(|s| s.windows(2).all(|w| w[0] < w[1])));
        assert_eq!(sets, sample_target_sets(10, 5));
        // n = 2: sizes {1, 1, 1, 1} collapse to one class.
        assert_eq!(sample_target_sets(2, 0).len(), 2 + RANDOM_SETS_PER_SIZE);
    }
}
