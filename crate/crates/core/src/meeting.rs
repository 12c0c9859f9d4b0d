//! Survival of a stationary walk against a deterministic moving target
//! `h_0, h_1, ..., h_t`, and the masked-operator quantities that bound it.
//!
//! With `D_h` the projection killing state `h`, the survival probability is
//! `<1, D_{h_0} P D_{h_1} ... P D_{h_t} 1>_pi`. Its operator norm is at most
//! the product of `sqrt(lambda_max(D_h P D_h))` over consecutive targets, and
//! each `lambda_max(D_h P D_h) = 1 - 1/E_{q_h}[tau_h] <= 1 - 1/t_hit`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{lazy_walk_chain, pow_u64, Chain};
use crate::check::{BoundCheck, INEQUALITY_SLACK};
use crate::error::{Result, WalkError};
use crate::graph::Graph;
use crate::hitting::{hitting_column, hitting_times, robust_ceil, IDENTITY_TOLERANCE};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::rng::{rng_from_seed, split};

/// Eigenvalues within this distance of the top one span the principal space.
const DEGENERACY_TOLERANCE: f64 = 1e-9;
/// Relative tolerance for ties in the greedy adversary.
const TIE_TOLERANCE: f64 = 1e-12;
/// Dense prefix of the reporting grid.
const DENSE_REPORT_PREFIX: u64 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    targets: Vec<usize>,
}

impl Trajectory {
    pub fn new(targets: Vec<usize>, n: usize) -> Result<Self> {
        if targets.is_empty() {
            return Err(WalkError::InvalidTargets("trajectory needs at least one target".into()));
        }
        if let Some(&bad) = targets.iter().find(|&&h| h >= n) {
            return Err(WalkError::StateOutOfRange { state: bad, n });
        }
        Ok(Self { targets })
    }

    /// The constant trajectory `h_s = x` for `s = 0..=t`.
    pub fn fixed(x: usize, t: u64, n: usize) -> Result<Self> {
        Self::new(vec![x; t as usize + 1], n)
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Final time index `t`; the trajectory has `t + 1` targets.
    pub fn t(&self) -> u64 {
        self.targets.len() as u64 - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Fixed,
    Random,
    GreedyAdversarial,
    Custom,
}

impl TrajectoryKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrajectoryKind::Fixed => "fixed",
            TrajectoryKind::Random => "random",
            TrajectoryKind::GreedyAdversarial => "greedy_adversarial",
            TrajectoryKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalResult {
    pub graph_label: String,
    pub kind: TrajectoryKind,
    /// Fixed: the target state. Random: the trial number. Otherwise 0.
    pub index: usize,
    pub t: u64,
    pub probability: f64,
    /// `(1 - 1/t_hit)^t`.
    pub bound: f64,
    pub margin: f64,
    /// Product of `sqrt(lambda_max)` over consecutive targets; sits between
    /// the probability and the bound.
    pub operator_bound: f64,
    pub pass: bool,
}

impl SurvivalResult {
    /// Checks `probability <= operator_bound <= bound`.
    pub fn checks(&self) -> [BoundCheck; 2] {
        let ctx = format!("{} {}#{}", self.graph_label, self.kind.as_str(), self.index);
        [
            BoundCheck::at_most("survival_vs_masked_norms", &ctx, self.probability, self.operator_bound).when(self.t),
            BoundCheck::at_most("masked_norms_vs_meeting_bound", &ctx, self.operator_bound, self.bound).when(self.t),
        ]
    }
}

/// `P_pi(X_s != h_s for all s <= t)` by forward masked recursion.
pub fn survival_probability(c: &Chain, traj: &Trajectory) -> f64 {
    *survival_curve(c, traj.targets()).last().expect("trajectory is non-empty")
}

/// Survival probabilities of every prefix of `targets`.
pub fn survival_curve(c: &Chain, targets: &[usize]) -> Vec<f64> {
    let mut mu = c.pi().to_vec();
    let mut next = vec![0.0; c.n()];
    let mut out = Vec::with_capacity(targets.len());
    for (s, &h) in targets.iter().enumerate() {
        if s > 0 {
            c.step_into(&mu, &mut next);
            std::mem::swap(&mut mu, &mut next);
        }
        mu[h] = 0.0;
        out.push(mu.iter().sum());
    }
    out
}

/// `(1 - 1/t_hit)^t`.
pub fn meeting_bound(t_hit: f64, t: u64) -> f64 {
    pow_u64(1.0 - 1.0 / t_hit, t)
}

/// The symmetrized kernel with state `h` removed, indexed by `others`.
fn masked_block(c: &Chain, h: usize) -> (Matrix, Vec<usize>) {
    let others: Vec<usize> = (0..c.n()).filter(|&y| y != h).collect();
    (c.symmetrized().principal_submatrix(&others), others)
}

/// `lambda_max(D_h P D_h)`, from the symmetrized kernel with row and column `h` removed.
pub fn masked_operator_norm(c: &Chain, h: usize) -> Result<f64> {
    c.check_state(h)?;
    let (block, _) = masked_block(c, h);
    Ok(symmetric_eigen(&block)?.values[0])
}

/// Largest asymmetry of the masked symmetrized kernel.
pub fn masked_asymmetry(c: &Chain, h: usize) -> f64 {
    let mut s = c.symmetrized();
    for y in 0..c.n() {
        s[(h, y)] = 0.0;
        s[(y, h)] = 0.0;
    }
    s.asymmetry()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quasistationary {
    /// Sums to one in plain coordinates; `q[h] = 0`.
    pub q: Vec<f64>,
    /// `E_q[tau_h]`.
    pub expected_hit: f64,
    pub lambda_max: f64,
}

impl Quasistationary {
    pub fn check(&self, context: &str, h: usize) -> BoundCheck {
        BoundCheck::equal(
            "quasistationary_identity",
            context,
            self.lambda_max,
            1.0 - 1.0 / self.expected_hit,
            IDENTITY_TOLERANCE,
        )
        .at(h)
    }
}

/// Principal left eigenvector of the kernel killed at `h`, normalized to a
/// distribution, and its expected absorption time.
pub fn quasistationary(c: &Chain, h: usize) -> Result<Quasistationary> {
    c.check_state(h)?;
    let (block, others) = masked_block(c, h);
    let eig = symmetric_eigen(&block)?;
    let lambda_max = eig.values[0];
    let k = others.len();
    let root: Vec<f64> = others.iter().map(|&y| c.pi()[y].sqrt()).collect();
    // Project sqrt(pi) onto the top eigenspace. For a simple top eigenvalue
    // this is the Perron vector up to scale; for a degenerate one it picks a
    // nonnegative member of the space.
    let top = eig.values.iter().take_while(|&&v| v >= lambda_max - DEGENERACY_TOLERANCE).count();
    let mut phi = vec![0.0; k];
    for i in 0..top {
        let coef: f64 = (0..k).map(|r| eig.vectors[(r, i)] * root[r]).sum();
        for (r, p) in phi.iter_mut().enumerate() {
            *p += coef * eig.vectors[(r, i)];
        }
    }
    let mut q_block: Vec<f64> = phi.iter().zip(&root).map(|(p, r)| p * r).collect();
    let total: f64 = q_block.iter().sum();
    if total.abs() <= f64::MIN_POSITIVE {
        return Err(WalkError::NonpositiveEigenvector(total));
    }
    q_block.iter_mut().for_each(|v| *v /= total);
    if let Some(&worst) = q_block.iter().find(|&&v| v < -DEGENERACY_TOLERANCE) {
        return Err(WalkError::NonpositiveEigenvector(worst));
    }
    let mut q = vec![0.0; c.n()];
    for (i, &y) in others.iter().enumerate() {
        q[y] = q_block[i].max(0.0);
    }
    let hits = hitting_column(c, h)?;
    let expected_hit = q.iter().zip(&hits).map(|(a, b)| a * b).sum();
    Ok(Quasistationary { q, expected_hit, lambda_max })
}

/// Lowest index whose value is within relative [`TIE_TOLERANCE`] of the minimum.
fn argmin_low(values: &[f64]) -> usize {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let cut = min + TIE_TOLERANCE * min.abs().max(f64::MIN_POSITIVE);
    values.iter().position(|&v| v <= cut).expect("non-empty")
}

/// Each step targets the state holding the least surviving mass, starting
/// from `argmin pi`. Ties go to the lowest index.
pub fn greedy_adversarial_trajectory(c: &Chain, t: u64) -> Trajectory {
    let mut targets = Vec::with_capacity(t as usize + 1);
    let mut mu = c.pi().to_vec();
    let mut next = vec![0.0; c.n()];
    targets.push(argmin_low(&mu));
    mu[targets[0]] = 0.0;
    for _ in 0..t {
        c.step_into(&mu, &mut next);
        std::mem::swap(&mut mu, &mut next);
        let h = argmin_low(&mu);
        mu[h] = 0.0;
        targets.push(h);
    }
    Trajectory { targets }
}

/// I.i.d. uniform targets.
pub fn random_trajectory(n: usize, t: u64, seed: u64) -> Trajectory {
    let mut rng = rng_from_seed(seed);
    Trajectory { targets: (0..=t).map(|_| rng.random_range(0..n)).collect() }
}

#[derive(Debug, Clone, Default)]
pub struct MeetingReport {
    /// Ordered by kind, then index, then t.
    pub survival: Vec<SurvivalResult>,
    pub checks: Vec<BoundCheck>,
}

impl MeetingReport {
    /// Survival rows whose bound is violated beyond the inequality slack.
    pub fn violations(&self) -> impl Iterator<Item = &SurvivalResult> {
        self.survival.iter().filter(|r| !r.pass)
    }
}

/// Times at which survival rows are reported: a dense prefix, powers of two,
/// and multiples of `ceil(t_rel)`, all capped at `horizon`.
pub fn report_grid(horizon: u64, t_rel: f64) -> Vec<u64> {
    let step = robust_ceil(t_rel).max(1);
    let mut grid: Vec<u64> = (0..=horizon.min(DENSE_REPORT_PREFIX)).collect();
    grid.extend((0..).map(|k| 1u64 << k).take_while(|&p| p <= horizon));
    grid.extend((1..).map(|k| k * step).take_while(|&p| p <= horizon));
    grid.push(horizon);
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Theorem-grade checks for one chain. Survival is evaluated at every
/// `t <= horizon`. Every trajectory reports its tightest time; fixed and
/// greedy trajectories also report the whole grid, random ones only `horizon`.
pub fn verify_meeting_chain(c: &Chain, horizon: u64, trials: usize, seed: u64) -> Result<MeetingReport> {
    let n = c.n();
    let label = c.label().to_string();
    let t_hit = hitting_times(c)?.t_hit;
    let mut checks = Vec::new();

    let norms: Vec<f64> = (0..n).into_par_iter().map(|h| masked_operator_norm(c, h)).collect::<Result<_>>()?;
    let step2 = 1.0 - 1.0 / t_hit;
    for (h, &norm) in norms.iter().enumerate() {
        checks.push(BoundCheck::at_most("masked_norm_vs_hitting", &label, norm, step2).at(h));
        checks.push(BoundCheck::equal("masked_self_adjoint", &label, masked_asymmetry(c, h), 0.0, 1e-12).at(h));
        if c.has_nonnegative_spectrum() {
            checks.push(BoundCheck::at_most("masked_norm_nonnegative", &label, 0.0, norm).at(h));
        }
    }
    let quasi: Vec<Quasistationary> = (0..n).into_par_iter().map(|h| quasistationary(c, h)).collect::<Result<_>>()?;
    for (h, q) in quasi.iter().enumerate() {
        checks.push(q.check(&label, h));
    }

    let t_rel = crate::chain::spectrum(c).and_then(|s| s.relaxation_time()).unwrap_or(1.0);
    let grid = report_grid(horizon, t_rel);
    let mut trajectories: Vec<(TrajectoryKind, usize, Trajectory)> = Vec::new();
    for x in 0..n {
        trajectories.push((TrajectoryKind::Fixed, x, Trajectory::fixed(x, horizon, n)?));
    }
    for i in 0..trials {
        trajectories.push((TrajectoryKind::Random, i, random_trajectory(n, horizon, split(seed, i as u64))));
    }
    trajectories.push((TrajectoryKind::GreedyAdversarial, 0, greedy_adversarial_trajectory(c, horizon)));

    let rows: Vec<Vec<SurvivalResult>> = trajectories
        .par_iter()
        .map(|(kind, index, traj)| {
            let curve = survival_curve(c, traj.targets());
            let roots: Vec<f64> = traj.targets().iter().map(|&h| norms[h].max(0.0).sqrt()).collect();
            let mut operator = 1.0;
            let mut kept = Vec::new();
            let mut tightest: Option<SurvivalResult> = None;
            let mut g = 0;
            for (t, &p) in curve.iter().enumerate() {
                if t > 0 {
                    operator *= roots[t - 1] * roots[t];
                }
                let bound = meeting_bound(t_hit, t as u64);
                let row = SurvivalResult {
                    graph_label: label.clone(),
                    kind: *kind,
                    index: *index,
                    t: t as u64,
                    probability: p,
                    bound,
                    margin: bound - p,
                    operator_bound: operator,
                    pass: bound - p >= -INEQUALITY_SLACK,
                };
                if tightest.as_ref().is_none_or(|best| row.margin < best.margin) {
                    tightest = Some(row.clone());
                }
                if g < grid.len() && grid[g] == t as u64 {
                    if *kind != TrajectoryKind::Random || t as u64 == horizon {
                        kept.push(row);
                    }
                    g += 1;
                }
            }
            if let Some(best) = tightest {
                if !kept.iter().any(|r| r.t == best.t) {
                    kept.push(best);
                    kept.sort_by_key(|r| r.t);
                }
            }
            kept
        })
        .collect();
    let mut survival: Vec<SurvivalResult> = rows.into_iter().flatten().collect();
    survival.sort_by(|a, b| (a.kind, a.index, a.t).cmp(&(b.kind, b.index, b.t)));
    Ok(MeetingReport { survival, checks })
}

/// The lazy walk on `g` through [`verify_meeting_chain`], plus the lazy
/// diagonal floor `lambda_max(D_h P D_h) >= 1/2` for `n >= 3`.
pub fn verify_meeting_theorem(g: &Graph, horizon: u64, trials: usize, seed: u64) -> Result<MeetingReport> {
    verify_meeting_labeled(g, &g.to_string(), horizon, trials, seed)
}

pub fn verify_meeting_labeled(g: &Graph, label: &str, horizon: u64, trials: usize, seed: u64) -> Result<MeetingReport> {
    if horizon == 0 {
        return Err(WalkError::Config("meeting horizon must be at least 1".into()));
    }
    let c = lazy_walk_chain(g).with_label(label);
    let mut report = verify_meeting_chain(&c, horizon, trials, seed)?;
    if g.n() >= 3 {
        let floors: Vec<BoundCheck> = report
            .checks
            .iter()
            .filter(|k| k.name == "masked_norm_vs_hitting")
            .map(|k| BoundCheck::at_most("masked_norm_lazy_floor", label, 0.5, k.lhs).at(k.x.expect("per state")))
            .collect();
        report.checks.extend(floors);
    }
    Ok(report)
}
