//! Coalescing random walks as a killed-particle system.
//!
//! Particle `a` starts at vertex `a`. All live particles move at once each
//! tick; then particles are scanned in increasing index order and a particle
//! that shares its site with a surviving lower-index particle is killed.
//! Particle 0 is never killed. Positions swapping across an edge do not count
//! as a meeting.
//!
//! Every particle owns the ChaCha stream `stream(replica_seed, a)` and draws
//! exactly one uniform per move, so a particle's path does not depend on the
//! rest of the system.

use std::ops::Range;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{Result, WalkError};
use crate::hitting::hitting_times;
use crate::rng::{split, stream};

/// Step cap for a single replica.
pub const DEFAULT_STEP_CAP: u64 = 10_000_000;
/// Regression ceiling on `t_coal / t_hit` over the default suite, frozen from
/// a pilot run (largest observed ratio rounded up to one decimal). The pilot
/// used 1000 replicas and master seed 2024; the worst instance was
/// complete(n=8) at 1.202, and 200 replicas gave 1.293 there.
pub const TCOAL_RATIO_CEILING: f64 = 1.3;

/// Inverse-CDF draw from the sparse row of `x`.
#[inline]
pub fn step_particle(c: &Chain, rng: &mut ChaCha8Rng, x: usize) -> usize {
    let u: f64 = rng.random();
    let row = c.transitions(x);
    let mut acc = 0.0;
    for &(y, p) in row {
        acc += p;
        if u < acc {
            return y;
        }
    }
    row.last().expect("rows are non-empty").0
}

fn particle_streams(seed: u64, n: usize) -> Vec<ChaCha8Rng> {
    (0..n as u64).map(|a| stream(seed, a)).collect()
}

/// Outcome of one killed-particle run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoalescenceTrace {
    /// First time a single particle is alive.
    pub tau: u64,
    /// `kill_time[a]` is the time particle `a` entered the coffin state.
    /// Always `None` for particle 0.
    pub kill_time: Vec<Option<u64>>,
}

impl CoalescenceTrace {
    /// `|S_t|`.
    pub fn alive_at(&self, t: u64) -> usize {
        self.kill_time.iter().filter(|k| k.is_none_or(|kt| kt > t)).count()
    }
}

pub fn simulate_coalescence(c: &Chain, seed: u64) -> Result<u64> {
    Ok(coalescence_trace(c, seed, DEFAULT_STEP_CAP)?.tau)
}

pub fn coalescence_trace(c: &Chain, seed: u64, cap: u64) -> Result<CoalescenceTrace> {
    let n = c.n();
    let mut rngs = particle_streams(seed, n);
    let mut pos: Vec<usize> = (0..n).collect();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut kill_time = vec![None; n];
    // owner_stamp[site] == t marks the site as taken by a survivor at time t.
    let mut owner_stamp = vec![u64::MAX; n];
    let mut t = 0u64;
    while alive.len() > 1 {
        if t == cap {
            return Err(WalkError::HorizonExceeded(cap));
        }
        t += 1;
        for &a in &alive {
            pos[a] = step_particle(c, &mut rngs[a], pos[a]);
        }
        alive.retain(|&a| {
            let site = pos[a];
            if owner_stamp[site] == t {
                kill_time[a] = Some(t);
                false
            } else {
                owner_stamp[site] = t;
                true
            }
        });
    }
    Ok(CoalescenceTrace { tau: t, kill_time })
}

/// Which ordered pairs `(killer, victim)` may coalesce during an epoch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Allowed {
    None,
    All,
    /// Killer index in `killers`, victim index in `victims`.
    Blocks { killers: Range<usize>, victims: Range<usize> },
}

impl Allowed {
    pub fn permits(&self, killer: usize, victim: usize) -> bool {
        match self {
            Allowed::None => false,
            Allowed::All => killer < victim,
            Allowed::Blocks { killers, victims } => killers.contains(&killer) && victims.contains(&victim),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Epoch {
    /// `None` for the no-killing warm-up epoch, `Some(j)` for epoch `j`.
    pub index: Option<usize>,
    pub start: u64,
    /// Exclusive; `None` means unbounded.
    pub end: Option<u64>,
    pub allowed: Allowed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KillSchedule {
    /// Consecutive index blocks `A_0, ..., A_m` covering `0..n`; `|A_i| = 2^i` for `i < m`.
    pub partition: Vec<Range<usize>>,
    /// Tile `[0, inf)` in order.
    pub epochs: Vec<Epoch>,
    /// End of the last bounded epoch.
    pub bounded_horizon: u64,
}

impl KillSchedule {
    /// One unbounded epoch with a fixed rule.
    pub fn constant(allowed: Allowed, n: usize) -> Self {
        Self {
            partition: vec![0..n],
            epochs: vec![Epoch { index: Some(0), start: 0, end: None, allowed }],
            bounded_horizon: 0,
        }
    }

    pub fn m(&self) -> usize {
        self.partition.len() - 1
    }

    /// Index into `epochs` of the epoch containing `t`.
    pub fn epoch_at(&self, t: u64) -> usize {
        self.epochs.iter().position(|e| e.end.is_none_or(|end| t < end)).expect("epochs tile [0, inf)")
    }
}

/// Warm-up epoch of length `1 + ceil(2 t_mix)`, then epochs `m, ..., 1` of
/// length `1 + ceil(16 ln 5 t_hit / 2^j)` where epoch `j` lets `A_{j-1}` kill
/// `A_j ∪ ... ∪ A_m`, then an unbounded epoch where every pair may coalesce.
pub fn build_epoch_schedule(t_mix: u64, t_hit: f64, n: usize) -> KillSchedule {
    assert!(n >= 2, "coalescence needs at least two particles");
    let m = n.ilog2() as usize;
    let mut partition: Vec<Range<usize>> = (0..m).map(|i| (1 << i) - 1..(1 << (i + 1)) - 1).collect();
    partition.push((1 << m) - 1..n);

    let mut epochs = Vec::with_capacity(m + 2);
    let warmup = 1 + 2 * t_mix;
    epochs.push(Epoch { index: None, start: 0, end: Some(warmup), allowed: Allowed::None });
    let mut start = warmup;
    let weight = 16.0 * 5f64.ln() * t_hit;
    for j in (1..=m).rev() {
        let length = 1 + (weight / (1u64 << j) as f64).ceil() as u64;
        let allowed = Allowed::Blocks { killers: partition[j - 1].clone(), victims: partition[j].start..n };
        epochs.push(Epoch { index: Some(j), start, end: Some(start + length), allowed });
        start += length;
    }
    epochs.push(Epoch { index: Some(0), start, end: None, allowed: Allowed::All });
    KillSchedule { partition, epochs, bounded_horizon: start }
}

/// Coalescence times of the two coupled processes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoupledTimes {
    pub unrestricted: u64,
    /// `None` when the restricted process had not coalesced by the cap.
    pub restricted: Option<u64>,
}

pub fn simulate_with_allowed_killings(c: &Chain, sched: &KillSchedule, seed: u64) -> Result<CoupledTimes> {
    simulate_with_allowed_killings_capped(c, sched, seed, DEFAULT_STEP_CAP)
}

/// Runs the restricted process (only allowed pairs coalesce) and, on the same
/// particle paths, an unrestricted coalescing system whose clusters ride on
/// live restricted particles. A cluster whose carrier is killed moves to the
/// killer; clusters whose carriers share a site merge onto the lowest index.
/// Clusters at distinct sites have distinct carriers and so move
/// independently, which makes the cluster system a coalescing walk; it can
/// never hold more clusters than there are live restricted particles.
pub fn simulate_with_allowed_killings_capped(
    c: &Chain,
    sched: &KillSchedule,
    seed: u64,
    cap: u64,
) -> Result<CoupledTimes> {
    let n = c.n();
    let mut rngs = particle_streams(seed, n);
    let mut pos: Vec<usize> = (0..n).collect();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut carries = vec![true; n];
    let mut clusters = n;
    // Survivors at each site this tick, as a linked list in increasing index order.
    let mut head_stamp = vec![u64::MAX; n];
    let mut head = vec![0usize; n];
    let mut tail = vec![0usize; n];
    let mut next = vec![usize::MAX; n];
    let mut merge_stamp = vec![u64::MAX; n];

    let mut unrestricted = None;
    let mut restricted = None;
    let mut epoch = 0;
    let mut t = 0u64;
    while restricted.is_none() {
        if t == cap {
            break;
        }
        t += 1;
        while sched.epochs[epoch].end.is_some_and(|end| t >= end) {
            epoch += 1;
        }
        let allowed = &sched.epochs[epoch].allowed;
        for &a in &alive {
            pos[a] = step_particle(c, &mut rngs[a], pos[a]);
        }
        let mut survivors = Vec::with_capacity(alive.len());
        for &a in &alive {
            let site = pos[a];
            let killer = if head_stamp[site] == t {
                let mut b = head[site];
                loop {
                    if allowed.permits(b, a) {
                        break Some(b);
                    }
                    if next[b] == usize::MAX {
                        break None;
                    }
                    b = next[b];
                }
            } else {
                None
            };
            match killer {
                Some(b) => {
                    if carries[a] {
                        carries[a] = false;
                        if carries[b] {
                            clusters -= 1;
                        } else {
                            carries[b] = true;
                        }
                    }
                }
                None => {
                    next[a] = usize::MAX;
                    if head_stamp[site] == t {
                        next[tail[site]] = a;
                    } else {
                        head_stamp[site] = t;
                        head[site] = a;
                    }
                    tail[site] = a;
                    survivors.push(a);
                }
            }
        }
        alive = survivors;
        for &a in &alive {
            if carries[a] {
                if merge_stamp[pos[a]] == t {
                    carries[a] = false;
                    clusters -= 1;
                } else {
                    merge_stamp[pos[a]] = t;
                }
            }
        }
        if unrestricted.is_none() && clusters == 1 {
            unrestricted = Some(t);
        }
        if alive.len() == 1 {
            restricted = Some(t);
        }
    }
    let unrestricted = unrestricted.ok_or(WalkError::HorizonExceeded(cap))?;
    if let Some(r) = restricted {
        if unrestricted > r {
            return Err(WalkError::DominationViolated { unrestricted, restricted: r });
        }
    }
    Ok(CoupledTimes { unrestricted, restricted })
}

/// First meeting times of the free paths of every particle pair, on the same
/// per-particle streams as [`coalescence_trace`]. Entry `(a, b)` with `a < b`
/// lives at `a * n + b`; `None` if the pair had not met by `cap`.
pub fn pair_meeting_times(c: &Chain, seed: u64, cap: u64) -> Vec<Option<u64>> {
    let n = c.n();
    let mut rngs = particle_streams(seed, n);
    let mut pos: Vec<usize> = (0..n).collect();
    let mut met = vec![None; n * n];
    let mut open = n * (n - 1) / 2;
    let mut t = 0u64;
    while open > 0 && t < cap {
        t += 1;
        for a in 0..n {
            pos[a] = step_particle(c, &mut rngs[a], pos[a]);
        }
        for a in 0..n {
            for b in (a + 1)..n {
                if met[a * n + b].is_none() && pos[a] == pos[b] {
                    met[a * n + b] = Some(t);
                    open -= 1;
                }
            }
        }
    }
    met
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceEstimate {
    pub graph_label: String,
    pub n: usize,
    pub replicas: usize,
    pub seed: u64,
    pub mean: f64,
    pub stderr: f64,
    pub t_hit: f64,
    pub ratio_to_thit: f64,
    pub horizon_exceeded_count: usize,
    /// Set when fewer than two finite samples were available; `stderr` is then 0.
    pub degenerate: bool,
}

/// Mean and standard error of samples in replica order.
pub fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let k = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / k;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Replica `r` uses seed `split(seed, r)`.
pub fn replica_samples(c: &Chain, replicas: usize, seed: u64, cap: u64) -> Result<Vec<Option<u64>>> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| match coalescence_trace(c, split(seed, r), cap) {
            Ok(trace) => Ok(Some(trace.tau)),
            Err(WalkError::HorizonExceeded(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

pub fn estimate_tcoal(c: &Chain, replicas: usize, seed: u64) -> Result<CoalescenceEstimate> {
    estimate_tcoal_capped(c, replicas, seed, DEFAULT_STEP_CAP)
}

pub fn estimate_tcoal_capped(c: &Chain, replicas: usize, seed: u64, cap: u64) -> Result<CoalescenceEstimate> {
    if replicas == 0 {
        return Err(WalkError::Config("replicas must be at least 1".into()));
    }
    let t_hit = hitting_times(c)?.t_hit;
    let samples = replica_samples(c, replicas, seed, cap)?;
    let finite: Vec<f64> = samples.iter().flatten().map(|&s| s as f64).collect();
    if finite.is_empty() {
        return Err(WalkError::HorizonExceeded(cap));
    }
    let (mean, stderr) = mean_stderr(&finite);
    Ok(CoalescenceEstimate {
        graph_label: c.label().to_string(),
        n: c.n(),
        replicas,
        seed,
        mean,
        stderr,
        t_hit,
        ratio_to_thit: mean / t_hit,
        horizon_exceeded_count: replicas - finite.len(),
        degenerate: finite.len() < 2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationSummary {
    pub replicas: usize,
    pub restricted_exceeded: usize,
    pub mean_unrestricted: f64,
    pub mean_restricted: f64,
    /// Largest `tau_unrestricted - tau_restricted` seen; never positive.
    pub worst_gap: i64,
}

/// Coupled replicas under `sched`; any domination violation is an error.
pub fn check_domination(c: &Chain, sched: &KillSchedule, replicas: usize, seed: u64) -> Result<DominationSummary> {
    let runs: Vec<CoupledTimes> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| simulate_with_allowed_killings(c, sched, split(seed, r)))
        .collect::<Result<_>>()?;
    let unrestricted: Vec<f64> = runs.iter().map(|r| r.unrestricted as f64).collect();
    let restricted: Vec<f64> = runs.iter().filter_map(|r| r.restricted).map(|v| v as f64).collect();
    let worst_gap = runs
        .iter()
        .filter_map(|r| r.restricted.map(|v| r.unrestricted as i64 - v as i64))
        .max()
        .unwrap_or(0);
    Ok(DominationSummary {
        replicas,
        restricted_exceeded: replicas - restricted.len(),
        mean_unrestricted: mean_stderr(&unrestricted).0,
        mean_restricted: if restricted.is_empty() { f64::NAN } else { mean_stderr(&restricted).0 },
        worst_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::lazy_walk_chain;
    use crate::graph::Graph;

    fn lazy(n: usize, edges: &[(usize, usize)]) -> Chain {
        lazy_walk_chain(&Graph::new(n, edges).unwrap())
    }

    fn k2() -> Chain {
        lazy(2, &[(0, 1)])
    }

    fn p3() -> Chain {
        lazy(3, &[(0, 1), (1, 2)])
    }

    fn cycle(n: usize) -> Chain {
        lazy(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
    }

    #[test]
    fn schedule_examples() {
        let s = build_epoch_schedule(1, 1.0, 2);
        assert_eq!(s.m(), 1);
        assert_eq!(s.partition, vec![0..1, 1..2]);

        let s = build_epoch_schedule(4, 10.0, 4);
        assert_eq!(s.m(), 2);
        assert_eq!(s.partition, vec![0..1, 1..3, 3..4]);
        let spans: Vec<(u64, Option<u64>)> = s.epochs.iter().map(|e| (e.start, e.end)).collect();
        assert_eq!(spans, vec![(0, Some(9)), (9, Some(75)), (75, Some(205)), (205, None)]);
        assert_eq!(s.bounded_horizon, 205);
        assert_eq!(s.epochs[1].allowed, Allowed::Blocks { killers: 1..3, victims: 3..4 });
        assert_eq!(s.epochs[2].allowed, Allowed::Blocks { killers: 0..1, victims: 1..4 });
        assert_eq!(s.epochs[0].allowed, Allowed::None);
        assert_eq!(s.epochs[3].allowed, Allowed::All);
        assert_eq!(s.epoch_at(8), 0);
        assert_eq!(s.epoch_at(9), 1);
        assert_eq!(s.epoch_at(10_000), 3);
    }

    #[test]
    fn partition_tiles_indices() {
        for n in 2..70 {
            let s = build_epoch_schedule(3, 5.0, n);
            assert_eq!(s.partition[0], 0..1);
            assert_eq!(s.partition.last().unwrap().end, n);
            assert!(s.partition.windows(2).all(|w| w[0].end == w[1].start));
            for (i, block) in s.partition[..s.m()].iter().enumerate() {
                assert_eq!(block.len(), 1 << i);
            }
            assert!(!s.partition[s.m()].is_empty());
            assert!(s.epochs.windows(2).all(|w| w[0].end == Some(w[1].start)));
        }
    }

    #[test]
    fn trace_invariants() {
        let c = cycle(8);
        for seed in 0..20 {
            let trace = coalescence_trace(&c, seed, DEFAULT_STEP_CAP).unwrap();
            assert_eq!(trace.kill_time[0], None);
            assert_eq!(trace.alive_at(0), 8);
            assert_eq!(trace.alive_at(trace.tau), 1);
            assert!(trace.alive_at(trace.tau - 1) > 1);
            let counts: Vec<usize> = (0..=trace.tau).map(|t| trace.alive_at(t)).collect();
            assert!(counts.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let c = p3();
        assert_eq!(simulate_coalescence(&c, 42).unwrap(), simulate_coalescence(&c, 42).unwrap());
        let a: Vec<u64> = (0..10).map(|s| simulate_coalescence(&c, s).unwrap()).collect();
        assert!(a.iter().any(|&v| v != a[0]));
    }

    #[test]
    fn k2_trace_matches_free_meeting() {
        let c = k2();
        for seed in 0..50 {
            let tau = simulate_coalescence(&c, seed).unwrap();
            assert_eq!(pair_meeting_times(&c, seed, DEFAULT_STEP_CAP)[1], Some(tau));
        }
    }

    #[test]
    fn cap_is_reported() {
        let c = cycle(16);
        assert!(matches!(coalescence_trace(&c, 1, 2), Err(WalkError::HorizonExceeded(2))));
    }

    #[test]
    fn all_pairs_allowed_gives_equal_times() {
        let c = cycle(6);
        let sched = KillSchedule::constant(Allowed::All, 6);
        for seed in 0..50 {
            let times = simulate_with_allowed_killings(&c, &sched, seed).unwrap();
            assert_eq!(times.restricted, Some(times.unrestricted));
            assert_eq!(times.unrestricted, simulate_coalescence(&c, seed).unwrap());
        }
    }

    #[test]
    fn no_killings_never_coalesce() {
        let c = cycle(5);
        let sched = KillSchedule::constant(Allowed::None, 5);
        let times = simulate_with_allowed_killings_capped(&c, &sched, 3, 20_000).unwrap();
        assert_eq!(times.restricted, None);
        assert!(times.unrestricted < 20_000);
    }

    #[test]
    fn k2_schedule_dominates() {
        let sched = build_epoch_schedule(1, 2.0, 2);
        let summary = check_domination(&k2(), &sched, 1000, 7).unwrap();
        assert_eq!(summary.restricted_exceeded, 0);
        assert!(summary.worst_gap <= 0);
        assert!(summary.mean_unrestricted <= summary.mean_restricted);
    }

    #[test]
    fn single_replica_is_degenerate() {
        let est = estimate_tcoal(&k2(), 1, 5).unwrap();
        assert_eq!(est.stderr, 0.0);
        assert!(est.degenerate);
        assert_eq!(est.replicas, 1);
        assert!(estimate_tcoal(&k2(), 0, 5).is_err());
    }

    #[test]
    fn k2_mean_is_two() {
        let est = estimate_tcoal(&k2(), 10_000, 2024).unwrap();
        assert!((est.mean - 2.0).abs() <= 3.0 * est.stderr, "{est:?}");
        assert!((est.t_hit - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mean_stderr_small_cases() {
        assert_eq!(mean_stderr(&[3.0]), (3.0, 0.0));
        let (m, s) = mean_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
