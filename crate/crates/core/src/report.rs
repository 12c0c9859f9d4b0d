//! Suite runner and report writers.
//!
//! Rows are produced in a fixed order (suite order, then the order each
//! verifier emits), so identical configurations give byte-identical files.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{mixing_time, simple_walk_chain};
use crate::check::{BoundCheck, Relation};
use crate::coalescing::{
    build_epoch_schedule, check_domination, estimate_tcoal, CoalescenceEstimate, DominationSummary,
    TCOAL_RATIO_CEILING,
};
use crate::error::{Result, WalkError};
use crate::generators::{generate, Family, FamilySpec};
use crate::graph::Graph;
use crate::hitting::{robust_ceil, verify_green_lemmas, verify_hitting_bounds, verify_return_bounds, Analysis};
use crate::meeting::{verify_meeting_chain, verify_meeting_labeled, SurvivalResult};
use crate::network::verify_network_propositions;
use crate::rng::split;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "WALKLAB_THREADS";
/// Seed of every randomized family in the default suite.
pub const DEFAULT_FAMILY_SEED: u64 = 1;
/// Accepted t_rel log-log slope for lollipops against n.
pub const LOLLIPOP_TREL_SLOPE: (f64, f64) = (1.6, 2.4);
/// Accepted t_hit log-log slope for stretched expanders against n sqrt(t_rel).
pub const STRETCHED_THIT_SLOPE: (f64, f64) = (0.8, 1.2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckFamily {
    Hitting,
    Return,
    Green,
    Network,
    Meeting,
    Coalescing,
    Sharpness,
}

impl CheckFamily {
    pub const ALL: [CheckFamily; 7] = [
        CheckFamily::Hitting,
        CheckFamily::Return,
        CheckFamily::Green,
        CheckFamily::Network,
        CheckFamily::Meeting,
        CheckFamily::Coalescing,
        CheckFamily::Sharpness,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CheckFamily::Hitting => "hitting",
            CheckFamily::Return => "return",
            CheckFamily::Green => "green",
            CheckFamily::Network => "network",
            CheckFamily::Meeting => "meeting",
            CheckFamily::Coalescing => "coalescing",
            CheckFamily::Sharpness => "sharpness",
        }
    }
}

impl fmt::Display for CheckFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckFamily {
    type Err = WalkError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| WalkError::Config(format!("unknown check family {s:?}")))
    }
}

/// Paths and cycles on 3..=16 vertices, complete graphs on 2..=8, stars on
/// 4..=16, lollipops (3, n) for n in {8, 16, 32}, stretched expanders (8, k)
/// for k in {2, 4} and random regular graphs (16, 3) and (32, 4).
pub fn default_suite() -> Vec<FamilySpec> {
    let mut suite = Vec::new();
    suite.extend((3..=16).map(|n| FamilySpec::new(Family::Path { n })));
    suite.extend((3..=16).map(|n| FamilySpec::new(Family::Cycle { n })));
    suite.extend((2..=8).map(|n| FamilySpec::new(Family::Complete { n })));
    suite.extend((4..=16).map(|n| FamilySpec::new(Family::Star { n })));
    let seeded = |family| FamilySpec::seeded(family, DEFAULT_FAMILY_SEED);
    suite.extend([8, 16, 32].map(|n| seeded(Family::Lollipop { d: 3, n })));
    suite.extend([2, 4].map(|k| seeded(Family::StretchedExpander { n0: 8, k })));
    suite.push(seeded(Family::RandomRegular { n: 16, d: 3 }));
    suite.push(seeded(Family::RandomRegular { n: 32, d: 4 }));
    suite
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub families: Vec<FamilySpec>,
    /// Cap of the return-probability and Green's-function time grids.
    pub horizon: u64,
    /// Monte Carlo replicas per graph for coalescence.
    pub replicas: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub checks: Vec<CheckFamily>,
    /// Random moving-target trajectories per graph.
    pub meeting_trials: usize,
    /// Adds the non-lazy K2 walk, whose meeting-bound failures are expected.
    pub negative_control: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            families: default_suite(),
            horizon: 4096,
            replicas: 200,
            seed: 2024,
            output_dir: PathBuf::from("walklab-report"),
            checks: CheckFamily::ALL.to_vec(),
            meeting_trials: 100,
            negative_control: true,
        }
    }
}

impl SuiteConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(WalkError::Config("families must not be empty".into()));
        }
        if self.replicas == 0 {
            return Err(WalkError::Config("replicas must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(WalkError::Config("horizon must be at least 1".into()));
        }
        if self.checks.is_empty() {
            return Err(WalkError::Config("checks must not be empty".into()));
        }
        for spec in &self.families {
            spec.validate()?;
        }
        Ok(())
    }

    fn wants(&self, family: CheckFamily) -> bool {
        self.checks.contains(&family)
    }
}

/// Installs the global pool with `WALKLAB_THREADS` workers when the variable is set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&k| k >= 1)
        .ok_or_else(|| WalkError::Config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // A second initialisation keeps the existing pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationRow {
    pub graph_label: String,
    pub t_mix: u64,
    pub bounded_horizon: u64,
    #[serde(flatten)]
    pub summary: DominationSummary,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOutcome {
    pub checks: BTreeMap<CheckFamily, Vec<BoundCheck>>,
    pub survival: Vec<SurvivalResult>,
    pub coalescence: Vec<CoalescenceEstimate>,
    pub domination: Vec<DominationRow>,
    pub sweeps: Vec<SweepReport>,
    /// Checks on the non-lazy control chain; failures here are expected.
    pub negative_control: Vec<BoundCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub family: String,
    pub name: String,
    pub context: String,
    pub x: Option<usize>,
    pub t: Option<u64>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl FailureRow {
    fn new(family: &str, c: &BoundCheck) -> Self {
        Self {
            family: family.to_string(),
            name: c.name.clone(),
            context: c.context.clone(),
            x: c.x,
            t: c.t,
            lhs: c.lhs,
            rhs: c.rhs,
            margin: c.margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total_checks: usize,
    pub failures: Vec<FailureRow>,
    pub expected_failures: Vec<FailureRow>,
    /// Report-only comparisons that came out above their reference value.
    pub report_only_exceedances: usize,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl SuiteOutcome {
    pub fn summary(&self) -> Summary {
        let mut failures = Vec::new();
        let mut exceedances = 0;
        let mut total = 0;
        for (family, checks) in &self.checks {
            total += checks.len();
            for c in checks {
                if c.is_failure() {
                    failures.push(FailureRow::new(family.as_str(), c));
                } else if !c.pass {
                    exceedances += 1;
                }
            }
        }
        total += self.negative_control.len();
        let expected: Vec<FailureRow> =
            self.negative_control.iter().filter(|c| !c.pass).map(|c| FailureRow::new("negative_control", c)).collect();
        if !self.negative_control.is_empty() && expected.is_empty() {
            let c = BoundCheck::at_most("negative_control_triggered", "simple_walk(K2)", 1.0, 0.0);
            failures.push(FailureRow::new("negative_control", &c));
        }
        Summary { total_checks: total, failures, expected_failures: expected, report_only_exceedances: exceedances }
    }
}

struct GraphOutcome {
    checks: BTreeMap<CheckFamily, Vec<BoundCheck>>,
    survival: Vec<SurvivalResult>,
    coalescence: Option<CoalescenceEstimate>,
    domination: Option<DominationRow>,
}

fn run_graph(spec: &FamilySpec, config: &SuiteConfig, graph_seed: u64) -> Result<GraphOutcome> {
    let label = spec.label();
    let graph = generate(spec)?;
    let a = Analysis::new(&graph, label.clone())?;
    let mut checks = BTreeMap::new();
    let mut survival = Vec::new();
    let mut coalescence = None;
    let mut domination = None;
    if config.wants(CheckFamily::Hitting) {
        checks.insert(CheckFamily::Hitting, verify_hitting_bounds(&a)?);
    }
    if config.wants(CheckFamily::Return) {
        checks.insert(CheckFamily::Return, verify_return_bounds(&a, config.horizon));
    }
    if config.wants(CheckFamily::Green) {
        checks.insert(CheckFamily::Green, verify_green_lemmas(&a, config.horizon));
    }
    if config.wants(CheckFamily::Network) {
        checks.insert(CheckFamily::Network, verify_network_propositions(&a, split(graph_seed, 0))?);
    }
    if config.wants(CheckFamily::Meeting) {
        let horizon = meeting_horizon(a.t_rel);
        let report = verify_meeting_labeled(&graph, &label, horizon, config.meeting_trials, split(graph_seed, 1))?;
        let mut rows = report.checks;
        for r in &report.survival {
            rows.push(meeting_row_check(r));
            rows.extend(r.checks());
        }
        checks.insert(CheckFamily::Meeting, rows);
        survival = report.survival;
    }
    if config.wants(CheckFamily::Coalescing) {
        let est = estimate_tcoal(&a.chain, config.replicas, split(graph_seed, 2))?;
        let t_mix = mixing_time(&a.chain)?;
        let sched = build_epoch_schedule(t_mix, est.t_hit, a.n());
        let dom = check_domination(&a.chain, &sched, config.replicas, split(graph_seed, 3))?;
        let relaxation_form = a.stats.imbalance() * a.n() as f64 * a.t_rel.sqrt();
        checks.insert(
            CheckFamily::Coalescing,
            vec![
                BoundCheck::at_most("coalescence_within_cap", &label, est.horizon_exceeded_count as f64, 0.0),
                BoundCheck::at_most("coalescence_domination", &label, dom.worst_gap as f64, 0.0),
                BoundCheck::at_most("coalescence_ratio_ceiling", &label, est.ratio_to_thit, TCOAL_RATIO_CEILING)
                    .report_only(),
                BoundCheck::at_most("coalescence_relaxation_form", &label, est.mean, TCOAL_RATIO_CEILING * relaxation_form)
                    .report_only(),
            ],
        );
        domination = Some(DominationRow { graph_label: label.clone(), t_mix, bounded_horizon: sched.bounded_horizon, summary: dom });
        coalescence = Some(est);
    }
    Ok(GraphOutcome { checks, survival, coalescence, domination })
}

/// Moving-target checks run to `10 ceil(t_rel)`.
pub fn meeting_horizon(t_rel: f64) -> u64 {
    (10 * robust_ceil(t_rel)).max(1)
}

fn meeting_row_check(r: &SurvivalResult) -> BoundCheck {
    let ctx = format!("{} {}#{}", r.graph_label, r.kind.as_str(), r.index);
    BoundCheck::at_most("meeting_bound", &ctx, r.probability, r.bound).when(r.t)
}

/// The non-lazy walk on K2. Its spectrum contains -1, and the moving-target
/// bound fails on it.
pub fn negative_control_checks(seed: u64) -> Result<Vec<BoundCheck>> {
    let k2 = Graph::new(2, &[(0, 1)])?;
    let c = simple_walk_chain(&k2).with_label("simple_walk(K2)");
    let report = verify_meeting_chain(&c, 8, 10, seed)?;
    Ok(report.survival.iter().map(meeting_row_check).collect())
}

pub fn run_suite(config: &SuiteConfig) -> Result<SuiteOutcome> {
    config.validate()?;
    let per_graph: Vec<GraphOutcome> = config
        .families
        .par_iter()
        .enumerate()
        .map(|(i, spec)| run_graph(spec, config, split(config.seed, i as u64)))
        .collect::<Result<_>>()?;
    let mut outcome = SuiteOutcome::default();
    for g in per_graph {
        for (family, rows) in g.checks {
            outcome.checks.entry(family).or_default().extend(rows);
        }
        outcome.survival.extend(g.survival);
        outcome.coalescence.extend(g.coalescence);
        outcome.domination.extend(g.domination);
    }
    if config.wants(CheckFamily::Sharpness) {
        let sweeps = vec![
            sharpness_sweep(SweepKind::Lollipop, 3, &[16, 24, 32, 48, 64], DEFAULT_FAMILY_SEED)?,
            sharpness_sweep(SweepKind::StretchedExpander, 8, &[2, 4, 8], DEFAULT_FAMILY_SEED)?,
        ];
        outcome.checks.insert(CheckFamily::Sharpness, sweeps.iter().flat_map(|s| s.checks.clone()).collect());
        outcome.sweeps = sweeps;
    }
    if config.negative_control {
        outcome.negative_control = negative_control_checks(split(config.seed, u64::MAX))?;
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Fixed body degree `d`, sweeping the total size `n`.
    Lollipop,
    /// Fixed base size `n0`, sweeping the subdivision length `k`.
    StretchedExpander,
}

impl SweepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepKind::Lollipop => "lollipop",
            SweepKind::StretchedExpander => "stretched_expander",
        }
    }
}

impl FromStr for SweepKind {
    type Err = WalkError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lollipop" => Ok(SweepKind::Lollipop),
            "stretched_expander" => Ok(SweepKind::StretchedExpander),
            other => Err(WalkError::Config(format!("unknown sweep kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub label: String,
    /// The swept parameter (`n` for lollipops, `k` for stretched expanders).
    pub size: usize,
    pub n: usize,
    pub t_rel: f64,
    pub t_hit: f64,
    /// `(d_avg/d_min) n sqrt(t_rel)`.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: SweepKind,
    /// Body degree or base size.
    pub fixed: usize,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
    /// Slope of log t_rel against log n.
    pub t_rel_slope: f64,
    /// Slope of log t_hit against log scale.
    pub t_hit_slope: f64,
    pub checks: Vec<BoundCheck>,
}

/// Ordinary least-squares slope of `ys` on `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn slope_window(name: &str, context: &str, slope: f64, (lo, hi): (f64, f64)) -> [BoundCheck; 2] {
    [BoundCheck::at_most(&format!("{name}_min"), context, lo, slope), BoundCheck::at_most(&format!("{name}_max"), context, slope, hi)]
}

/// Scaling sweep: every point shares `seed`, so stretched expanders share one base graph.
pub fn sharpness_sweep(kind: SweepKind, fixed: usize, sizes: &[usize], seed: u64) -> Result<SweepReport> {
    if sizes.len() < 3 {
        return Err(WalkError::Config(format!("a sweep needs at least 3 sizes, got {}", sizes.len())));
    }
    let mut distinct = sizes.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != sizes.len() {
        return Err(WalkError::Config("sweep sizes must be distinct".into()));
    }
    let points: Vec<SweepPoint> = sizes
        .par_iter()
        .map(|&size| {
            let family = match kind {
                SweepKind::Lollipop => Family::Lollipop { d: fixed, n: size },
                SweepKind::StretchedExpander => Family::StretchedExpander { n0: fixed, k: size },
            };
            let spec = FamilySpec::seeded(family, seed);
            let a = Analysis::new(&generate(&spec)?, spec.label())?;
            Ok(SweepPoint {
                label: spec.label(),
                size,
                n: a.n(),
                t_rel: a.t_rel,
                t_hit: a.hitting.t_hit,
                scale: a.volume_ratio() * a.t_rel.sqrt(),
            })
        })
        .collect::<Result<_>>()?;
    let log = |f: fn(&SweepPoint) -> f64| points.iter().map(|p| f(p).ln()).collect::<Vec<_>>();
    let t_rel_slope = least_squares_slope(&log(|p| p.n as f64), &log(|p| p.t_rel));
    let t_hit_slope = least_squares_slope(&log(|p| p.scale), &log(|p| p.t_hit));
    let context = format!("{}({fixed}) sizes={sizes:?}", kind.as_str());
    let checks = match kind {
        SweepKind::Lollipop => slope_window("lollipop_trel_slope", &context, t_rel_slope, LOLLIPOP_TREL_SLOPE).to_vec(),
        SweepKind::StretchedExpander => {
            slope_window("stretched_thit_slope", &context, t_hit_slope, STRETCHED_THIT_SLOPE).to_vec()
        }
    };
    Ok(SweepReport { kind, fixed, seed, points, t_rel_slope, t_hit_slope, checks })
}

/// `%g`-style rendering with 12 significant digits.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let fixed = format!("{v:.prec$}", prec = (11 - exp) as usize);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_checks_csv(path: &Path, checks: &[BoundCheck]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["check", "graph", "x", "t", "lhs", "rhs", "margin", "relation", "tolerance", "pass", "gating"])?;
    for c in checks {
        let (relation, tolerance) = match c.relation {
            Relation::AtMost => ("at_most", String::new()),
            Relation::Equal { tolerance } => ("equal", format_float(tolerance)),
        };
        w.write_record([
            c.name.clone(),
            c.context.clone(),
            opt(c.x),
            opt(c.t),
            format_float(c.lhs),
            format_float(c.rhs),
            format_float(c.margin),
            relation.to_string(),
            tolerance,
            c.pass.to_string(),
            c.gating.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_survival_csv(path: &Path, rows: &[SurvivalResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["graph_label", "kind", "index", "t", "probability", "bound", "margin", "operator_bound", "pass"])?;
    for r in rows {
        w.write_record([
            r.graph_label.clone(),
            r.kind.as_str().to_string(),
            r.index.to_string(),
            r.t.to_string(),
            format_float(r.probability),
            format_float(r.bound),
            format_float(r.margin),
            format_float(r.operator_bound),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv(path: &Path, sweeps: &[SweepReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["kind", "fixed", "label", "size", "n", "t_rel", "t_hit", "scale"])?;
    for s in sweeps {
        for p in &s.points {
            w.write_record([
                s.kind.as_str().to_string(),
                s.fixed.to_string(),
                p.label.clone(),
                p.size.to_string(),
                p.n.to_string(),
                format_float(p.t_rel),
                format_float(p.t_hit),
                format_float(p.scale),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_pretty_json(value)?)?;
    Ok(())
}

/// Writes one CSV per check family, the survival table, the simulation and
/// domination reports, the sweep tables and `summary.json`.
pub fn write_suite_outputs(outcome: &SuiteOutcome, dir: &Path) -> Result<Summary> {
    fs::create_dir_all(dir)?;
    for (family, checks) in &outcome.checks {
        write_checks_csv(&dir.join(format!("{family}.csv")), checks)?;
    }
    if !outcome.survival.is_empty() {
        write_survival_csv(&dir.join("survival.csv"), &outcome.survival)?;
    }
    if !outcome.coalescence.is_empty() {
        write_json(&dir.join("coalescence.json"), &outcome.coalescence)?;
        write_json(&dir.join("domination.json"), &outcome.domination)?;
    }
    if !outcome.sweeps.is_empty() {
        write_sweep_csv(&dir.join("sweep.csv"), &outcome.sweeps)?;
    }
    if !outcome.negative_control.is_empty() {
        write_checks_csv(&dir.join("negative_control.csv"), &outcome.negative_control)?;
    }
    let summary = outcome.summary();
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Spectrum and hitting profile of the lazy walk on one graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisDump {
    pub label: String,
    pub n: usize,
    pub edges: usize,
    pub d_min: usize,
    pub d_max: usize,
    pub d_avg: f64,
    pub diameter: usize,
    pub eigenvalues: Vec<f64>,
    pub t_rel: f64,
    pub t_mix: u64,
    pub t_hit: f64,
    /// `expected_hit[y][x] = E_y[tau_x]`.
    pub expected_hit: Vec<Vec<f64>>,
    /// `E_pi[tau_x]`.
    pub from_pi: Vec<f64>,
}

pub fn analyze(graph: &Graph, label: &str) -> Result<AnalysisDump> {
    let a = Analysis::new(graph, label)?;
    let n = a.n();
    Ok(AnalysisDump {
        label: label.to_string(),
        n,
        edges: graph.edge_count(),
        d_min: a.stats.d_min,
        d_max: a.stats.d_max,
        d_avg: a.stats.d_avg_f64(),
        diameter: graph.diameter(),
        eigenvalues: a.spectrum.eigenvalues.clone(),
        t_rel: a.t_rel,
        t_mix: mixing_time(&a.chain)?,
        t_hit: a.hitting.t_hit,
        expected_hit: (0..n).map(|y| (0..n).map(|x| a.hitting.hit(y, x)).collect()).collect(),
        from_pi: a.hitting.from_pi.clone(),
    })
}
