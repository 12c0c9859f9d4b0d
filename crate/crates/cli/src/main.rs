use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use walklab::coalescing::{build_epoch_schedule, check_domination, estimate_tcoal};
use walklab::report::{
    analyze, configure_threads, run_suite, sharpness_sweep, to_pretty_json, write_json, write_suite_outputs, write_sweep_csv,
    CheckFamily, SuiteConfig, SweepKind,
};
use walklab::{chain::mixing_time, generate, lazy_walk_chain, Family, FamilySpec, Graph, WalkError};

/// Exit status for malformed invocations and configurations.
const USAGE: u8 = 2;
/// Exit status when a gating check fails.
const CHECK_FAILED: u8 = 1;
/// Exit status for I/O and numerical errors.
const RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "walklab", version, about = "Exact lazy-random-walk quantities and bound verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph and write it as canonical JSON.
    Gen {
        #[command(flatten)]
        family: FamilyArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the spectrum, mixing time and hitting profile of one graph.
    Analyze {
        #[command(flatten)]
        source: GraphSource,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suite and write CSV/JSON reports.
    Verify(VerifyArgs),
    /// Monte Carlo estimate of the coalescence time of one graph.
    Simulate {
        #[command(flatten)]
        source: GraphSource,
        #[arg(long, default_value_t = 1000)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        sim_seed: u64,
        /// Also run coupled replicas under the allowed-killings schedule.
        #[arg(long)]
        domination: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scaling sweep over a graph family with log-log slopes.
    Sweep {
        #[arg(long, value_enum)]
        kind: SweepArg,
        /// Body degree (lollipop) or base size (stretched expander).
        #[arg(long)]
        fixed: Option<usize>,
        /// Comma-separated sizes: `n` for lollipops, `k` for stretched expanders.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = walklab::report::DEFAULT_FAMILY_SEED)]
        seed: u64,
        /// Directory for `sweep.csv` and `sweep.json`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Path,
    Cycle,
    Complete,
    Star,
    Lollipop,
    StretchedExpander,
    RandomRegular,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepArg {
    Lollipop,
    StretchedExpander,
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GraphSource {
    #[command(flatten)]
    family: FamilyArgs,
    /// Read a graph JSON file instead of generating one.
    #[arg(long, conflicts_with = "family")]
    graph: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// JSON file mirroring the suite configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Comma-separated subset of hitting,return,green,network,meeting,coalescing,sharpness.
    #[arg(long, value_delimiter = ',')]
    checks: Option<Vec<String>>,
    #[arg(long)]
    meeting_trials: Option<usize>,
    /// Skip the non-lazy K2 control.
    #[arg(long)]
    no_negative_control: bool,
}

enum CliError {
    /// Malformed flags, configuration or family parameters.
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<WalkError> for CliError {
    fn from(e: WalkError) -> Self {
        match e {
            WalkError::Config(_) | WalkError::InfeasibleSpec(_) | WalkError::Json(_) => CliError::Usage(e.into()),
            other => CliError::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

fn usage(msg: String) -> CliError {
    CliError::Usage(anyhow::anyhow!(msg))
}

impl FamilyArgs {
    fn spec(&self) -> Result<FamilySpec, CliError> {
        let Some(kind) = self.family else { return Err(usage("--family is required".into())) };
        let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| usage(format!("--{flag} is required for this family")));
        let family = match kind {
            FamilyArg::Path => Family::Path { n: need(self.n, "n")? },
            FamilyArg::Cycle => Family::Cycle { n: need(self.n, "n")? },
            FamilyArg::Complete => Family::Complete { n: need(self.n, "n")? },
            FamilyArg::Star => Family::Star { n: need(self.n, "n")? },
            FamilyArg::Lollipop => Family::Lollipop { d: need(self.d, "d")?, n: need(self.n, "n")? },
            FamilyArg::StretchedExpander => {
                Family::StretchedExpander { n0: need(self.n0, "n0")?, k: need(self.k, "k")? }
            }
            FamilyArg::RandomRegular => Family::RandomRegular { n: need(self.n, "n")?, d: need(self.d, "d")? },
        };
        let spec = FamilySpec::seeded(family, self.seed);
        spec.validate()?;
        Ok(spec)
    }
}

impl GraphSource {
    fn load(&self) -> Result<(Graph, String), CliError> {
        match &self.graph {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Ok((Graph::from_json_str(&text)?, path.display().to_string()))
            }
            None => {
                let spec = self.family.spec()?;
                Ok((generate(&spec)?, spec.label()))
            }
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn suite_config(args: &VerifyArgs) -> Result<SuiteConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            SuiteConfig::from_json_str(&text)?
        }
        None => SuiteConfig::default(),
    };
    if let Some(h) = args.horizon {
        config.horizon = h;
    }
    if let Some(r) = args.replicas {
        config.replicas = r;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(dir) = &args.output_dir {
        config.output_dir = dir.clone();
    }
    if let Some(names) = &args.checks {
        config.checks = names.iter().map(|s| s.parse::<CheckFamily>()).collect::<walklab::Result<_>>()?;
    }
    if let Some(t) = args.meeting_trials {
        config.meeting_trials = t;
    }
    if args.no_negative_control {
        config.negative_control = false;
    }
    config.validate()?;
    Ok(config)
}

enum Outcome {
    Done,
    ChecksFailed,
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Gen { family, out } => {
            let spec = family.spec()?;
            let graph = generate(&spec)?;
            emit(&graph.to_json_string(), out.as_deref())?;
        }
        Command::Analyze { source, out } => {
            let (graph, label) = source.load()?;
            let dump = analyze(&graph, &label)?;
            emit(&to_pretty_json(&dump)?, out.as_deref())?;
        }
        Command::Verify(args) => {
            let config = suite_config(&args)?;
            let outcome = run_suite(&config)?;
            let summary = write_suite_outputs(&outcome, &config.output_dir)?;
            eprintln!(
                "{} checks, {} failures, {} expected failures; reports in {}",
                summary.total_checks,
                summary.failures.len(),
                summary.expected_failures.len(),
                config.output_dir.display()
            );
            if !summary.passed() {
                for f in &summary.failures {
                    eprintln!("FAIL {} {} x={:?} t={:?} margin={}", f.name, f.context, f.x, f.t, f.margin);
                }
                return Ok(Outcome::ChecksFailed);
            }
        }
        Command::Simulate { source, replicas, sim_seed, domination, out } => {
            if replicas == 0 {
                return Err(usage("--replicas must be at least 1".into()));
            }
            let (graph, label) = source.load()?;
            let chain = lazy_walk_chain(&graph).with_label(label);
            let estimate = estimate_tcoal(&chain, replicas, sim_seed)?;
            let text = if domination {
                let t_mix = mixing_time(&chain)?;
                let sched = build_epoch_schedule(t_mix, estimate.t_hit, graph.n());
                let dom = check_domination(&chain, &sched, replicas, sim_seed)?;
                to_pretty_json(&serde_json::json!({ "estimate": estimate, "domination": dom }))?
            } else {
                to_pretty_json(&estimate)?
            };
            emit(&text, out.as_deref())?;
        }
        Command::Sweep { kind, fixed, sizes, seed, output_dir } => {
            let (kind, default_fixed) = match kind {
                SweepArg::Lollipop => (SweepKind::Lollipop, 3),
                SweepArg::StretchedExpander => (SweepKind::StretchedExpander, 8),
            };
            let report = sharpness_sweep(kind, fixed.unwrap_or(default_fixed), &sizes, seed)?;
            match output_dir {
                Some(dir) => {
                    fs::create_dir_all(&dir)?;
                    write_sweep_csv(&dir.join("sweep.csv"), std::slice::from_ref(&report))?;
                    write_json(&dir.join("sweep.json"), &report)?;
                }
                None => print!("{}", to_pretty_json(&report)?),
            }
            if report.checks.iter().any(|c| c.is_failure()) {
                return Ok(Outcome::ChecksFailed);
            }
        }
    }
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => ExitCode::from(CHECK_FAILED),
        Err(CliError::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(RUNTIME)
        }
    }
}
