//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on a usage or parameter error, 2 when a table
//! reproduction finds a mismatching cell.

mod render;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::prob_core::{RewardModel, WaitingTimeSpec};
use crate::reproduce::{reproduce_table, TableId};
use crate::rule_a::{BoundSpec, CostModel, RuleAConfig};
use crate::rule_b::RuleBConfig;
use crate::simulator::{simulate, RuleConfig, SimulationConfig};

pub use render::Format;
use render::{DistView, Render, RuleAView, RuleBView, SimulateView};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MISMATCH: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "stoprule",
    version,
    about = "Stopping rules for reward-driven learning episodes"
)]
pub struct Cli {
    /// Output encoding.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Waiting-time distribution of the negatives before the r-th positive.
    Dist(DistArgs),
    /// Rule A analysis: rewards ratio, cost bound and exceedance probabilities.
    RuleA(RuleAArgs),
    /// Rule B analysis: race of positives and negatives to 2m+1.
    RuleB(RuleBArgs),
    /// Monte Carlo simulation with analytic counterparts.
    Simulate(SimulateArgs),
    /// Recompute a reference table and compare it cell by cell.
    Reproduce(ReproduceArgs),
    /// Run one command per line from a file (blank lines and `#` comments skipped).
    Batch(BatchArgs),
}

#[derive(Debug, Args)]
pub struct DistArgs {
    /// Probability of a positive reward, in (0, 1).
    #[arg(long = "p")]
    pub p: f64,
    /// Number of positive rewards ending the episode.
    #[arg(long = "r", default_value_t = 1)]
    pub r: u64,
    /// Pr[W_r = k].
    #[arg(long)]
    pub pmf_at: Option<u64>,
    /// Pr[W_r <= b].
    #[arg(long)]
    pub cdf_at: Option<u64>,
    /// Pr[T = k] for the wait before the first positive.
    #[arg(long)]
    pub geometric_at: Option<u64>,
    /// Probability generating function at z in [0, 1].
    #[arg(long)]
    pub pgf_at: Option<f64>,
    /// E[W_r].
    #[arg(long)]
    pub mean: bool,
    /// Var[W_r].
    #[arg(long)]
    pub variance: bool,
}

#[derive(Debug, Args, Clone)]
#[group(id = "bound", multiple = false)]
pub struct BoundArgs {
    /// Tolerated number of negatives, given directly.
    #[arg(long)]
    pub bound_abs: Option<u64>,
    /// b = round(E[W_r] + d).
    #[arg(long, value_name = "D")]
    pub bound_add: Option<f64>,
    /// b = round(alpha * E[W_r]).
    #[arg(long, value_name = "ALPHA")]
    pub bound_mult: Option<f64>,
}

impl BoundArgs {
    fn spec(&self) -> Result<Option<BoundSpec>, Error> {
        Ok(match (self.bound_abs, self.bound_add, self.bound_mult) {
            (Some(b), _, _) => Some(BoundSpec::absolute(b)),
            (_, Some(d), _) => Some(BoundSpec::additive(d)?),
            (_, _, Some(a)) => Some(BoundSpec::multiplicative(a)?),
            _ => None,
        })
    }
}

#[derive(Debug, Args)]
pub struct RuleAArgs {
    #[arg(long = "p")]
    pub p: f64,
    #[arg(long = "r")]
    pub r: u64,
    /// Success iff W/r < rho*; e.g. 0.3, 0.5 or 0.7.
    #[arg(long, default_value_t = 0.5)]
    pub rho_star: f64,
    #[command(flatten)]
    pub bound: BoundArgs,
    /// Cost per observation.
    #[arg(long, default_value_t = 1.0)]
    pub cost: f64,
    /// Negatives observed in a finished episode; adds its classification and p estimate.
    #[arg(long)]
    pub observed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RuleBArgs {
    /// Threshold parameter; the winning score is 2m+1.
    #[arg(long = "m")]
    pub m: u64,
    #[arg(long = "p")]
    pub p: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(subcommand)]
    pub rule: SimulateRule,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct RunArgs {
    /// Number of episodes.
    #[arg(long = "n", default_value_t = 100_000)]
    pub n: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Cost per observation; enables the mean-cost statistic.
    #[arg(long)]
    pub cost: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum SimulateRule {
    /// Simulate Rule A episodes.
    RuleA {
        #[arg(long = "p")]
        p: f64,
        #[arg(long = "r")]
        r: u64,
        #[arg(long, default_value_t = 0.5)]
        rho_star: f64,
        #[command(flatten)]
        bound: BoundArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Simulate Rule B episodes.
    RuleB {
        #[arg(long = "m")]
        m: u64,
        #[arg(long = "p")]
        p: f64,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Table to reproduce: I or II.
    #[arg(long)]
    pub table: TableId,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    pub file: PathBuf,
}

/// Parses `args` (including the program name) and executes the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn emit(view: &dyn Render, format: Format, out: &mut dyn Write) {
    // A closed pipe is not a usage error.
    let _ = out.write_all(view.render(format).as_bytes());
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Error> {
    let format = cli.format;
    match &cli.command {
        Command::Dist(a) => {
            let model = RewardModel::new(a.p)?;
            let spec = WaitingTimeSpec::new(a.r)?;
            let view = DistView::build(&model, &spec, a)?;
            emit(&view, format, out);
        }
        Command::RuleA(a) => {
            let model = RewardModel::new(a.p)?;
            let config = RuleAConfig::new(a.r, a.rho_star)?;
            let costs = CostModel::new(a.cost)?;
            let Some(bound) = a.bound.spec()? else {
                let _ = writeln!(
                    err,
                    "error: one of --bound-abs, --bound-add or --bound-mult is required"
                );
                return Ok(EXIT_USAGE);
            };
            let view = RuleAView::build(&model, &config, &costs, &bound, a.observed)?;
            emit(&view, format, out);
        }
        Command::RuleB(a) => {
            let model = RewardModel::new(a.p)?;
            let config = RuleBConfig::new(a.m)?;
            emit(&RuleBView::build(&config, &model), format, out);
        }
        Command::Simulate(a) => {
            let (config, bound) = simulation_config(&a.rule)?;
            let summary = simulate(&config)?;
            emit(&SimulateView::build(&config, bound, summary), format, out);
        }
        Command::Reproduce(a) => {
            let report = reproduce_table(a.table)?;
            emit(&report, format, out);
            if !report.passes() {
                return Ok(EXIT_MISMATCH);
            }
        }
        Command::Batch(a) => return run_batch(&a.file, format, out, err),
    }
    Ok(EXIT_OK)
}

fn simulation_config(rule: &SimulateRule) -> Result<(SimulationConfig, Option<BoundSpec>), Error> {
    let (model, rule_config, run, bound) = match rule {
        SimulateRule::RuleA {
            p,
            r,
            rho_star,
            bound,
            run,
        } => (
            RewardModel::new(*p)?,
            RuleConfig::RuleA(RuleAConfig::new(*r, *rho_star)?),
            run,
            bound.spec()?,
        ),
        SimulateRule::RuleB { m, p, run } => (
            RewardModel::new(*p)?,
            RuleConfig::RuleB(RuleBConfig::new(*m)?),
            run,
            None,
        ),
    };
    let mut config = SimulationConfig::new(model, rule_config, run.n, run.seed)?;
    if let Some(c) = run.cost {
        config = config.with_cost(CostModel::new(c)?);
    }
    if let (Some(spec), RuleConfig::RuleA(a)) = (&bound, &rule_config) {
        let b = crate::rule_a::resolve_bound(spec, &model, a)?;
        config = config.with_bound(b)?;
    }
    Ok((config, bound))
}

fn run_batch(
    file: &std::path::Path,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Error> {
    let contents = match std::fs::read_to_string(file) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", file.display());
            return Ok(EXIT_USAGE);
        }
    };
    let mut worst = EXIT_OK;
    for line in contents.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut args = vec!["stoprule".to_string()];
        if !line.split_whitespace().any(|w| w == "--format") {
            args.push("--format".into());
            args.push(format.as_str().into());
        }
        args.extend(line.split_whitespace().map(str::to_string));
        if args.iter().any(|a| a == "batch") {
            let _ = writeln!(err, "error: nested batch files are not supported: {line}");
            worst = worst.max(EXIT_USAGE);
            continue;
        }
        worst = worst.max(run(args, out, err));
    }
    Ok(worst)
}
