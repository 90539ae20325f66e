//! `oco-lt`: runs, sweeps, offline comparators and the validation suite.
//!
//! Exit codes: 0 success, 1 run or check failure, 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod cache;
mod commands;
mod config;
mod setup;

use config::Settings;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "OCO_LT_OUT";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] oco_lt::OcoError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "oco-lt",
    version,
    about = "Online convex optimization with long-term constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One run: writes trace.csv and summary.json.
    Run(RunArgs),
    /// Grid of algorithms × horizons × seeds: writes sweep.csv and sweep_stats.csv.
    Sweep(SweepArgs),
    /// Best fixed decision in hindsight, cached on disk.
    Oracle(OracleArgs),
    /// Runs the acceptance checks and prints a pass/fail table.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// toy, doubly-stochastic (ds) or dispatch.
    #[arg(long)]
    problem: Option<String>,
    /// Matrix dimension of the doubly-stochastic problem.
    #[arg(long)]
    d: Option<usize>,
    /// Demand CSV for dispatch (`index,demand`); defaults to the synthetic series.
    #[arg(long)]
    demand: Option<PathBuf>,
    /// Multiplies every demand value.
    #[arg(long = "demand-scale")]
    demand_scale: Option<f64>,
    /// Output directory [default: $OCO_LT_OUT or ./out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Oracle cache directory [default: <out>/oracle-cache].
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AlgoArgs {
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// clipped or plain (baselines only).
    #[arg(long)]
    lagrangian: Option<String>,
    /// per-constraint, max or logsumexp.
    #[arg(long)]
    aggregation: Option<String>,
    /// Fixed step size.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Strong-convexity constant for the strong variant.
    #[arg(long)]
    h1: Option<f64>,
    /// A-OGD primal step scale.
    #[arg(long)]
    eta0: Option<f64>,
    /// A-OGD dual step scale.
    #[arg(long)]
    mu0: Option<f64>,
    /// A-OGD dual regularization scale.
    #[arg(long)]
    theta0: Option<f64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    algo_args: AlgoArgs,
    /// clipped-ogd, strong, ogd or a-ogd.
    #[arg(long)]
    algo: Option<String>,
    /// Horizon.
    #[arg(long = "T")]
    horizon: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Horizon-free run: epochs of length 1, 2, 4, ... each tuned for its own length.
    #[arg(long)]
    doubling: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    algo_args: AlgoArgs,
    /// Comma-separated algorithms.
    #[arg(long)]
    algos: Option<String>,
    /// Comma-separated horizons.
    #[arg(long = "T")]
    horizons: Option<String>,
    /// Number of seeds, 0..n.
    #[arg(long)]
    seeds: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "T")]
    horizon: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Comma-separated check ids; all by default.
    #[arg(long)]
    only: Option<String>,
}

fn show<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

impl Common {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        vec![
            ("problem", self.problem.clone()),
            ("d", show(&self.d)),
            ("demand", path(&self.demand)),
            ("demand_scale", show(&self.demand_scale)),
            ("out", path(&self.out)),
            ("cache", path(&self.cache)),
        ]
    }
}

impl AlgoArgs {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("beta", show(&self.beta)),
            ("alpha", show(&self.alpha)),
            ("lagrangian", self.lagrangian.clone()),
            ("aggregation", self.aggregation.clone()),
            ("eta", show(&self.eta)),
            ("sigma", show(&self.sigma)),
            ("h1", show(&self.h1)),
            ("eta0", show(&self.eta0)),
            ("mu0", show(&self.mu0)),
            ("theta0", show(&self.theta0)),
        ]
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(a) => {
            let mut flags = a.common.flags();
            flags.extend(a.algo_args.flags());
            flags.extend([
                ("algo", a.algo),
                ("T", show(&a.horizon)),
                ("seed", show(&a.seed)),
            ]);
            let s = Settings::load(a.common.config.as_deref(), flags)?;
            commands::run(&s, a.doubling)
        }
        Command::Sweep(a) => {
            let mut flags = a.common.flags();
            flags.extend(a.algo_args.flags());
            flags.extend([
                ("algos", a.algos),
                ("T", a.horizons),
                ("seeds", show(&a.seeds)),
                ("jobs", show(&a.jobs)),
            ]);
            let s = Settings::load(a.common.config.as_deref(), flags)?;
            commands::sweep(&s)
        }
        Command::Oracle(a) => {
            let mut flags = a.common.flags();
            flags.extend([("T", show(&a.horizon)), ("seed", show(&a.seed))]);
            let s = Settings::load(a.common.config.as_deref(), flags)?;
            commands::oracle(&s)
        }
        Command::Validate(a) => {
            let only = match a.only {
                Some(list) => Some(
                    list.split(',')
                        .map(|s| s.trim().parse::<usize>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| CliError::Usage(format!("--only: {e}")))?,
                ),
                None => None,
            };
            commands::validate(only.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
