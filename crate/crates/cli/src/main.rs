mod bench;
mod commands;
mod exit;
mod load;
mod report;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nfplace::Metric;

#[derive(Parser, Debug)]
#[command(
    name = "nfplace",
    version,
    about = "Capacitated middlebox placement under a stretch constraint"
)]
struct Cli {
    /// Worker threads for the solver and batch runs (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Greedy placement for an unweighted instance.
    Solve(SolveArgs),
    /// LP-guided greedy plus rounding for a weighted instance.
    SolveWeighted(SolveArgs),
    /// Pairs served after each greedy step, optionally against the optimum.
    Incremental(IncrementalArgs),
    /// Generate an instance file from a topology.
    Gen(GenArgs),
    /// Run a batch described by a TOML file and write one CSV row per run.
    Bench(BenchArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricArg {
    Geo,
    Hops,
    EdgeWeight,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Geo => Metric::Geo,
            MetricArg::Hops => Metric::HopCount,
            MetricArg::EdgeWeight => Metric::EdgeWeight,
        }
    }
}

/// Instance source plus the overrides shared by every solving command.
#[derive(Args, Debug, Clone)]
pub struct InstanceArgs {
    /// Instance JSON, GraphML topology or SNDlib native file.
    pub instance: PathBuf,
    #[arg(long, conflicts_with = "max_length")]
    pub stretch: Option<f64>,
    /// Absolute route length bound instead of a stretch factor.
    #[arg(long)]
    pub max_length: Option<f64>,
    #[arg(long)]
    pub capacity: Option<f64>,
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// Pair probability when generating from a GraphML topology.
    #[arg(long)]
    pub p: Option<f64>,
    /// Demand keep probability when generating from an SNDlib file.
    #[arg(long)]
    pub keep: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub replication: u64,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InstanceArgs,
    /// Also run the exact oracle and report the approximation ratio.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value_t = nfplace::oracle::DEFAULT_LIMIT)]
    pub oracle_limit: usize,
    /// Report path (default: stdout).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// CSV file for the per-step trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct IncrementalArgs {
    #[command(flatten)]
    pub input: InstanceArgs,
    /// Greedy steps to record (default: until every pair is served).
    #[arg(long)]
    pub budget_steps: Option<usize>,
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value_t = nfplace::oracle::DEFAULT_LIMIT)]
    pub oracle_limit: usize,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// GraphML topology (unweighted) or SNDlib file (weighted).
    #[arg(long)]
    pub topology: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    pub p: f64,
    #[arg(long, default_value_t = 0.5)]
    pub keep: f64,
    #[arg(long, default_value_t = 1.0)]
    pub stretch: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub replication: u64,
    #[arg(long, value_enum, default_value = "geo")]
    pub metric: MetricArg,
    #[arg(long)]
    pub capacity: Option<u32>,
    /// Instance name (default: file stem of the topology).
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    pub config: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::SolveWeighted(a) => commands::solve_weighted(&a),
        Command::Incremental(a) => commands::incremental(&a),
        Command::Gen(a) => commands::gen(&a),
        Command::Bench(a) => bench::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => exit::report_failure(&e),
    }
}
