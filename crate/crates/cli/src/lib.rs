//! Command-line driver: config ingestion, orchestration and file output.

pub mod commands;
pub mod config_io;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::CliError;
pub use output::{Cell, Csv, OutputDir, RunContext, RunManifest, RunStatus};

pub const VERSION: &str = env!("THZRA_VERSION");

/// Environment variable capping the worker thread count.
pub const MAX_PARALLEL_ENV: &str = "THZRA_MAX_PARALLEL";

#[derive(Debug, Parser)]
#[command(name = "thzra", version = VERSION, about = "THz random-access laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo delay and energy of the access schemes.
    Simulate(CommonArgs),
    /// Exact delay/energy series, bounds, outage closed form, diversity orders.
    Analyze(CommonArgs),
    /// Run the statistical validation suites.
    Validate(CommonArgs),
    /// Cartesian parameter sweep with resumable per-cell output.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed; defaults to `protocol.seed` from the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the configured number of Monte Carlo trials.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Worker threads (capped by THZRA_MAX_PARALLEL).
    #[arg(long)]
    pub parallel: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Stop after computing this many new cells (the run is then partial).
    #[arg(long)]
    pub max_cells: Option<usize>,
}

/// Thread count from `--parallel`, the machine, and the environment cap.
pub fn resolve_threads(requested: Option<usize>, cap: Option<&str>) -> usize {
    let base = requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let cap = cap.and_then(|c| c.trim().parse::<usize>().ok()).filter(|&c| c > 0);
    base.min(cap.unwrap_or(usize::MAX)).max(1)
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<u8, CliError> {
    let (name, common, max_cells) = match &command {
        Command::Simulate(a) => ("simulate", a, None),
        Command::Analyze(a) => ("analyze", a, None),
        Command::Validate(a) => ("validate", a, None),
        Command::Sweep(a) => ("sweep", &a.common, a.max_cells),
    };
    let threads = resolve_threads(common.parallel, std::env::var(MAX_PARALLEL_ENV).ok().as_deref());
    let raw = config_io::load_raw(&common.config)?;
    let cfg = thzra_core::config::validate_config(&raw)?;
    let ctx = RunContext {
        command: name.to_string(),
        config_path: common.config.clone(),
        seed: common.seed.unwrap_or(cfg.protocol().seed),
        threads,
        trials: common.trials,
    };
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| CliError::Runtime(e.to_string()))?;
    pool.install(|| match command {
        Command::Simulate(_) => commands::simulate::run(&ctx, &raw, &cfg, &common.out),
        Command::Analyze(_) => commands::analyze::run(&ctx, &raw, &cfg, &common.out),
        Command::Validate(_) => commands::validate::run(&ctx, &raw, &cfg, &common.out),
        Command::Sweep(_) => commands::sweep::run(&ctx, &raw, &cfg, &common.out, max_cells),
    })
}
