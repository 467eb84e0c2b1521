//! `mpclear`: clear, verify and benchmark day-ahead auctions with
//! minimum-profit bids.

mod commands;
mod methods;
mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use methods::{Method, Policy};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "mpclear", version, about = "Day-ahead auction clearing with minimum-profit conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clear one instance and write the solution report.
    Clear {
        instance: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// JSON report path (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// One-row CSV summary path.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Check a solution (a `clear` report or a bare solution) against the instance.
    Verify {
        instance: PathBuf,
        solution: PathBuf,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-check CSV path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Enumerate every commitment vector (at most 20 MP bids).
    Oracle {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = OracleMode::Mpc)]
        mode: OracleMode,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run several methods on one instance and require equal welfare.
    Compare {
        instance: PathBuf,
        #[arg(long = "method", value_enum, num_args = 1.., default_values = ["mpc", "benders-iterative", "benders-callback"])]
        methods: Vec<Method>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run methods over instance files or generated seeds; one CSV row each.
    Bench {
        /// Instance files; when empty, synthetic instances are generated.
        instances: Vec<PathBuf>,
        #[arg(long = "method", value_enum, num_args = 1.., default_values = ["mpc", "benders-iterative", "benders-callback"])]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed_start: u64,
        #[command(flatten)]
        params: GenParams,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Generate a synthetic instance.
    Gen {
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        params: GenParams,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OracleMode {
    Mpc,
    Mic,
}

#[derive(Debug, Clone, Args)]
struct SolverArgs {
    /// Verification tolerance.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Wall-clock limit per solver call, seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Relative MIP gap at which a solve stops.
    #[arg(long, default_value_t = 0.0)]
    mip_gap: f64,
    /// Benders cut policy.
    #[arg(long, value_enum, default_value_t = Policy::StrengthenedPlusNogood)]
    cuts: Policy,
}

/// Generator parameters; a `--params` JSON file sets the base, flags override it.
#[derive(Debug, Clone, Args)]
struct GenParams {
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    n_mp: Option<usize>,
    #[arg(long)]
    steps_per_curve: Option<usize>,
    #[arg(long)]
    n_periods: Option<usize>,
    #[arg(long)]
    n_locations: Option<usize>,
    #[arg(long)]
    atc_capacity: Option<f64>,
    #[arg(long)]
    cost_scale: Option<f64>,
    #[arg(long)]
    demand_steps: Option<usize>,
    #[arg(long)]
    supply_steps: Option<usize>,
    #[arg(long)]
    buy_mp_share: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::Outcome::Error as u8)
        }
    }
}
