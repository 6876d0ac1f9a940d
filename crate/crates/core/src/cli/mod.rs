//! Command-line front end.
//!
//! Exit codes: 0 success, 1 property failure, 2 usage or configuration
//! error, 3 numerical breakdown.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::checks::Suite;
use crate::solvers::Algorithm;

pub use commands::{check, compare, describe, solve};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BREAKDOWN: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sapg", version, about = "Smoothing accelerated projected gradient experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one algorithm and write its trace.
    Solve(SolveArgs),
    /// Run all three algorithms from the same start and compare gaps.
    Compare(CompareArgs),
    /// Run oracle and invariant suites.
    Check(CheckArgs),
    /// Print the size of the configured instance.
    Describe(ConfigArg),
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArg {
    /// TOML configuration; the built-in experiment defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunOverrides {
    /// Output directory (overrides `run.out_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Iteration budget (overrides `run.iters`).
    #[arg(long)]
    pub iters: Option<usize>,
    /// Record every N-th iterate (overrides `run.stride`).
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long, value_enum, default_value = "sapg")]
    pub algo: AlgoArg,
    #[command(flatten)]
    pub run: RunOverrides,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub run: RunOverrides,
    /// Also write `gaps.svg`.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long, value_enum, default_value = "all")]
    pub suite: SuiteArg,
    /// Seed for randomized checks (overrides `run.seed`).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Sapg,
    Spg,
    Subgrad,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Sapg => Algorithm::Sapg,
            AlgoArg::Spg => Algorithm::Spg,
            AlgoArg::Subgrad => Algorithm::Subgrad,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Grad,
    Project,
    Smoothing,
    Lyapunov,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Grad => Suite::Grad,
            SuiteArg::Project => Suite::Project,
            SuiteArg::Smoothing => Suite::Smoothing,
            SuiteArg::Lyapunov => Suite::Lyapunov,
            SuiteArg::All => Suite::All,
        }
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Solve(a) => solve(&a),
        Command::Compare(a) => compare(&a),
        Command::Check(a) => check(&a),
        Command::Describe(a) => describe(&a),
    }
}
