//! `fracquery`: seeded experiment runner.
//!
//! Exit codes: 0 success, 1 a checked inequality failed, 2 invalid
//! configuration, 3 any other failure.

mod commands;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Environment variable overriding the lattice memory budget (bytes, with an
/// optional K, M or G suffix).
pub const MEMORY_BUDGET_ENV: &str = "FRACQUERY_MEMORY_BUDGET";

#[derive(Parser, Debug)]
#[command(name = "fracquery", version, about = "Fractional query algorithms for Boolean functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the lattice dynamic program for the optimal cost and policy.
    SolveDp(SolveDpArgs),
    /// Monte-Carlo cost and revealment of a strategy.
    Simulate(SimulateArgs),
    /// Simulate, then check the revealment inequalities.
    BoundsCheck(SimulateArgs),
    /// Closed-form limiting cost of the 2-bit OR.
    OrAnalytic(OrAnalyticArgs),
    /// Exact expected cost of decision trees.
    TreeCost(TreeCostArgs),
    /// Reads of the iterated-majority heuristic and baseline per depth.
    ItmajScaling(ScalingArgs),
    /// Fractional random-turn games.
    RandomTurn(RandomTurnArgs),
    /// Optimal cost at the origin over a range of lattice levels.
    Convergence(ConvergenceArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args, Debug)]
pub struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug)]
pub struct Jump {
    /// Jump size, as `2^-k` or a decimal in (0, 1].
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<String>,
    /// Dyadic level: jump size `2^-k`.
    #[arg(long, conflicts_with = "epsilon")]
    pub k: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverMethod {
    /// Policy iteration with sparse LU, then Jacobi sweeps.
    Policy,
    /// Jacobi sweeps only.
    Value,
}

#[derive(Args, Debug)]
pub struct SolveDpArgs {
    #[arg(long = "fn")]
    pub function: String,
    #[command(flatten)]
    pub jump: Jump,
    #[arg(long, value_enum, default_value = "policy")]
    pub method: SolverMethod,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long = "fn")]
    pub function: String,
    #[arg(long)]
    pub strategy: String,
    #[command(flatten)]
    pub jump: Jump,
    #[arg(long, default_value_t = 10_000)]
    pub runs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Start point, comma-separated; the origin by default.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// Stop every run after this many steps.
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Dump the jumps of run 0 as CSV to this file.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct OrAnalyticArgs {
    /// Evaluate at one point `x1,x2`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "grid")]
    pub point: Option<String>,
    /// Evaluate on an m-by-m grid over the square.
    #[arg(long, conflicts_with = "residuals")]
    pub grid: Option<usize>,
    /// Check the finite-difference and ODE residuals of the closed form.
    #[arg(long, conflicts_with = "point")]
    pub residuals: bool,
    /// Seed for the residual sample points.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TreeMode {
    Optimal,
    Influence,
    Strategy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Tie {
    Lowest,
    Uniform,
    Both,
}

#[derive(Args, Debug)]
pub struct TreeCostArgs {
    #[arg(long = "fn")]
    pub function: String,
    #[arg(long, value_enum, default_value = "optimal")]
    pub mode: TreeMode,
    /// Tie rule for `--mode influence`.
    #[arg(long, value_enum, default_value = "both")]
    pub tie: Tie,
    /// Strategy for `--mode strategy`.
    #[arg(long)]
    pub strategy: Option<String>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct ScalingArgs {
    #[arg(long, default_value_t = 4)]
    pub kmax: u32,
    #[arg(long, default_value_t = 5000)]
    pub runs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Jump size of the heuristic; `2^-3` by default.
    #[command(flatten)]
    pub jump: Jump,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct RandomTurnArgs {
    #[arg(long = "fn", default_value = "maj3")]
    pub function: String,
    /// Start point on the 1/M grid, comma-separated decimals or fractions.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    #[arg(long = "M", default_value_t = 4)]
    pub m: u32,
    #[arg(long, default_value_t = 10_000)]
    pub runs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write every game as a JSON line to this file.
    #[arg(long)]
    pub games: Option<PathBuf>,
    /// Compare the middle-bit and max-derivative single-player costs on MAJ3.
    #[arg(long, conflicts_with_all = ["function", "x0", "games"])]
    pub compare_maj3: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct ConvergenceArgs {
    #[arg(long = "fn")]
    pub function: String,
    #[arg(long, default_value_t = 1)]
    pub kmin: u32,
    #[arg(long)]
    pub kmax: u32,
    #[arg(long, value_enum, default_value = "policy")]
    pub method: SolverMethod,
    #[command(flatten)]
    pub output: Output,
}

/// Result of a command that ran to completion.
#[derive(Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Violation,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let config = err.chain().any(|e| {
        e.downcast_ref::<parse::ConfigError>().is_some()
            || matches!(
                e.downcast_ref::<fracquery::Error>(),
                Some(fracquery::Error::InvalidInput(_) | fracquery::Error::Resource(_))
            )
    });
    if config {
        2
    } else {
        3
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
