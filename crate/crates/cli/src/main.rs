//! `glap`: condition checks, solves, fixed-point runs and blow-up probes for
//! g-Laplacian problems.
//!
//! Exit codes: 0 success, 1 internal error, 2 invalid input, 3 solver did not
//! converge. Probes report failures as data and exit 0.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

mod commands;
mod output;
mod problem;
mod svg;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("{0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Internal(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "glap",
    version,
    about = "Solvers and diagnostics for g-Laplacian Dirichlet problems"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exponent, doubling and Young-inequality report for a Young function.
    Young {
        #[command(subcommand)]
        action: CheckAction,
    },
    /// Structural condition reports for a source term.
    Source {
        #[command(subcommand)]
        action: CheckAction,
    },
    /// Direct Newton solve of the full problem.
    Solve(SolveArgs),
    /// Solve `-Delta_g u + L g(u) = psi` with `psi(x) = B(x, 0, 0) + lambda`.
    InnerSolve(Common),
    /// Damped fixed-point iteration with multiple starts.
    FixedPoint(Common),
    /// Blow-up rescaling of a solution or of a synthetic bump.
    Rescale(RescaleArgs),
    /// Continuation in lambda; locates the first failure.
    ProbeLambda(ProbeLambdaArgs),
    /// Expanding-ball scaling probe for `Delta_p u + u^(q-1) = 0`.
    ProbeLiouville(LiouvilleArgs),
    /// Convergence tables of the rescaled nonlinearities `g_k` and `B_k`.
    GkLimit(GkArgs),
}

#[derive(Debug, Subcommand)]
enum CheckAction {
    Check(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Problem bundle (or bare Young function for `young check`).
    #[arg(long, alias = "spec", value_name = "FILE")]
    pub problem: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Dotted-path override into the bundle, e.g. `solver.epsilon=1e-7`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Mesh size; fractions like `1/512` are accepted.
    #[arg(long, value_parser = problem::parse_h)]
    pub h: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Start from a positive bump of this height instead of zero.
    #[arg(long, default_value_t = 0.0)]
    pub start_height: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FieldSource {
    /// Solve with the fixed-point driver first.
    Solve,
    /// Use a bump of height `--height`.
    Bump,
}

#[derive(Debug, Args)]
pub struct RescaleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "solve")]
    pub field: FieldSource,
    #[arg(long, default_value_t = 10.0)]
    pub height: f64,
    /// `case1` (centered at the maximum) or `case2` (scale from lambda).
    #[arg(long, default_value = "case1")]
    pub case: String,
    #[arg(long, default_value_t = glap::blowup::DEFAULT_HALF_WIDTH)]
    pub half_width: f64,
}

#[derive(Debug, Args)]
pub struct ProbeLambdaArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 50.0)]
    pub lmax: f64,
    #[arg(long, default_value_t = 25)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct LiouvilleArgs {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 4.0)]
    pub q: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    pub radii: Vec<f64>,
    #[arg(long, value_parser = problem::parse_h, default_value = "0.125")]
    pub h: f64,
}

#[derive(Debug, Args)]
pub struct GkArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000,10000,100000")]
    pub n: Vec<f64>,
    /// Compare against `t^(p-1)` with this `p` instead of the estimated one.
    #[arg(long)]
    pub exponent: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Young {
            action: CheckAction::Check(c),
        } => commands::young_check(&c),
        Command::Source {
            action: CheckAction::Check(c),
        } => commands::source_check(&c),
        Command::Solve(a) => commands::solve(&a),
        Command::InnerSolve(c) => commands::inner_solve(&c),
        Command::FixedPoint(c) => commands::fixed_point(&c),
        Command::Rescale(a) => commands::rescale(&a),
        Command::ProbeLambda(a) => commands::probe_lambda(&a),
        Command::ProbeLiouville(a) => commands::probe_liouville(&a),
        Command::GkLimit(a) => commands::gk_limit(&a),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
