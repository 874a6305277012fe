//! `aosi` command-line front end: single-instance solves, closed-form
//! evaluation, optimisation, simulation, λ-grid sweeps with CSV/SVG output,
//! and an oracle cross-check report.

mod commands;
mod params;
pub mod svg;
mod sweep;
mod verify;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use aosi_core::{ModelError, OptimizeError, SimError, SolveError, Threshold};
use clap::{Args, Parser, Subcommand, ValueEnum};

pub use params::ParamArgs;

/// Exit code for invalid parameters, malformed config or bad arguments.
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_NO_CONVERGENCE: u8 = 3;
pub const EXIT_NOT_THRESHOLD: u8 = 4;
/// Failed verification checks, I/O errors and anything else.
pub const EXIT_FAILURE: u8 = 1;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        CliError::new(EXIT_INVALID, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::invalid(format!("invalid parameters: {e}"))
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        let code = match e {
            SolveError::InvalidConfig(_) => EXIT_INVALID,
            SolveError::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
            SolveError::NotThreshold { .. } => EXIT_NOT_THRESHOLD,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<OptimizeError> for CliError {
    fn from(e: OptimizeError) -> Self {
        let code = match e {
            OptimizeError::InvalidGrid(_) => EXIT_INVALID,
            OptimizeError::BoundaryOptimum { .. } => EXIT_FAILURE,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let code = match e {
            SimError::InvalidConfig(_) => EXIT_INVALID,
            SimError::SingularSystem(_) => EXIT_FAILURE,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(EXIT_FAILURE, format!("i/o error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "aosi",
    version,
    about = "Optimal AoSI transmission scheduling: solve, evaluate, optimise, simulate, sweep"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Relative value iteration; prints the gain, thresholds and the monotonicity verdict.
    Solve(SolveArgs),
    /// Closed-form steady state of a threshold policy.
    Evaluate(EvaluateArgs),
    /// Minimise the closed-form objective over threshold pairs.
    Optimize(OptimizeArgs),
    /// Monte Carlo estimate under a threshold policy.
    Simulate(SimulateArgs),
    /// Optimal cost and transmit fractions over a (lambda1, lambda2) grid.
    Sweep(SweepArgs),
    /// Cross-check closed form, brute force, simulation and value iteration.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// State-space truncation.
    #[arg(long, default_value_t = 2000)]
    pub s_max: usize,
    /// Span-seminorm stopping tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 200_000)]
    pub max_iter: usize,
}

impl SolverArgs {
    pub fn config(&self) -> aosi_core::SolverConfig {
        aosi_core::SolverConfig { s_max: self.s_max, tol: self.tol, max_iter: self.max_iter }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PolicyArgs {
    /// Compressed threshold (integer or `inf`).
    #[arg(long)]
    pub n1: Option<Threshold>,
    /// Uncompressed threshold (integer or `inf`).
    #[arg(long)]
    pub n2: Option<Threshold>,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Simulated steps.
    #[arg(long, default_value_t = 10_000_000)]
    pub horizon: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write value.csv (s,V,action) and solve.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SearchMethod {
    Exhaustive,
    Descent,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Largest finite threshold searched (doubled up to 3 times if the optimum hits it).
    #[arg(long, default_value_t = aosi_core::optimizer::DEFAULT_N_MAX)]
    pub n_max: usize,
    #[arg(long, value_enum, default_value_t = SearchMethod::Exhaustive)]
    pub method: SearchMethod,
    /// Starting point for descent (default (0, 0)).
    #[command(flatten)]
    pub init: PolicyArgs,
    /// Write grid.csv (n1,n2,F) here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Write estimate.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum SweepOutput {
    CostGrid,
    FractionsVsLambda2,
    PolicyGrid,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Comma-separated lambda1 values.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7,8,9")]
    pub lambda1_grid: Vec<f64>,
    /// Comma-separated lambda2 values.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7,8,9")]
    pub lambda2_grid: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "cost-grid,fractions-vs-lambda2,policy-grid")]
    pub outputs: Vec<SweepOutput>,
    #[arg(long, default_value_t = aosi_core::optimizer::DEFAULT_N_MAX)]
    pub n_max: usize,
    /// Also run value iteration per cell and write solver_check.csv.
    #[arg(long)]
    pub check_solver: bool,
    /// Also simulate each optimum and write sim_check.csv.
    #[arg(long)]
    pub check_sim: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, default_value = "sweep")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Policy to check (default: the optimum).
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Also write report.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs the command, printing errors to stderr.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Optimize(a) => commands::optimize(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Sweep(a) => sweep::run(&a),
        Command::Verify(a) => verify::run(&a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
