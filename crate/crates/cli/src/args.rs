use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "rkhs",
    version,
    about = "Reproducing kernel solver for Lane-Emden type singular IVPs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and tabulate the result on a grid.
    Solve(SolveArgs),
    /// Error and residual over a sequence of basis sizes.
    Converge(ConvergeArgs),
    /// Sample a kernel section R_x(y) and its first two y-derivatives.
    KernelDump(KernelDumpArgs),
    /// Gram matrix and orthonormalization coefficients for a point set.
    GramDump(GramDumpArgs),
}

/// Where the problem comes from: a builtin, a TOML file, or inline flags.
#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Builtin example: ex1, ex2 or ex3.
    #[arg(long, conflicts_with_all = ["config", "rhs"])]
    pub problem: Option<String>,
    /// TOML problem file (keys name, k, a, T, alpha, beta, rhs, exact, linear).
    #[arg(long, conflicts_with = "rhs")]
    pub config: Option<PathBuf>,
    /// Right-hand side F(x, u) as an expression.
    #[arg(long, allow_hyphen_values = true)]
    pub rhs: Option<String>,
    /// Exact solution u(x), inline problems only.
    #[arg(long, requires = "rhs", allow_hyphen_values = true)]
    pub exact: Option<String>,
    #[arg(long, requires = "rhs", default_value = "custom")]
    pub name: String,
    #[arg(long, requires = "rhs", allow_negative_numbers = true)]
    pub k: Option<f64>,
    #[arg(long, requires = "rhs", allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Right end of the interval.
    #[arg(long = "t", requires = "rhs", allow_negative_numbers = true)]
    pub t: Option<f64>,
    #[arg(long, requires = "rhs", allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, requires = "rhs", allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Override linearity detection for inline problems.
    #[arg(long, requires = "rhs")]
    pub linear: Option<bool>,
    /// Treat a failed exact-solution check as an error.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodChoice {
    Auto,
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Settings shared by `solve` and `converge`.
#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = MethodChoice::Auto)]
    pub method: MethodChoice,
    /// Sweep budget of the nonlinear recursion.
    #[arg(long, default_value_t = 1)]
    pub sweeps: usize,
    /// Stop sweeping once nodal values change by at most this.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// `paper` (0.16, 0.32, ..., 0.96 scaled onto [a, T]) or a comma list.
    #[arg(long, default_value = "paper")]
    pub grid: String,
    /// Tolerance of the Runge-Kutta reference when no exact solution exists.
    #[arg(long, default_value_t = 1e-10)]
    pub oracle_tol: f64,
    /// Run assembly and grid evaluation on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Number of collocation points.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Comma-separated basis sizes, e.g. 25,50,100.
    #[arg(long)]
    pub n_list: String,
    /// Midpoints used for the residual sup-norm.
    #[arg(long, default_value_t = 200)]
    pub residual_points: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct KernelDumpArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long = "t", default_value_t = 1.0, allow_negative_numbers = true)]
    pub t: f64,
    /// Section point.
    #[arg(long, allow_negative_numbers = true)]
    pub x: f64,
    /// Number of y intervals.
    #[arg(long, default_value_t = 100)]
    pub resolution: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GramDumpArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long)]
    pub sequential: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}
