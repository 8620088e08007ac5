//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "amcd", version, about = "Marton's error exponent and its inverse for finite sources")]
pub struct Cli {
    /// Worker threads for the slope grid [default: all cores]
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Error exponent E_M(R, Δ, q) at one rate threshold
    Exponent(ExponentArgs),
    /// Inverse function R_M(E, Δ, q) at one divergence radius
    Inverse(InverseArgs),
    /// Either function over an evenly spaced range, as CSV
    Sweep(SweepArgs),
    /// Exponent of the partitioned-alphabet source next to its mixture-restricted curve
    Ahlswede(AhlswedeArgs),
    /// Timing of the alternating solver against the two-dimensional grid search
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceKind {
    /// Discretized normal density with squared-error distortion
    Gaussian,
    /// Discretized Laplacian density with absolute-error distortion
    Laplacian,
    /// Distribution and distortion matrix read from CSV files
    Custom,
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    #[arg(long, value_enum, default_value_t = SourceKind::Gaussian)]
    pub source: SourceKind,
    /// Gaussian mean
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mean: f64,
    /// Gaussian standard deviation
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Laplacian scale
    #[arg(long = "b", default_value_t = 1.0)]
    pub b: f64,
    /// Truncation half-width: the density is sampled on [-L, L]
    #[arg(long = "L", default_value_t = 5.0)]
    pub half_width: f64,
    /// Number of grid cells (alphabet size)
    #[arg(long = "M", default_value_t = 100)]
    pub alphabet: usize,
    /// Distortion matrix CSV for --source custom
    #[arg(long)]
    pub dist_matrix: Option<PathBuf>,
    /// Source distribution CSV for --source custom
    #[arg(long)]
    pub q: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InnerKind {
    /// Interior-point Newton steps
    InteriorPoint,
    /// Plain Blahut-Arimoto alternations
    BlahutArimoto,
}

/// Solver settings. Flags override the config file, which overrides the defaults.
#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// TOML file with solver settings (keys as in the library's SolverConfig)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of slopes on the uniform grid [default: 100]
    #[arg(long)]
    pub zeta_points: Option<usize>,
    /// Largest slope of the uniform grid [default: 5]
    #[arg(long)]
    pub zeta_max: Option<f64>,
    /// Polish the best slope by golden-section search
    #[arg(long)]
    pub refine: bool,
    /// Outer iterations per slope [default: 200]
    #[arg(long)]
    pub max_outer_iter: Option<usize>,
    /// Iteration cap of the fixed-slope subproblem
    #[arg(long)]
    pub max_inner_iter: Option<usize>,
    /// Stop when the objective changes by less than this [default: 1e-5]
    #[arg(long)]
    pub stop_tol: Option<f64>,
    /// Method for the fixed-slope subproblem [default: interior-point]
    #[arg(long, value_enum)]
    pub inner_solver: Option<InnerKind>,
}

#[derive(Debug, Args)]
pub struct ExponentArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Distortion threshold Δ
    #[arg(long)]
    pub delta: f64,
    /// Rate threshold R in nats
    #[arg(long)]
    pub rate: f64,
    /// Write the JSON report here
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include per-iteration records in the report
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct InverseArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Distortion threshold Δ
    #[arg(long)]
    pub delta: f64,
    /// Divergence radius E in nats
    #[arg(long = "E")]
    pub exponent: f64,
    /// Write the JSON report here
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include per-iteration records in the report
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    /// Sweep the rate threshold and report E_M
    #[value(name = "R")]
    Rate,
    /// Sweep the divergence radius and report R_M
    #[value(name = "E")]
    Radius,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Distortion threshold Δ
    #[arg(long)]
    pub delta: f64,
    /// Swept parameter
    #[arg(long, value_enum)]
    pub over: SweepParam,
    /// First value of the range
    #[arg(long)]
    pub from: f64,
    /// Last value of the range
    #[arg(long)]
    pub to: f64,
    /// Number of evenly spaced points, ends included
    #[arg(long, default_value_t = 41)]
    pub points: usize,
    /// Write the CSV here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AhlswedeArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Size of the first part of the alphabet
    #[arg(long, default_value_t = 8)]
    pub size_a: usize,
    /// Size of the second part of the alphabet
    #[arg(long, default_value_t = 512)]
    pub size_b: usize,
    /// Substitution cost inside the second part (built-in matrix)
    #[arg(long = "a", default_value_t = 0.34)]
    pub a_param: f64,
    /// Mixture weight on the first part
    #[arg(long, default_value_t = 0.01)]
    pub xi: f64,
    /// Distortion threshold Δ
    #[arg(long, default_value_t = 0.254)]
    pub delta: f64,
    /// Number of rate thresholds, spread over (0, largest reachable rate)
    #[arg(long, default_value_t = 60)]
    pub points: usize,
    /// Square distortion matrix CSV on the joint alphabet
    #[arg(long)]
    pub dist_matrix: Option<PathBuf>,
    /// Refuse the built-in matrix when no file is given
    #[arg(long)]
    pub no_default: bool,
    /// Smallest single-step rise reported as a jump
    #[arg(long, default_value_t = 0.1)]
    pub jump_threshold: f64,
    /// Mixture weights tabulated for the theoretical curve
    #[arg(long, default_value_t = 2001)]
    pub lambda_grid: usize,
    /// Write the CSV here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Distortion threshold Δ
    #[arg(long, default_value_t = 0.4)]
    pub delta: f64,
    /// Divergence radius E
    #[arg(long = "E", default_value_t = 0.1)]
    pub exponent: f64,
    /// Slopes of the grid search, evenly spaced on (0, --grid-max]
    #[arg(long, default_value_t = 100)]
    pub grid_zeta: usize,
    /// Multipliers of the grid search, evenly spaced on (0, --grid-max]
    #[arg(long, default_value_t = 100)]
    pub grid_xi: usize,
    /// Upper end of both grid-search axes
    #[arg(long, default_value_t = 5.0)]
    pub grid_max: f64,
    /// Timed runs per method; medians are reported
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Write the JSON report here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}
