use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bmm",
    version,
    about = "Chernoff information and identifiability of binary-matrix Bernoulli mixtures"
)]
pub struct Cli {
    /// Worker threads for the oracle and the simulator.
    #[arg(long, global = true, env = "BMM_THREADS")]
    pub threads: Option<usize>,

    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chernoff information between the mixtures of two matrix files.
    Ci(CiArgs),
    /// Worst-case bounds for N rows and L columns.
    Bounds(BoundsArgs),
    /// Exhaustive search for the closest pair of matrices.
    ClosestPair(ClosestPairArgs),
    /// Write an extremal matrix pair to two files.
    Construct(ConstructArgs),
    /// Both regime bounds over a grid of flip rates.
    Sweep(SweepArgs),
    /// Monte Carlo estimate of the ML error exponent.
    Simulate(SimulateArgs),
    /// Compare the exhaustive minimum with the bounds.
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Clone)]
#[group(required = true, multiple = false)]
pub struct ProfileArgs {
    /// Constant flip rate for every column.
    #[arg(long)]
    pub flip: Option<f64>,
    /// Per-column flip rates, column 0 first.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub flips: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct CiArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[command(flatten)]
    pub profile: ProfileArgs,
}

#[derive(Debug, Args)]
pub struct ShapeArgs {
    /// Number of rows N.
    #[arg(long = "n")]
    pub n: usize,
    /// Number of columns L.
    #[arg(long = "l")]
    pub l: usize,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[command(flatten)]
    pub profile: ProfileArgs,
    /// Use the per-column bound even for a constant profile.
    #[arg(long)]
    pub generalized: bool,
}

#[derive(Debug, Args)]
pub struct ClosestPairArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[command(flatten)]
    pub profile: ProfileArgs,
    /// Largest number of matrices to enumerate.
    #[arg(long, default_value_t = 1_000_000)]
    pub cap: u128,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    /// Pick by flip rate and parity of N.
    Auto,
    Odd,
    Even,
    NearOptimal,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[arg(long)]
    pub flip: f64,
    #[arg(long, value_enum, default_value_t = Kind::Auto)]
    pub kind: Kind,
    #[arg(long)]
    pub out_a: PathBuf,
    #[arg(long)]
    pub out_b: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[arg(long, default_value_t = 0.0)]
    pub f_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub f_max: f64,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Matrix file of the true source.
    #[arg(long)]
    pub truth: PathBuf,
    #[command(flatten)]
    pub profile: ProfileArgs,
    /// Sample counts, strictly increasing.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub m: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, default_value_t = 1_000_000)]
    pub cap: u128,
    /// Allowed slack when comparing the minimum with the bounds.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}
