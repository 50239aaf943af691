use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rogozin_core::ball_fourier::DEFAULT_NODES;
use rogozin_core::finite_groups::DEFAULT_BUDGET;
use rogozin_core::rearrangement::MAX_QUAD_CELLS;

#[derive(Debug, Parser)]
#[command(name = "rogozin", version, about = "Numerical checks of Rogozin-type inequalities for the maximum of densities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format of the report stream.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Debug only: multiplies every right-hand side before comparison. Exists
    /// to exercise the failure path; it has no mathematical meaning.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub rhs_scale: f64,
    /// Record wall-clock time in reports. Off by default so output is
    /// byte-identical across runs.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form constants c1, c2, c and the entropy-power cross-check.
    Constants(ConstantsArgs),
    /// M(P X) against c(d,k)·∏ M(Xᵢ)^γᵢ for an orthogonal projection P.
    VerifyEpi(VerifyEpiArgs),
    /// Sampled M of group convolutions against the extreme-point supremum.
    GroupSup(GroupSupArgs),
    /// Sums of discrete uniforms on ℤ against the Mattner–Roos bound.
    IntEpi(IntEpiArgs),
    /// Rearrangement bounds for sums on ℤ or on the line.
    RearrangeCheck(RearrangeArgs),
    /// Brascamp–Lieb–Luttinger rearrangement inequality on the line.
    BllCheck(BllArgs),
    /// M(Σ θᵢZᵢ) for uniform balls against the slicing constant.
    BallSlice(BallSliceArgs),
    /// L^p integral of a ball characteristic function against its bound.
    CharfunBound(CharfunArgs),
    /// Runs a parameter grid from a JSON config file.
    Sweep(SweepArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Constants(_) => "constants",
            Command::VerifyEpi(_) => "verify-epi",
            Command::GroupSup(_) => "group-sup",
            Command::IntEpi(_) => "int-epi",
            Command::RearrangeCheck(_) => "rearrange-check",
            Command::BllCheck(_) => "bll-check",
            Command::BallSlice(_) => "ball-slice",
            Command::CharfunBound(_) => "charfun-bound",
            Command::Sweep(_) => "sweep",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ConstantsArgs {
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Auto,
    Grid,
    MonteCarlo,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyEpiArgs {
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Number of summands when no --input or --m is given.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Rank of the random projection when no --projection is given.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// M-values of ball summands (comma list).
    #[arg(long, value_delimiter = ',', conflicts_with = "input")]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub m: Vec<f64>,
    /// JSON array of grid densities (d = 1).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// JSON projection: {"matrix": [[...]]} or {"span": [[...]]}.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 8)]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
}

#[derive(Debug, Args, Serialize)]
pub struct GroupSupArgs {
    /// trivial, cyclic:N, product:A,B or a JSON Cayley-table file.
    #[arg(long, default_value = "cyclic:5")]
    pub group: String,
    /// Levels m₁,…,mₙ (comma list).
    #[arg(long, value_delimiter = ',', required = true)]
    pub m: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    /// Use randomized steepest ascent with this many restarts.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    /// Sampled density tuples compared against the supremum.
    #[arg(long, default_value_t = 1000)]
    pub samples: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct IntEpiArgs {
    /// Block size of the uniform summands.
    #[arg(long, requires = "n", conflicts_with = "input")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<u64>,
    #[arg(long, requires = "l")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    /// JSON array of integer densities {"offset", "masses"}.
    #[arg(long, required_unless_present = "l")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RearrangeArgs {
    /// Subset sizes for the exhaustive check on ℤ (comma list).
    #[arg(long, value_delimiter = ',', conflicts_with = "input")]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sizes: Vec<usize>,
    /// Subsets are drawn from {0, …, range}; defaults to 2·max(sizes).
    #[arg(long, requires = "sizes")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<usize>,
    #[arg(long, requires = "sizes")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    /// JSON array of grid densities on a common cell width.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Number of random grid densities when neither --sizes nor --input is given.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct BllArgs {
    /// JSON {"functions": [grid densities], "matrix": [[...]]}.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Rows of the random matrix.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Columns of the random matrix.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Midpoint cells per axis (capped at 512).
    #[arg(long, default_value_t = MAX_QUAD_CELLS)]
    pub quad_nodes: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct BallSliceArgs {
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Weights θ (comma list); normalized to a unit vector.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub theta: Vec<f64>,
    /// M-values of the balls (comma list); unit-volume balls by default.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub m: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_NODES)]
    pub quad_nodes: usize,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_truncation: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct CharfunArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Exponents (comma list); one report each.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub p: Vec<f64>,
    /// M-value of the ball; unit volume by default.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_NODES)]
    pub quad_nodes: usize,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_truncation: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// JSON {"command", "grid": {param: [values]}, "seed", "output_path"}.
    pub config: PathBuf,
}
