use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "malliavin",
    version,
    about = "Discrete Malliavin calculus experiments"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GlobalArgs {
    /// Seed for every random stream; required by stochastic runs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of trials, samples or trajectories.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Output file; `.csv` writes the table, anything else the JSON report.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Mc,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Residuals of the operator identities on random spaces.
    Identities(IdentitiesArgs),
    /// Decay of the Mehler semigroup and its structural checks.
    Semigroup(SemigroupArgs),
    /// Clark decompositions of a functional.
    Clark(ClarkArgs),
    /// Log-Sobolev and concentration bounds against exact tails.
    Inequalities(InequalitiesArgs),
    /// Hoeffding layers of a U-statistic.
    Hoeffding(HoeffdingArgs),
    /// Fixed points of Ewens permutations.
    Ewens(EwensArgs),
    /// Gaussian Stein bound for standardized sums.
    SteinGaussian(SteinGaussianArgs),
    /// Gamma Stein bound for the degenerate quadratic U-statistic.
    SteinGamma(SteinGammaArgs),
    /// Homogeneous quadratic sum bound from a kernel matrix.
    SteinHomog(SteinHomogArgs),
    /// Approximating Poisson forms against their limit.
    LimitsPoisson(LimitsPoissonArgs),
    /// Approximating random-walk forms against the Brownian limit.
    LimitsWalk(LimitsWalkArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionalKind {
    /// Sum of the coordinate values.
    Sum,
    /// Product of the coordinate values.
    Product,
    /// Largest coordinate value.
    Max,
    /// Sign of the sum.
    Majority,
    /// Random table drawn from the seed.
    Random,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SpaceArgs {
    /// TOML space file; defaults to `n` fair signs.
    #[arg(long)]
    pub space: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = FunctionalKind::Product)]
    pub functional: FunctionalKind,
}

#[derive(Args, Debug, Serialize)]
pub struct IdentitiesArgs {
    #[arg(long, default_value_t = 4)]
    pub max_dim: usize,
    #[arg(long, default_value_t = 4)]
    pub max_outcomes: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct SemigroupArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0])]
    pub times: Vec<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClarkForm {
    Forward,
    Reverse,
    Symmetric,
    All,
}

#[derive(Args, Debug, Serialize)]
pub struct ClarkArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    /// Coordinate order, comma separated; defaults to the natural order.
    #[arg(long, value_delimiter = ',')]
    pub order: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = ClarkForm::All)]
    pub form: ClarkForm,
}

#[derive(Args, Debug, Serialize)]
pub struct InequalitiesArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long, value_delimiter = ',', default_values_t = (0..=10).map(|i| i as f64 * 0.2))]
    pub grid: Vec<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseLaw {
    /// Fair signs.
    Fair,
    /// Values (-1, 0.5, 2) with probabilities (0.3, 0.5, 0.2).
    Skewed,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// Product of the arguments.
    Product,
    /// Sum of the arguments.
    Sum,
    /// Product plus sum plus sum of squares.
    Mixed,
    /// Product of centered arguments; degenerate of full order.
    Centered,
}

#[derive(Args, Debug, Serialize)]
pub struct HoeffdingArgs {
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = BaseLaw::Fair)]
    pub coordinate: BaseLaw,
    #[arg(long, value_enum, default_value_t = KernelKind::Mixed)]
    pub kernel: KernelKind,
}

#[derive(Args, Debug, Serialize)]
pub struct EwensArgs {
    #[arg(long = "N", default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Add the enumeration oracles over all permutations.
    #[arg(long = "enum")]
    pub enumerate: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct SteinGaussianArgs {
    #[arg(long, default_value_t = 25)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = BaseLaw::Fair)]
    pub coordinate: BaseLaw,
}

#[derive(Args, Debug, Serialize)]
pub struct SteinGammaArgs {
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct SteinHomogArgs {
    /// CSV kernel matrix (symmetric, zero diagonal).
    #[arg(long)]
    pub kernel: Option<PathBuf>,
    /// Size of the constant kernel `2/(n-1)` used without `--kernel`.
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub fourth_moment: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    /// Total mass.
    Total,
    /// Total mass capped at one.
    Capped,
    /// Count in `[0, 1/2)`.
    Count,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityKind {
    Uniform,
    Linear,
}

#[derive(Args, Debug, Serialize)]
pub struct LimitsPoissonArgs {
    /// Partition sizes, comma separated.
    #[arg(long = "N", value_delimiter = ',', default_values_t = [16usize])]
    pub sizes: Vec<usize>,
    /// Sweep the standard grid 4, 16, 64, 256 instead of `--N`.
    #[arg(long)]
    pub grid: bool,
    #[arg(long, value_enum, default_value_t = PointKind::Total)]
    pub functional: PointKind,
    #[arg(long, value_enum, default_value_t = DensityKind::Uniform)]
    pub density: DensityKind,
    #[arg(long, default_value_t = 1e-9)]
    pub tail_eps: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Endpoint,
    Integral,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Gaussian,
    Rademacher,
    Uniform,
}

#[derive(Args, Debug, Serialize)]
pub struct LimitsWalkArgs {
    #[arg(long = "N", value_delimiter = ',', default_values_t = [16usize])]
    pub sizes: Vec<usize>,
    /// Sweep the standard grid 8, 16, ..., 256 instead of `--N`.
    #[arg(long)]
    pub grid: bool,
    #[arg(long, value_enum, default_value_t = PathKind::Integral)]
    pub functional: PathKind,
    #[arg(long, value_enum, default_value_t = StepKind::Gaussian)]
    pub steps: StepKind,
}
