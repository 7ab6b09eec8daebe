use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use irdd_core::{Direction, IntervalKind, Multiplier, SampleSizeRule};

#[derive(Debug, Parser)]
#[command(name = "irdd", version, about = "Isotonic regression discontinuity estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Isotonic fit of a CSV sample, as plot-ready long-format rows.
    Fit(FitArgs),
    /// Point estimate of the effect at the cutoff.
    Rdd(RddArgs),
    /// Trimmed wild bootstrap confidence interval for a sharp design.
    Ci(CiArgs),
    /// Monte Carlo bias/variance/MSE or coverage tables.
    Mc(McArgs),
    /// Draws from a limiting distribution.
    Limit(LimitArgs),
    /// Simulated MSE-optimal boundary constant.
    Cstar(CstarArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// CSV file with a header row.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Running-variable column.
    #[arg(long, default_value = "x")]
    pub x_col: String,
    /// Outcome column.
    #[arg(long, default_value = "y")]
    pub y_col: String,
    /// Treatment column; `d` is used when present if this is not given.
    #[arg(long)]
    pub d_col: Option<String>,
    /// Skip rows with missing or invalid fields instead of failing.
    #[arg(long)]
    pub drop_invalid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output file; a `<file>.meta.json` sidecar is written next to it.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleSize {
    Pooled,
    PerSide,
}

impl From<SampleSize> for SampleSizeRule {
    fn from(v: SampleSize) -> Self {
        match v {
            SampleSize::Pooled => SampleSizeRule::Pooled,
            SampleSize::PerSide => SampleSizeRule::PerSide,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotone {
    Increasing,
    Decreasing,
}

impl From<Monotone> for Direction {
    fn from(v: Monotone) -> Self {
        match v {
            Monotone::Increasing => Direction::Increasing,
            Monotone::Decreasing => Direction::Decreasing,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DesignArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub cutoff: f64,
    /// Boundary correction scale.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Sample size entering the correction `c·n^{-a}`.
    #[arg(long, value_enum, default_value_t = SampleSize::Pooled)]
    pub sample_size: SampleSize,
    /// Treatment is assigned below the cutoff.
    #[arg(long)]
    pub treated_below: bool,
    #[arg(long, value_enum, default_value_t = Monotone::Increasing)]
    pub below: Monotone,
    #[arg(long, value_enum, default_value_t = Monotone::Increasing)]
    pub above: Monotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelArg {
    Outcome,
    Treatment,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Fit each side of this cutoff separately.
    #[arg(long, allow_hyphen_values = true)]
    pub cutoff: Option<f64>,
    #[arg(long, value_enum, default_value_t = ChannelArg::Outcome)]
    pub channel: ChannelArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Irdd,
    Knn,
    Ll,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RddArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub design: DesignArgs,
    /// Rate exponent of the boundary correction.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub a: f64,
    /// Estimate at each of these `c` values instead of `--c`.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub c_sweep: Option<Vec<f64>>,
    /// Fuzzy design: divide by the jump in treatment probability.
    #[arg(long)]
    pub fuzzy: bool,
    #[arg(long, value_enum, default_value_t = Method::Irdd)]
    pub method: Method,
    /// Neighbors per side for `--method knn`; defaults to the cube root of n.
    #[arg(long)]
    pub k: Option<usize>,
    /// Bandwidth for `--method ll`; defaults to a rule of thumb.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MultiplierArg {
    Rademacher,
    Gaussian,
    Mammen,
}

impl From<MultiplierArg> for Multiplier {
    fn from(v: MultiplierArg) -> Self {
        match v {
            MultiplierArg::Rademacher => Multiplier::Rademacher,
            MultiplierArg::Gaussian => Multiplier::Gaussian,
            MultiplierArg::Mammen => Multiplier::Mammen,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalArg {
    Basic,
    Percentile,
}

impl From<IntervalArg> for IntervalKind {
    fn from(v: IntervalArg) -> Self {
        match v {
            IntervalArg::Basic => IntervalKind::Basic,
            IntervalArg::Percentile => IntervalKind::Percentile,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BootArgs {
    /// Bootstrap replications.
    #[arg(long = "boot-reps", default_value_t = 999)]
    pub boot_reps: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, value_enum, default_value_t = MultiplierArg::Rademacher)]
    pub multiplier: MultiplierArg,
    #[arg(long, value_enum, default_value_t = IntervalArg::Basic)]
    pub interval: IntervalArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CiArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub design: DesignArgs,
    /// Rate exponent of the trimming and evaluation points.
    #[arg(long, default_value_t = 0.5)]
    pub a: f64,
    #[command(flatten)]
    pub boot: BootArgs,
    #[arg(long)]
    pub seed: u64,
    /// Center the pseudo-data on the untrimmed fits.
    #[arg(long)]
    pub no_trim: bool,
    /// Uncorrected estimator with the naive wild bootstrap.
    #[arg(long)]
    pub naive: bool,
    /// Rejected: no bootstrap theory is available for fuzzy designs.
    #[arg(long)]
    pub fuzzy: bool,
    /// Also write the centered replicates `θ* - θ` to this CSV file.
    #[arg(long)]
    pub replicates: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McArgs {
    /// Design ids 1 to 8.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "1")]
    pub dgp: Vec<u8>,
    /// Use `σ(x) = sqrt(x + 1)` noise.
    #[arg(long)]
    pub het: bool,
    /// Sample sizes.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "200")]
    pub n: Vec<usize>,
    /// Monte Carlo replications per cell.
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// irdd, irdd-opt, naive, knn, ll or oracle.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "irdd")]
    pub estimators: Vec<String>,
    /// Boundary scale for `irdd`, or the coverage grid with `--coverage`.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "1")]
    pub c: Vec<f64>,
    /// Bootstrap coverage and length instead of bias and MSE.
    #[arg(long)]
    pub coverage: bool,
    #[arg(long = "boot-reps", default_value_t = 499)]
    pub boot_reps: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, value_enum, default_value_t = MultiplierArg::Rademacher)]
    pub multiplier: MultiplierArg,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeArg {
    /// argmax of `W_t - t²`.
    Chernoff,
    /// Boundary law with `a < 1/3`.
    Interior,
    /// Boundary law with `a = 1/3`.
    Third,
    /// Boundary law with `a > 1/3`.
    Fast,
    /// Sharp effect at `a = 1/3` with a design's local constants.
    Sharp,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LimitArgs {
    #[arg(long, value_enum)]
    pub regime: RegimeArg,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub density: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub slope: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Design supplying the local constants for `--regime sharp`.
    #[arg(long, default_value_t = 1)]
    pub dgp: u8,
    #[arg(long)]
    pub het: bool,
    /// Grid step; defaults to 1e-3.
    #[arg(long)]
    pub step: Option<f64>,
    /// Uniform grid horizon; defaults to 3 for Chernoff draws and 5 otherwise.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CstarArgs {
    #[arg(long, default_value_t = 100_000)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[arg(long, default_value_t = 0.05)]
    pub c_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c_max: f64,
    #[arg(long, default_value_t = 0.01)]
    pub c_step: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}
