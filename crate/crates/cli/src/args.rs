//! Command-line surface. Every experiment flag is optional so that unset
//! flags fall through to the config file and then to the defaults.

use crate::params::Real;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "roughlab", version, about = "Desk-scale experiments on rough singular integrals and Lorentz norms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Littlewood-Paley families.
    #[command(subcommand)]
    Lp(LpCommand),
    /// Lorentz quasi-norms of a stored grid.
    #[command(subcommand)]
    Norms(NormsCommand),
    /// Calderon-Zygmund decompositions.
    #[command(subcommand)]
    Cz(CzCommand),
    /// Stopping-time construction on ordered sets.
    #[command(subcommand)]
    Stoptime(StoptimeCommand),
    /// Rough homogeneous singular integrals.
    #[command(subcommand)]
    Rough(RoughCommand),
    /// Operators along the curve (t, |t|^m).
    #[command(subcommand)]
    Curve(CurveCommand),
    /// Square function of a family of curve averages.
    #[command(subcommand)]
    Prop41(Prop41Command),
    /// Regression against stored reports.
    #[command(subcommand)]
    Golden(GoldenCommand),
}

#[derive(Debug, Subcommand)]
pub enum LpCommand {
    /// Build a family and measure moments, reproducing and telescoping residuals.
    Verify(LpVerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum NormsCommand {
    /// L^{p,q} norms of a grid read from its JSON header.
    Compute(NormsArgs),
}

#[derive(Debug, Subcommand)]
pub enum CzCommand {
    /// Decompose a stored grid, or check invariants on random inputs.
    Run(CzArgs),
}

#[derive(Debug, Subcommand)]
pub enum StoptimeCommand {
    /// Randomized instances with property and exhaustive cross-checks.
    Fuzz(FuzzArgs),
}

#[derive(Debug, Subcommand)]
pub enum RoughCommand {
    /// Growth of ||T a||_{L^{1,q}} for lacunary angular parts.
    Sharpness(SharpnessArgs),
}

#[derive(Debug, Subcommand)]
pub enum CurveCommand {
    /// Normalized Fourier decay of the unit-scale curve measure.
    Decay(DecayArgs),
    /// Sobolev gain of the local average along the curve.
    Sobolev(SobolevArgs),
}

#[derive(Debug, Subcommand)]
pub enum Prop41Command {
    /// Square function of curve averages against a parabolic square-function proxy.
    Ratio(Prop41Args),
}

#[derive(Debug, Subcommand)]
pub enum GoldenCommand {
    /// Rerun a suite of fixtures and diff against the stored reports.
    Check(GoldenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Output and configuration options shared by every experiment.
#[derive(Debug, Clone, Default, Args)]
pub struct IoArgs {
    /// TOML file with experiment parameters; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report path; a `.manifest.json` sibling is written next to it.
    /// Without it the report goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct LpVerifyArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Recursion depth of the family.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    /// Number of vanishing moments.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n0: Option<usize>,
    /// Support radius of the top kernel.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Torus side; defaults to the tightest admissible one.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inputs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct NormsArgs {
    /// Grid header (JSON) of the input function.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Real>,
    /// Comma-separated second exponents; `inf` selects weak L^p.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Real>>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct CzArgs {
    /// Grid header of the input; without it random inputs are checked.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct FuzzArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_size: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct SharpnessArgs {
    /// Lacunarity ratio.
    #[arg(long = "C")]
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<u64>,
    /// Comma-separated numbers of lacunary terms.
    #[arg(long = "N", value_delimiter = ',')]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n_terms: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Real>>,
    /// `polar` or `grid`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine: Option<String>,
    /// Grid engine only.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
    /// Angular samples of the grid engine.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Excise the set where the lacunary sum exceeds this threshold (grid engine).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps0: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct DecayArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    /// Real parts `g1,g2` of the weight exponent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    /// Comma-separated radii.
    #[arg(long = "R", value_delimiter = ',')]
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct SobolevArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
    /// Physical band limit of the random inputs.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_freq: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct Prop41Args {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    /// Comma-separated atom scales (radius 2^scale).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<i32>>,
    /// `lo,hi` angular scale range; defaults to the scales the grid admits.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_range: Option<Vec<i32>>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GoldenArgs {
    #[arg(long, default_value = "default")]
    pub suite: String,
    /// Directory holding `<suite>.toml` and `<suite>/<fixture>.csv`.
    #[arg(long)]
    pub dir: Option<PathBuf>,
    /// Rewrite the stored reports from fresh runs, then check.
    #[arg(long)]
    pub regenerate: bool,
    /// Per-column tolerance override, `column=value`; repeatable.
    #[arg(long = "tol")]
    pub tol: Vec<String>,
}
