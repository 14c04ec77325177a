use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "harmonious",
    version,
    about = "Averaging operators, Dirichlet solver and regularity checks on finite metric measure spaces"
)]
pub struct Cli {
    /// Seed for every sampled scan and probe.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; never changes numeric output.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Replay a run from an emitted manifest instead of a subcommand.
    #[arg(long, global = true, conflicts_with = "seed")]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Estimate doubling, annular decay and ring continuity of a space.
    Probe(ProbeArgs),
    /// Check admissibility, radius bounds and the parameter gate.
    Validate(ValidateArgs),
    /// Solve T_α u = u with Dirichlet data.
    Solve(SolveArgs),
    /// Compare the empirical Hölder constant of a fixed point with the theoretical one.
    Certify(CertifyArgs),
    /// Small-radius expansions against the Laplacian and the ∞-Laplacian.
    Asymptotics(AsymptoticsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grid {
    #[value(name = "1d")]
    #[serde(rename = "1d")]
    Interval,
    #[value(name = "2d")]
    #[serde(rename = "2d")]
    Square,
    Disk,
    Path,
    Lattice,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SpaceArgs {
    /// Space JSON file.
    #[arg(long, conflicts_with = "grid")]
    pub space: Option<PathBuf>,
    /// Built-in space.
    #[arg(long, required_unless_present = "space")]
    pub grid: Option<Grid>,
    /// Points per side of the built-in space.
    #[arg(long = "n", default_value_t = 65)]
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RadiusArgs {
    /// Radius CSV (`id,rho`).
    #[arg(long, conflicts_with = "rho_factor")]
    pub rho: Option<PathBuf>,
    /// ρ = factor · dist(x, ∂Ω) when no file is given.
    #[arg(long, default_value_t = 0.4)]
    pub rho_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GateArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Lipschitz constant of ρ; fitted when absent.
    #[arg(long = "lipschitz")]
    pub l: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    /// Exponents δ for the annular decay probe.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub deltas: Vec<f64>,
    #[arg(long, default_value_t = 4000)]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    pub radius: RadiusArgs,
    #[command(flatten)]
    pub gate: GateArgs,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BoundaryFn {
    /// x² − y²
    Saddle,
    /// first coordinate
    Linear,
    Const(String),
}

impl std::str::FromStr for BoundaryFn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "x2-y2" => Ok(BoundaryFn::Saddle),
            "linear" => Ok(BoundaryFn::Linear),
            _ => match s.strip_prefix("const:") {
                Some(c) if c.parse::<f64>().is_ok_and(f64::is_finite) => Ok(BoundaryFn::Const(c.to_string())),
                _ => Err(format!("unknown boundary function {s:?}; use x2-y2, linear or const:C")),
            },
        }
    }
}

impl TryFrom<String> for BoundaryFn {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<BoundaryFn> for String {
    fn from(b: BoundaryFn) -> String {
        match b {
            BoundaryFn::Saddle => "x2-y2".into(),
            BoundaryFn::Linear => "linear".into(),
            BoundaryFn::Const(c) => format!("const:{c}"),
        }
    }
}

impl BoundaryFn {
    pub fn eval(&self, p: &[f64]) -> f64 {
        match self {
            BoundaryFn::Saddle => p[0] * p[0] - p.get(1).map_or(0.0, |y| y * y),
            BoundaryFn::Linear => p[0],
            BoundaryFn::Const(c) => c.parse().expect("validated on parse"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    pub radius: RadiusArgs,
    /// Boundary CSV (`id,value`) covering every boundary point.
    #[arg(long, conflicts_with = "boundary_fn", required_unless_present = "boundary_fn")]
    pub boundary: Option<PathBuf>,
    /// Boundary data from a formula: x2-y2, linear or const:C.
    #[arg(long)]
    pub boundary_fn: Option<BoundaryFn>,
    /// Solver configuration JSON; replaces the solver flags.
    #[arg(long, conflicts_with_all = ["alpha", "tolerance", "max_iterations", "record_every"])]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true, required_unless_present = "config")]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 200_000)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub record_every: usize,
    /// Starting field CSV (`id,value`); boundary values are replaced by the data.
    #[arg(long)]
    pub initial: Option<PathBuf>,
    /// Parameter gate inputs; when ε and λ are given the gate must pass unless --force.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long = "lipschitz")]
    pub l: Option<f64>,
    /// Run even when the gate or the radius bounds fail. Admissibility is always enforced.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    pub radius: RadiusArgs,
    /// Fixed-point field CSV (`id,value`).
    #[arg(long)]
    pub field: PathBuf,
    #[command(flatten)]
    pub gate: GateArgs,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Largest residual accepted as a fixed point.
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mean,
    Midrange,
    P,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AsymptoticsArgs {
    /// Catalog name: sq_norm, x1_sq, linear, saddle, cubic_harmonic, log_norm, exp_x1.
    #[arg(long = "fn")]
    pub function: String,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x: Vec<f64>,
    /// Dimension; must match the point when given.
    #[arg(long = "n")]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value = "mean")]
    pub mode: Mode,
    /// Exponent p for `--mode p`; `inf` allowed.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05,0.025")]
    pub radii: Vec<f64>,
    /// Lattice spacing.
    #[arg(long)]
    pub h: Option<f64>,
}

/// Everything needed to rerun a command; embedded in every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub seed: u64,
    pub out: PathBuf,
    #[serde(flatten)]
    pub command: Command,
}
