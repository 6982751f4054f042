use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "dynamo-lab", version, about = "Spectral and intertwining experiments for the spherical alpha^2-dynamo")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full spectrum of the operator matrix for one profile.
    Spectrum(SpectrumArgs),
    /// Eigenvalue branches of `C * alpha` over a range of `C`.
    Sweep(SweepArgs),
    /// Quadratic-pencil consistency of every eigenpair.
    PencilCheck(PencilArgs),
    /// Scalar Darboux partner and its level comparison.
    Darboux(DarbouxArgs),
    /// Residual `rho` of a profile pair over a window.
    Nogo(NogoArgs),
    /// Riccati residuals of the affine coordinate of a linear trajectory.
    MreCheck(MreArgs),
}

#[derive(Debug, Args)]
pub struct OperatorArgs {
    /// Profile literal (`const:c`, `poly:c0,c1,..`, `exp:a,b`, `spline:<file>`).
    #[arg(long)]
    pub alpha: String,
    #[arg(long, default_value_t = 1)]
    pub l: u32,
    /// Interior grid nodes.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub op: OperatorArgs,
    /// Band `|Im| <= tol` counted as real; default is the solver's relative default.
    #[arg(long)]
    pub pair_tol: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Scatter plot of the spectrum in the complex plane.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub op: OperatorArgs,
    /// `C_min,C_max,steps`.
    #[arg(long, value_parser = parse_scale, allow_hyphen_values = true)]
    pub scale: (f64, f64, usize),
    /// Number of leading branches followed.
    #[arg(long, default_value_t = 4)]
    pub track: usize,
    #[arg(long)]
    pub pair_tol: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Real parts of the branches against `C`.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PencilArgs {
    #[command(flatten)]
    pub op: OperatorArgs,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeedKind {
    /// Discrete ground state of `H0`.
    Ground,
    /// `sin(pi x)` at the energy given by `--energy`.
    Sine,
}

#[derive(Debug, Args)]
pub struct DarbouxArgs {
    /// `zero`, `const:c` or `harmonic:k[,x0]`.
    #[arg(long, default_value = "zero")]
    pub potential: String,
    #[arg(long, value_enum, default_value_t = SeedKind::Ground)]
    pub seed: SeedKind,
    /// Factorization energy for `--seed sine`; defaults to `pi^2`.
    #[arg(long, allow_negative_numbers = true)]
    pub energy: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub levels: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NogoArgs {
    #[arg(long)]
    pub alpha0: String,
    #[arg(long)]
    pub alpha1: String,
    #[arg(long, default_value_t = 2)]
    pub l1: u32,
    /// Defaults to `l1 - 1`.
    #[arg(long)]
    pub l0: Option<u32>,
    #[arg(long = "E", default_value_t = 0.0, allow_negative_numbers = true)]
    pub energy: f64,
    /// `r_lo,r_hi`.
    #[arg(long, value_parser = parse_window, default_value = "0.1,1")]
    pub window: (f64, f64),
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Also run the certificate on the built-in 25-pair family.
    #[arg(long)]
    pub certificate: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// `rho` against `r`.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SystemKind {
    U,
    B,
}

#[derive(Debug, Args)]
pub struct MreArgs {
    #[arg(long)]
    pub alpha0: String,
    #[arg(long)]
    pub alpha1: String,
    #[arg(long, default_value_t = 2)]
    pub l1: u32,
    #[arg(long)]
    pub l0: Option<u32>,
    #[arg(long = "E", default_value_t = 0.0, allow_negative_numbers = true)]
    pub energy: f64,
    #[arg(long, value_enum, default_value_t = SystemKind::U)]
    pub system: SystemKind,
    #[arg(long, default_value_t = 0.1)]
    pub r_start: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r_end: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub step: f64,
    /// Start the B-system from its singular series instead of identity blocks.
    #[arg(long)]
    pub series: bool,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_floats(s: &str, count: usize) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != count {
        return Err(format!("expected {count} comma-separated values, got `{s}`"));
    }
    parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}

pub fn parse_scale(s: &str) -> Result<(f64, f64, usize), String> {
    let v = parse_floats(s, 3)?;
    if v[2] < 2.0 || v[2].fract() != 0.0 {
        return Err(format!("steps must be an integer >= 2, got {}", v[2]));
    }
    Ok((v[0], v[1], v[2] as usize))
}

pub fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let v = parse_floats(s, 2)?;
    Ok((v[0], v[1]))
}
