//! Run configuration: parsed from flags or read from a JSON config file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use drops2d::energy::{Potential, TabulatedPotential};
use drops2d::geometry::{io, shapes, Vec2};
use drops2d::Region;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Seed used for randomized suites unless one is given.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(
    name = "drops2d",
    version,
    about = "Charged planar drops: capacitary energies, relaxation and shape flows"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// Read the full run configuration from a JSON file instead of flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for the manifest and artifacts.
    #[arg(long, global = true, default_value = "drops2d-out")]
    pub out: PathBuf,
    /// Seed for randomized suites; recorded in every artifact.
    #[arg(long = "rng-seed", global = true)]
    pub rng_seed: Option<u64>,
    /// Draw the seed from the clock when none is given.
    #[arg(long, global = true)]
    pub nondeterministic: bool,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Equilibrium measure, I1 and cap1 of a region.
    Capacity(CapacityArgs),
    /// Energy report E_lambda and its relaxation.
    Energy(EnergyArgs),
    /// Recovery-sequence study of the relaxed energy.
    Relax(RelaxArgs),
    /// Predicted first variation against finite differences.
    Variation(VariationArgs),
    /// Per-vertex Euler-Lagrange residual.
    ElResidual(ElResidualArgs),
    /// Area-constrained gradient flow from a seed region.
    Minimize(MinimizeArgs),
    /// Acceptance suite with a pass/fail table.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Capacity(_) => "capacity",
            Command::Energy(_) => "energy",
            Command::Relax(_) => "relax",
            Command::Variation(_) => "variation",
            Command::ElResidual(_) => "el-residual",
            Command::Minimize(_) => "minimize",
            Command::Verify(_) => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MeshArgs {
    /// Mesh spacing.
    #[arg(long, default_value_t = 0.03)]
    pub h: f64,
    /// Split boundary cells once into four.
    #[arg(long)]
    #[serde(default)]
    pub refine: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CapacityArgs {
    /// Region JSON file or a shape such as disk:1 or ellipse:2,1.
    #[arg(long)]
    pub region: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub mesh: MeshArgs,
    /// Also solve at h/2 and extrapolate.
    #[arg(long)]
    #[serde(default)]
    pub extrapolate: bool,
    /// Write the per-cell masses as CSV.
    #[arg(long)]
    #[serde(default)]
    pub cells: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EnergyArgs {
    #[arg(long)]
    pub region: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub mesh: MeshArgs,
    #[arg(long)]
    pub lambda: f64,
    /// Confining potential, e.g. zero or quadratic:1,1,1.
    #[arg(long, default_value = "zero")]
    #[serde(default = "zero")]
    pub g: String,
    /// Add the closed-form ball of the same area at the centroid.
    #[arg(long)]
    #[serde(default)]
    pub compare_ball: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RelaxArgs {
    #[arg(long)]
    pub region: String,
    #[arg(long, default_value_t = 0.03)]
    pub h: f64,
    #[arg(long)]
    pub lambda: f64,
    /// Satellite counts.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 4, 8, 16])]
    pub n: Vec<usize>,
    /// Placement radii.
    #[arg(long = "big-r", value_delimiter = ',', default_values_t = vec![8.0, 16.0])]
    pub big_r: Vec<f64>,
    /// Write an SVG of every recovery region.
    #[arg(long)]
    #[serde(default)]
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct VariationArgs {
    #[arg(long)]
    pub region: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub mesh: MeshArgs,
    /// dilation[:cx,cy], translation:ex,ey or bump:vertex,width.
    #[arg(long, default_value = "dilation")]
    pub field: String,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ElResidualArgs {
    #[arg(long)]
    pub region: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub mesh: MeshArgs,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value = "zero")]
    #[serde(default = "zero")]
    pub g: String,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MinimizeArgs {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub mass: f64,
    #[arg(long, default_value = "zero")]
    #[serde(default = "zero")]
    pub g: String,
    /// Seed region: JSON file or a shape; it is rescaled to the mass.
    #[arg(long, default_value = "ellipse:1.5,1")]
    pub seed: String,
    /// Mesh spacing; defaults to 0.45 of the boundary spacing.
    #[arg(long)]
    pub h: Option<f64>,
    /// Boundary spacing; defaults to the ball perimeter over 64.
    #[arg(long)]
    pub hb: Option<f64>,
    #[arg(long, default_value_t = 3000)]
    pub max_iters: usize,
    /// Stop when max|R| times the diameter falls below this.
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Time step factor in dt = beta hb^2.
    #[arg(long, default_value_t = 0.25)]
    pub beta: f64,
    /// Steps between equilibrium solves.
    #[arg(long, default_value_t = 1)]
    pub refresh: usize,
    /// Iterations between filmstrip frames; 0 writes no filmstrip.
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub frame_every: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    /// Run the subset that finishes in under two minutes.
    #[arg(long)]
    #[serde(default)]
    pub quick: bool,
    /// Multiplies every accuracy tolerance.
    #[arg(long, default_value_t = 1.0)]
    pub tolerance_scale: f64,
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub criteria: Vec<u32>,
}

fn zero() -> String {
    "zero".into()
}

/// Everything that determines a run's numeric output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "yes")]
    pub deterministic: bool,
    #[serde(default = "default_seed")]
    pub rng_seed: u64,
}

fn default_out() -> PathBuf {
    PathBuf::from("drops2d-out")
}

fn yes() -> bool {
    true
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<RunConfig, CliError> {
        if let Some(path) = &cli.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
            let cfg: RunConfig = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
            return Ok(cfg);
        }
        let command = cli
            .command
            .ok_or_else(|| CliError::Validation("no subcommand given; see --help".into()))?;
        let deterministic = !cli.nondeterministic;
        let rng_seed = match cli.rng_seed {
            Some(s) => s,
            None if deterministic => DEFAULT_SEED,
            None => std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(DEFAULT_SEED),
        };
        Ok(RunConfig {
            command,
            out: cli.out,
            deterministic,
            rng_seed,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Validation(format!("--{name} must be positive, got {v}")))
            }
        };
        let nonnegative = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Validation(format!("--{name} must be non-negative, got {v}")))
            }
        };
        match &self.command {
            Command::Capacity(a) => positive("h", a.mesh.h),
            Command::Energy(a) => {
                positive("h", a.mesh.h)?;
                nonnegative("lambda", a.lambda)?;
                parse_potential(&a.g).map(|_| ())
            }
            Command::Relax(a) => {
                positive("h", a.h)?;
                nonnegative("lambda", a.lambda)?;
                if a.n.is_empty() || a.n.contains(&0) {
                    return Err(CliError::Validation("--n needs positive satellite counts".into()));
                }
                if a.big_r.is_empty() {
                    return Err(CliError::Validation("--big-r needs at least one radius".into()));
                }
                a.big_r.iter().try_for_each(|&r| positive("big-r", r))
            }
            Command::Variation(a) => {
                positive("h", a.mesh.h)?;
                parse_field(&a.field).map(|_| ())
            }
            Command::ElResidual(a) => {
                positive("h", a.mesh.h)?;
                nonnegative("lambda", a.lambda)?;
                parse_potential(&a.g).map(|_| ())
            }
            Command::Minimize(a) => {
                positive("mass", a.mass)?;
                nonnegative("lambda", a.lambda)?;
                if let Some(h) = a.h {
                    positive("h", h)?;
                }
                if let Some(hb) = a.hb {
                    positive("hb", hb)?;
                }
                positive("eps", a.eps)?;
                parse_potential(&a.g).map(|_| ())
            }
            Command::Verify(a) => {
                positive("tolerance-scale", a.tolerance_scale)?;
                match a.criteria.iter().find(|&&c| !(1..=10).contains(&c)) {
                    Some(c) => Err(CliError::Validation(format!("no criterion {c}; criteria are 1 to 10"))),
                    None => Ok(()),
                }
            }
        }
    }
}

/// A catalog potential or `grid:<file.json>` holding a tabulated grid.
pub fn parse_potential(s: &str) -> Result<Potential, CliError> {
    if let Some(path) = grid_path(s) {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("--g: cannot read {path}: {e}")))?;
        let raw: TabulatedPotential =
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("--g: {path}: {e}")))?;
        let grid = TabulatedPotential::new(raw.lo, raw.hi, raw.nx, raw.ny, raw.values)
            .map_err(|e| CliError::Validation(format!("--g: {path}: {e}")))?;
        return Ok(Potential::Tabulated(grid));
    }
    s.parse()
        .map_err(|e: drops2d::Error| CliError::Validation(format!("--g: {e}")))
}

pub fn grid_path(s: &str) -> Option<&str> {
    s.strip_prefix("grid:")
}

fn numbers(spec: &str, body: &str) -> Result<Vec<f64>, CliError> {
    body.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Validation(format!("'{spec}': '{t}' is not a number")))
        })
        .collect()
}

/// Region from a JSON file or one of `disk:r[,n]`, `ellipse:a,b[,n]`,
/// `square:s`, `rounded-square:side,corner[,n]` and
/// `annulus:outer,inner[,n]`, all centered at the origin.
pub fn load_region(spec: &str) -> Result<Region, drops2d::Error> {
    let Some((kind, body)) = spec
        .split_once(':')
        .filter(|(k, _)| matches!(*k, "disk" | "ellipse" | "square" | "rounded-square" | "annulus"))
    else {
        return io::read_region(spec);
    };
    let bad = |msg: String| drops2d::Error::InvalidParameter(format!("region '{spec}': {msg}"));
    let v = numbers(spec, body).map_err(|e| bad(e.to_string()))?;
    let n = |i: usize, default: usize| v.get(i).map_or(default, |&x| x as usize);
    if v.iter().any(|x| x.is_nan() || *x <= 0.0) {
        return Err(bad("all shape parameters must be positive".into()));
    }
    let region = match (kind, v.len()) {
        ("disk", 1 | 2) => shapes::disk(Vec2::ZERO, v[0], n(1, 256)),
        ("ellipse", 2 | 3) => shapes::ellipse(Vec2::ZERO, v[0], v[1], n(2, 256)),
        ("square", 1) => shapes::square(Vec2::new(-v[0] / 2.0, -v[0] / 2.0), v[0]),
        ("rounded-square", 2 | 3) => shapes::rounded_square(Vec2::ZERO, v[0], v[1], n(2, 256)),
        ("annulus", 2 | 3) => shapes::annulus(Vec2::ZERO, v[0], v[1], n(2, 256), n(2, 256)),
        _ => return Err(bad(format!("wrong number of parameters for {kind}"))),
    };
    region.validate()?;
    Ok(region)
}

pub fn parse_field(spec: &str) -> Result<FieldSpec, CliError> {
    let (kind, body) = spec.split_once(':').unwrap_or((spec, ""));
    let v = if body.is_empty() {
        Vec::new()
    } else {
        numbers(spec, body)?
    };
    match (kind, v.len()) {
        ("dilation", 0) => Ok(FieldSpec::Dilation(Vec2::ZERO)),
        ("dilation", 2) => Ok(FieldSpec::Dilation(Vec2::new(v[0], v[1]))),
        ("translation", 2) => Ok(FieldSpec::Translation(Vec2::new(v[0], v[1]))),
        ("bump", 2) if v[0] >= 0.0 && v[1] > 0.0 => Ok(FieldSpec::Bump(v[0] as usize, v[1])),
        _ => Err(CliError::Validation(format!(
            "--field '{spec}': expected dilation[:cx,cy], translation:ex,ey or bump:vertex,width"
        ))),
    }
}

/// A vector field before the region's trace is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldSpec {
    Dilation(Vec2),
    Translation(Vec2),
    Bump(usize, f64),
}
