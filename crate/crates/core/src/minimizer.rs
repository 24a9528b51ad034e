//! Area-constrained gradient flow of E_λ driven by the Euler–Lagrange
//! residual, and the small-mass sweep toward a ball at argmin g.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{self, EnergyReport, Potential};
use crate::equilibrium::{solve_region, EquilibriumSolution};
use crate::error::{Error, Result};
use crate::geometry::{boundary_trace, hausdorff_distance, ring, shapes, BoundaryTrace, Component, Region, Vec2};
use crate::quadrature::MeshConfig;
use crate::shape_calculus::{euler_lagrange_residual, half_normal_derivative};

/// Energy rises above this fraction of E reject a step.
const ENERGY_SLACK: f64 = 1e-6;
/// Consecutive rejections before the flow stalls.
const MAX_REJECTIONS: usize = 6;
/// Fewest vertices per ring after resampling.
const MIN_RING_VERTICES: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub lambda: f64,
    pub mass: f64,
    pub potential: Potential,
    /// Mesh spacing; defaults to 0.45 h_b.
    pub h: Option<f64>,
    /// Boundary spacing; defaults to the perimeter of the ball of mass m
    /// over 64.
    pub hb: Option<f64>,
    /// Δt = β h_b².
    pub beta: f64,
    /// Stop when max|R| · diam ≤ eps_stop.
    pub eps_stop: f64,
    pub max_iters: usize,
    /// Equilibrium refresh period in steps. Between refreshes the
    /// half-derivatives of the last solve are reused, which is only
    /// accurate for small moves.
    pub refresh: usize,
}

impl FlowConfig {
    pub fn new(lambda: f64, mass: f64, potential: Potential) -> Self {
        FlowConfig {
            lambda,
            mass,
            potential,
            h: None,
            hb: None,
            beta: 0.25,
            eps_stop: 0.05,
            max_iters: 3000,
            refresh: 1,
        }
    }

    pub fn boundary_spacing(&self) -> f64 {
        self.hb.unwrap_or(2.0 * (PI * self.mass).sqrt() / 64.0)
    }

    pub fn mesh_spacing(&self) -> f64 {
        self.h.unwrap_or(0.45 * self.boundary_spacing())
    }

    pub fn dt(&self) -> f64 {
        self.beta * self.boundary_spacing().powi(2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mass must be positive, got {}",
                self.mass
            )));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        let lc = energy::lambda_c(self.mass);
        if self.lambda >= lc {
            return Err(Error::InvalidParameter(format!(
                "lambda {} is not below the critical value {lc:.6} for mass {}",
                self.lambda, self.mass
            )));
        }
        if !(self.beta > 0.0 && self.beta <= 0.25) {
            return Err(Error::InvalidParameter(format!(
                "time-step factor must be in (0, 0.25], got {}",
                self.beta
            )));
        }
        if !(self.eps_stop > 0.0) {
            return Err(Error::InvalidParameter("stop tolerance must be positive".into()));
        }
        if self.refresh == 0 {
            return Err(Error::InvalidParameter("refresh period must be at least 1".into()));
        }
        let (hb, h) = (self.boundary_spacing(), self.mesh_spacing());
        if !(h > 0.0 && hb >= 2.0 * h) {
            return Err(Error::InvalidParameter(format!(
                "boundary spacing {hb} must be at least twice the mesh spacing {h}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    Budget,
    Stalled,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::Budget => "budget",
            Termination::Stalled => "stalled",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub iteration: usize,
    pub energy: f64,
    pub max_residual: f64,
    /// (area − m)/m after the move and resampling, before rescaling.
    pub area_drift: f64,
    pub dt: f64,
    pub rejections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub iteration: usize,
    pub region: Region,
    /// Trace with half-derivatives and residuals of the current region.
    pub trace: BoundaryTrace,
    pub report: EnergyReport,
    pub history: Vec<StepRecord>,
    pub termination: Option<Termination>,
    #[serde(skip)]
    pub solution: Option<EquilibriumSolution>,
}

impl FlowState {
    pub fn max_residual(&self) -> f64 {
        self.trace.max_abs_residual().unwrap_or(f64::INFINITY)
    }

    /// max|R| · diam.
    pub fn criticality(&self) -> f64 {
        self.max_residual() * self.region.diameter()
    }

    pub fn write_history_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        use std::io::Write;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "iteration,energy,max_residual,area_drift,dt,rejections")?;
        for r in &self.history {
            writeln!(
                f,
                "{},{:.12e},{:.6e},{:.6e},{:.6e},{}",
                r.iteration, r.energy, r.max_residual, r.area_drift, r.dt, r.rejections
            )?;
        }
        f.flush()?;
        Ok(())
    }
}

struct Evaluated {
    sol: EquilibriumSolution,
    trace: BoundaryTrace,
    report: EnergyReport,
}

fn evaluate(region: &Region, cfg: &FlowConfig) -> Result<Evaluated> {
    let sol = solve_region(region, &MeshConfig::new(cfg.mesh_spacing()))?;
    let trace = half_normal_derivative(region, &sol, &boundary_trace(region)?)?;
    let trace = euler_lagrange_residual(&trace, &cfg.potential, cfg.lambda)?;
    let report = energy::evaluate(region, &sol, &cfg.potential, cfg.lambda)?;
    Ok(Evaluated { sol, trace, report })
}

/// Initial state: the seed rescaled to area m about its centroid.
pub fn initial_state(seed: &Region, cfg: &FlowConfig) -> Result<FlowState> {
    cfg.validate()?;
    let region = crate::geometry::rescale_to_area(seed, cfg.mass, seed.centroid())?;
    let region = resample(&region, cfg.boundary_spacing())?;
    let region = crate::geometry::rescale_to_area(&region, cfg.mass, region.centroid())?;
    let ev = evaluate(&region, cfg)?;
    Ok(FlowState {
        iteration: 0,
        region,
        trace: ev.trace,
        report: ev.report,
        history: Vec::new(),
        termination: None,
        solution: Some(ev.sol),
    })
}

/// Uniform arclength resampling with spacing at least `hb`.
fn resample(region: &Region, hb: f64) -> Result<Region> {
    let rs = |r: &Vec<Vec2>| {
        let n = ((ring::length(r) / hb).floor() as usize).max(MIN_RING_VERTICES);
        ring::resample(r, n)
    };
    Region::new(
        region
            .components
            .iter()
            .map(|c| Component::with_holes(rs(&c.outer), c.holes.iter().map(rs).collect()))
            .collect(),
    )
}

/// Normal velocities −R, with flagged vertices taking the mean of their
/// nearest unflagged ring neighbours.
fn velocities(trace: &BoundaryTrace) -> Vec<f64> {
    let mut v: Vec<Option<f64>> = trace.points.iter().map(|p| p.residual.map(|r| -r)).collect();
    for range in &trace.rings {
        let n = range.len();
        let fill: Vec<(usize, f64)> = range
            .clone()
            .filter(|&i| v[i].is_none())
            .map(|i| {
                let k = i - range.start;
                let find = |dir: isize| {
                    (1..n).find_map(|step| {
                        let j = (k as isize + dir * step as isize).rem_euclid(n as isize) as usize;
                        v[range.start + j]
                    })
                };
                let vals: Vec<f64> = [find(1), find(-1)].into_iter().flatten().collect();
                let mean = if vals.is_empty() {
                    0.0
                } else {
                    vals.iter().sum::<f64>() / vals.len() as f64
                };
                (i, mean)
            })
            .collect();
        for (i, m) in fill {
            v[i] = Some(m);
        }
    }
    v.into_iter().map(|x| x.unwrap_or(0.0)).collect()
}

/// Moves every vertex by dt · V ν and rebuilds the region.
fn advance(region: &Region, trace: &BoundaryTrace, dt: f64) -> Result<Region> {
    let v = velocities(trace);
    let mut rings = trace.rings.iter().map(|range| {
        range
            .clone()
            .map(|i| trace.points[i].position + trace.points[i].normal * (dt * v[i]))
            .collect::<Vec<Vec2>>()
    });
    let mut comps = Vec::with_capacity(region.components.len());
    for c in &region.components {
        let outer = rings.next().unwrap_or_default();
        let holes = (0..c.holes.len()).map(|_| rings.next().unwrap_or_default()).collect();
        comps.push(Component::with_holes(outer, holes));
    }
    Region::new(comps)
}

/// Copies half-derivatives and flags from `from` onto `to` by matching
/// normalized vertex positions along each ring.
fn transfer_half_derivatives(from: &BoundaryTrace, to: &mut BoundaryTrace) {
    for (rf, rt) in from.rings.iter().zip(to.rings.clone()) {
        let (nf, nt) = (rf.len(), rt.len());
        for (k, i) in rt.enumerate() {
            let j = rf.start + ((k as f64 * nf as f64 / nt as f64).round() as usize) % nf;
            to.points[i].half_derivative = from.points[j].half_derivative;
            to.points[i].flagged = from.points[j].flagged;
        }
    }
}

/// One accepted step of `cfg.refresh` moves, or a stalled-flow error
/// carrying the unchanged state after six halvings of Δt.
pub fn flow_step(state: &FlowState, cfg: &FlowConfig) -> Result<FlowState> {
    cfg.validate()?;
    let hb = cfg.boundary_spacing();
    let e0 = state.report.energy;
    let mut dt = cfg.dt();
    let mut last_reason = String::new();
    for rejections in 0..MAX_REJECTIONS {
        let attempt = (|| -> Result<(Region, f64, Evaluated)> {
            let mut region = state.region.clone();
            let mut trace = state.trace.clone();
            let mut drift = 0.0;
            for sub in 0..cfg.refresh {
                if sub > 0 {
                    let mut fresh = boundary_trace(&region)?;
                    transfer_half_derivatives(&trace, &mut fresh);
                    trace = euler_lagrange_residual(&fresh, &cfg.potential, cfg.lambda)?;
                }
                let moved = resample(&advance(&region, &trace, dt)?, hb)?;
                drift = (moved.area() - cfg.mass) / cfg.mass;
                region = crate::geometry::rescale_to_area(&moved, cfg.mass, moved.centroid())?;
            }
            let ev = evaluate(&region, cfg)?;
            Ok((region, drift, ev))
        })();
        match attempt {
            Ok((region, drift, ev)) if ev.report.energy <= e0 + ENERGY_SLACK * e0.abs() => {
                let mut history = state.history.clone();
                let max_residual = ev.trace.max_abs_residual().unwrap_or(f64::INFINITY);
                history.push(StepRecord {
                    iteration: state.iteration + 1,
                    energy: ev.report.energy,
                    max_residual,
                    area_drift: drift,
                    dt,
                    rejections,
                });
                return Ok(FlowState {
                    iteration: state.iteration + 1,
                    region,
                    trace: ev.trace,
                    report: ev.report,
                    history,
                    termination: None,
                    solution: Some(ev.sol),
                });
            }
            Ok((_, _, ev)) => {
                last_reason = format!("energy rose from {e0:.10} to {:.10}", ev.report.energy);
            }
            Err(e) => last_reason = e.to_string(),
        }
        dt *= 0.5;
    }
    let mut stalled = state.clone();
    stalled.termination = Some(Termination::Stalled);
    Err(Error::StalledFlow {
        reason: format!("{MAX_REJECTIONS} consecutive rejections; last: {last_reason}"),
        state: Box::new(stalled),
    })
}

/// Steps from `state` until max|R| · diam ≤ eps_stop or the iteration
/// budget is spent.
pub fn continue_flow(mut state: FlowState, cfg: &FlowConfig) -> Result<FlowState> {
    loop {
        if state.criticality() <= cfg.eps_stop {
            state.termination = Some(Termination::Converged);
            return Ok(state);
        }
        if state.iteration >= cfg.max_iters {
            state.termination = Some(Termination::Budget);
            return Ok(state);
        }
        state = flow_step(&state, cfg)?;
    }
}

pub fn run_flow(cfg: &FlowConfig, seed: &Region) -> Result<FlowState> {
    continue_flow(initial_state(seed, cfg)?, cfg)
}

/// Hausdorff distance of (π/|Ω|)^{1/2}(Ω − centroid) to the unit disk.
pub fn rescaled_ball_distance(region: &Region) -> f64 {
    let c = region.centroid();
    let s = (PI / region.area()).sqrt();
    let rescaled = region.map_points(|p| (p - c) * s);
    hausdorff_distance(&rescaled, &shapes::disk(Vec2::ZERO, 1.0, 1024))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mass: f64,
    pub lambda: f64,
    pub radius: f64,
    pub hausdorff: Option<f64>,
    pub centroid_distance: Option<f64>,
    pub energy: Option<f64>,
    pub iterations: usize,
    pub termination: Option<Termination>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub ratio: f64,
    pub potential: Potential,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Each entry is at most (1 + slack) times the previous one.
    pub fn nonincreasing(values: &[f64], slack: f64) -> bool {
        values.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
    }

    pub fn hausdorff_column(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.hausdorff).collect()
    }

    pub fn centroid_column(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.centroid_distance).collect()
    }
}

/// Flow settings shared by every row of the default sweep; λ and m are
/// overwritten per row.
pub fn sweep_template() -> FlowConfig {
    FlowConfig::new(0.0, 1.0, Potential::Zero)
}

/// The default sweep seed in units of the ball radius: a 1.5:1 ellipse of
/// area π whose center sits 0.02 radii off the minimum of g.
pub fn default_sweep_seed() -> Region {
    shapes::ellipse_with_area(Vec2::new(0.02, 0.0), PI, 1.5, 128)
}

/// Runs the flow for each mass at λ = ratio · λ_c(m). The seed, given in
/// units of the ball radius about the first minimizer of g, is scaled by
/// √(m/π). Stalls are recorded in the row.
pub fn asymptotic_sweep(
    masses: &[f64],
    ratio: f64,
    g: &Potential,
    seed: &Region,
    template: &FlowConfig,
) -> Result<SweepReport> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::InvalidParameter(format!("ratio must be in [0, 1), got {ratio}")));
    }
    if !g.is_coercive() {
        return Err(Error::InvalidParameter(format!("potential '{g}' is not coercive")));
    }
    if masses.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("masses must be strictly decreasing".into()));
    }
    let x0 = g.argmin().first().copied().unwrap_or(Vec2::ZERO);
    let rows = masses
        .par_iter()
        .map(|&m| {
            let radius = (m / PI).sqrt();
            let lambda = ratio * energy::lambda_c(m);
            let cfg = FlowConfig {
                lambda,
                mass: m,
                potential: g.clone(),
                ..template.clone()
            };
            let scaled = seed.map_points(|p| x0 + p * radius);
            let (state, error) = match run_flow(&cfg, &scaled) {
                Ok(s) => (Some(s), None),
                Err(Error::StalledFlow { reason, state }) => (Some(*state), Some(reason)),
                Err(e) => (None, Some(e.to_string())),
            };
            let dist = |s: &FlowState| {
                g.argmin()
                    .iter()
                    .map(|a| (s.region.centroid() - *a).norm())
                    .fold(f64::INFINITY, f64::min)
            };
            SweepRow {
                mass: m,
                lambda,
                radius,
                hausdorff: state.as_ref().map(|s| rescaled_ball_distance(&s.region)),
                centroid_distance: state.as_ref().map(dist),
                energy: state.as_ref().map(|s| s.report.energy),
                iterations: state.as_ref().map_or(0, |s| s.iteration),
                termination: state.as_ref().and_then(|s| s.termination),
                error,
            }
        })
        .collect();
    Ok(SweepReport {
        ratio,
        potential: g.clone(),
        rows,
    })
}
