//! Normal ½-derivative of the capacitary potential, first variations of I₁
//! and cap₁, and the Euler–Lagrange residual.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::Potential;
use crate::equilibrium::{solve_equilibrium_with, solve_region, EquilibriumSolution, SolverConfig};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryTrace, Region, Vec2};
use crate::quadrature::{assemble_kernel, potential_at, MeshConfig};

/// Sample offsets are h·2^j for j in this range.
const SAMPLE_EXPONENTS: std::ops::RangeInclusive<i32> = 1..=5;
/// Powers of s in the least-squares model of v(x + sν) − I₁.
const FIT_POWERS: [f64; 3] = [0.5, 1.5, 2.5];
/// Fits whose residual exceeds this fraction of |D|·√s_max are flagged.
const FIT_FLAG: f64 = 0.1;
/// Largest flagged fraction accepted by the residual computation.
const MAX_FLAGGED: f64 = 0.1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HalfDerivativeOptions {
    /// Mesh spacing used for the sample offsets; defaults to the mesh's.
    pub h: Option<f64>,
}

/// Least-squares coefficients of Σ c_k s^{p_k} and the largest residual.
fn fit_half_powers(s: &[f64], vals: &[f64]) -> Option<(f64, f64)> {
    let smax = s.iter().copied().fold(0.0, f64::max);
    let a = DMatrix::from_fn(s.len(), FIT_POWERS.len(), |r, c| (s[r] / smax).powf(FIT_POWERS[c]));
    let b = DVector::from_column_slice(vals);
    let coef = a.clone().svd(true, true).solve(&b, 1e-14).ok()?;
    let res = (&a * &coef - &b).amax();
    Some((coef[0] / smax.sqrt(), res))
}

/// Fills `half_derivative` and `flagged` in a boundary trace: for each
/// vertex, v is sampled along the outward normal at s = 2h … 32h and
/// v(x + sν) − I₁ is fitted by D√s + b s^{3/2} + c s^{5/2}.
pub fn half_normal_derivative_with(
    region: &Region,
    sol: &EquilibriumSolution,
    trace: &BoundaryTrace,
    opts: &HalfDerivativeOptions,
) -> Result<BoundaryTrace> {
    let h = opts.h.unwrap_or(sol.mesh.h);
    let hb = trace.mean_spacing();
    if hb < 2.0 * h * (1.0 - 1e-9) {
        return Err(Error::Precondition(format!(
            "boundary spacing {hb:.4} must be at least twice the mesh spacing {h:.4}"
        )));
    }
    let s: Vec<f64> = SAMPLE_EXPONENTS.map(|j| h * 2f64.powi(j)).collect();
    let smax = s[s.len() - 1];
    let fitted: Vec<(Option<f64>, bool)> = trace
        .points
        .par_iter()
        .map(|p| {
            let pts: Vec<Vec2> = s.iter().map(|&sj| p.position + p.normal * sj).collect();
            if pts.iter().any(|&q| region.contains(q)) {
                // the normal ray re-enters the region
                return (None, true);
            }
            let vals: Vec<f64> = pts
                .iter()
                .map(|&q| potential_at(&sol.mesh, &sol.masses, q) - sol.i1)
                .collect();
            match fit_half_powers(&s, &vals) {
                Some((d, res)) => (Some(d), !(res <= FIT_FLAG * d.abs() * smax.sqrt())),
                None => (None, true),
            }
        })
        .collect();
    let mut out = trace.clone();
    for (p, (d, flag)) in out.points.iter_mut().zip(fitted) {
        p.half_derivative = d;
        p.flagged = flag;
    }
    Ok(out)
}

pub fn half_normal_derivative(
    region: &Region,
    sol: &EquilibriumSolution,
    trace: &BoundaryTrace,
) -> Result<BoundaryTrace> {
    half_normal_derivative_with(region, sol, trace, &HalfDerivativeOptions::default())
}

/// Vector fields ζ used to deform regions by Φ_t(x) = x + tζ(x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorField {
    /// ζ(x) = x − center.
    Dilation { center: Vec2 },
    /// ζ(x) = e.
    Translation { e: Vec2 },
    /// ζ(x) = exp(−|x − center|²/width²) · direction.
    NormalBump { center: Vec2, width: f64, direction: Vec2 },
}

impl VectorField {
    /// Bump centered at a boundary vertex, pointing along its normal.
    pub fn normal_bump_at(trace: &BoundaryTrace, vertex: usize, width: f64) -> VectorField {
        let p = &trace.points[vertex];
        VectorField::NormalBump {
            center: p.position,
            width,
            direction: p.normal,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            VectorField::Dilation { .. } => "dilation",
            VectorField::Translation { .. } => "translation",
            VectorField::NormalBump { .. } => "normal-bump",
        }
    }

    pub fn value(&self, x: Vec2) -> Vec2 {
        match *self {
            VectorField::Dilation { center } => x - center,
            VectorField::Translation { e } => e,
            VectorField::NormalBump {
                center,
                width,
                direction,
            } => direction * (-(x - center).norm_squared() / (width * width)).exp(),
        }
    }

    /// Rows of the derivative Dζ at x.
    fn derivative(&self, x: Vec2) -> [[f64; 2]; 2] {
        match *self {
            VectorField::Dilation { .. } => [[1.0, 0.0], [0.0, 1.0]],
            VectorField::Translation { .. } => [[0.0, 0.0], [0.0, 0.0]],
            VectorField::NormalBump {
                center,
                width,
                direction,
            } => {
                let d = x - center;
                let psi = (-d.norm_squared() / (width * width)).exp();
                let g = d * (-2.0 * psi / (width * width));
                [
                    [direction.x * g.x, direction.x * g.y],
                    [direction.y * g.x, direction.y * g.y],
                ]
            }
        }
    }

    pub fn map(&self, x: Vec2, t: f64) -> Vec2 {
        x + self.value(x) * t
    }

    /// det(I + t Dζ(x)).
    pub fn jacobian(&self, x: Vec2, t: f64) -> f64 {
        let m = self.derivative(x);
        (1.0 + t * m[0][0]) * (1.0 + t * m[1][1]) - t * t * m[0][1] * m[1][0]
    }
}

/// How deformed regions are discretized in finite differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FdMode {
    /// Cells are carried by Φ_t, areas scaled by its Jacobian.
    Transported,
    /// Each deformed region is meshed afresh.
    Remeshed(MeshConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdOptions {
    /// t₁ as a fraction of the region's diameter; t₂ = t₁/2.
    pub t_fraction: f64,
    pub mode: FdMode,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions {
            t_fraction: 0.01,
            mode: FdMode::Transported,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    I1,
    Cap1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationCheck {
    pub functional: Functional,
    pub field: VectorField,
    pub predicted: f64,
    pub t1: f64,
    pub t2: f64,
    /// Centered differences at t₁ and t₂.
    pub fd_t1: f64,
    pub fd_t2: f64,
    /// (4 fd_t2 − fd_t1)/3.
    pub fd: f64,
    /// |predicted − fd| / |fd| when `relative`, else divided by I₁/diam.
    pub discrepancy: f64,
    pub relative: bool,
    /// Relative mismatch of the cap₁ prediction and the chain rule applied
    /// to the I₁ prediction.
    pub chain_rule_error: Option<f64>,
    pub flagged: usize,
}

fn boundary_integral(trace: &BoundaryTrace, zeta: &VectorField, weight: impl Fn(f64) -> f64) -> Result<f64> {
    let mut s = 0.0;
    for p in trace.points.iter().filter(|p| !p.flagged) {
        let d = p
            .half_derivative
            .ok_or_else(|| Error::Precondition("half-derivatives are not filled".into()))?;
        s += weight(d) * zeta.value(p.position).dot(p.normal) * p.weight;
    }
    Ok(s)
}

/// −(1/8) Σ D² (ζ·ν) ℓ over unflagged vertices.
pub fn predicted_variation_i1(trace: &BoundaryTrace, zeta: &VectorField) -> Result<f64> {
    Ok(-0.125 * boundary_integral(trace, zeta, |d| d * d)?)
}

/// (π/4) Σ (D/I₁)² (ζ·ν) ℓ over unflagged vertices.
pub fn predicted_variation_cap1(trace: &BoundaryTrace, zeta: &VectorField, i1: f64) -> Result<f64> {
    Ok(0.25 * PI * boundary_integral(trace, zeta, |d| (d / i1) * (d / i1))?)
}

/// I₁ of Φ_t(Ω) for each t.
fn deformed_energies(
    region: &Region,
    sol: &EquilibriumSolution,
    zeta: &VectorField,
    ts: &[f64],
    mode: &FdMode,
) -> Result<Vec<f64>> {
    ts.iter()
        .map(|&t| {
            let moved = region.map_points(|x| zeta.map(x, t));
            let s = match mode {
                FdMode::Transported => {
                    let mesh = sol.mesh.transported(moved, |x| zeta.map(x, t), |x| zeta.jacobian(x, t));
                    let k = assemble_kernel(&mesh)?;
                    solve_equilibrium_with(&mesh, &k, &SolverConfig::default())?
                }
                FdMode::Remeshed(cfg) => solve_region(&moved, cfg)?,
            };
            Ok(s.i1)
        })
        .collect::<Result<Vec<f64>>>()
        .map_err(|e| Error::Consistency(format!("finite-difference solve failed for {}: {e}", zeta.name())))
}

fn finish(
    functional: Functional,
    zeta: VectorField,
    predicted: f64,
    t1: f64,
    vals: &[f64],
    scale: f64,
    flagged: usize,
) -> VariationCheck {
    let t2 = t1 / 2.0;
    let fd_t1 = (vals[0] - vals[1]) / (2.0 * t1);
    let fd_t2 = (vals[2] - vals[3]) / (2.0 * t2);
    let fd = (4.0 * fd_t2 - fd_t1) / 3.0;
    let relative = fd.abs() > 1e-3 * scale;
    let discrepancy = if relative {
        (predicted - fd).abs() / fd.abs()
    } else {
        (predicted - fd).abs() / scale
    };
    VariationCheck {
        functional,
        field: zeta,
        predicted,
        t1,
        t2,
        fd_t1,
        fd_t2,
        fd,
        discrepancy,
        relative,
        chain_rule_error: None,
        flagged,
    }
}

fn stencil(region: &Region, opts: &FdOptions) -> (f64, [f64; 4]) {
    let t1 = opts.t_fraction * region.diameter();
    (t1, [t1, -t1, t1 / 2.0, -t1 / 2.0])
}

/// Predicted first variation of I₁ along ζ against centered finite
/// differences of the solved energy.
pub fn first_variation_i1_with(
    region: &Region,
    sol: &EquilibriumSolution,
    trace: &BoundaryTrace,
    zeta: &VectorField,
    opts: &FdOptions,
) -> Result<VariationCheck> {
    let predicted = predicted_variation_i1(trace, zeta)?;
    let (t1, ts) = stencil(region, opts);
    let vals = deformed_energies(region, sol, zeta, &ts, &opts.mode)?;
    let scale = sol.i1 / region.diameter();
    Ok(finish(
        Functional::I1,
        *zeta,
        predicted,
        t1,
        &vals,
        scale,
        trace.flagged_count(),
    ))
}

pub fn first_variation_i1(
    region: &Region,
    sol: &EquilibriumSolution,
    trace: &BoundaryTrace,
    zeta: &VectorField,
) -> Result<VariationCheck> {
    first_variation_i1_with(region, sol, trace, zeta, &FdOptions::default())
}

/// Same for cap₁ = 2π/I₁, with the chain-rule cross-check against the I₁
/// prediction.
pub fn first_variation_cap1_with(
    region: &Region,
    sol: &EquilibriumSolution,
    trace: &BoundaryTrace,
    zeta: &VectorField,
    opts: &FdOptions,
) -> Result<VariationCheck> {
    let predicted = predicted_variation_cap1(trace, zeta, sol.i1)?;
    let via_chain = -(2.0 * PI / (sol.i1 * sol.i1)) * predicted_variation_i1(trace, zeta)?;
    let chain_rule_error = if predicted == 0.0 && via_chain == 0.0 {
        0.0
    } else {
        (predicted - via_chain).abs() / predicted.abs().max(via_chain.abs())
    };
    let (t1, ts) = stencil(region, opts);
    let caps: Vec<f64> = deformed_energies(region, sol, zeta, &ts, &opts.mode)?
        .into_iter()
        .map(|i| 2.0 * PI / i)
        .collect();
    let scale = sol.cap1 / region.diameter();
    let mut check = finish(
        Functional::Cap1,
        *zeta,
        predicted,
        t1,
        &caps,
        scale,
        trace.flagged_count(),
    );
    check.chain_rule_error = Some(chain_rule_error);
    Ok(check)
}

pub fn first_variation_cap1(
    region: &Region,
    sol: &EquilibriumSolution,
    trace: &BoundaryTrace,
    zeta: &VectorField,
) -> Result<VariationCheck> {
    first_variation_cap1_with(region, sol, trace, zeta, &FdOptions::default())
}

/// F = κ − (λ/8) D² + g at each vertex, the multiplier p as the
/// arclength mean of F over unflagged vertices and R = F − p.
pub fn euler_lagrange_residual(trace: &BoundaryTrace, g: &Potential, lambda: f64) -> Result<BoundaryTrace> {
    let flagged = trace.flagged_count();
    if flagged as f64 > MAX_FLAGGED * trace.len() as f64 {
        return Err(Error::UnreliableTrace {
            flagged,
            total: trace.len(),
        });
    }
    let mut out = trace.clone();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut f = vec![0.0; out.len()];
    for (i, p) in out.points.iter().enumerate() {
        if p.flagged {
            continue;
        }
        let d = p
            .half_derivative
            .ok_or_else(|| Error::Precondition("half-derivatives are not filled".into()))?;
        f[i] = p.curvature - 0.125 * lambda * d * d + g.value(p.position);
        num += f[i] * p.weight;
        den += p.weight;
    }
    let mult = num / den;
    for (i, p) in out.points.iter_mut().enumerate() {
        p.residual = if p.flagged { None } else { Some(f[i] - mult) };
    }
    out.multiplier = Some(mult);
    Ok(out)
}
