//! The charged-drop energy E_λ = P + λ I₁ + ∫g, its threshold λ_Ω and the
//! relaxed envelope.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::equilibrium::EquilibriumSolution;
use crate::error::{Error, Result};
use crate::geometry::{rescale_to_area, shapes, Region, Vec2};
use crate::quadrature::{build_mesh, CellMesh, MeshConfig};

/// Potential sampled on a regular grid and interpolated bilinearly.
/// Outside the grid the nearest boundary value is used. Coercivity is the
/// user's responsibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedPotential {
    pub lo: Vec2,
    pub hi: Vec2,
    pub nx: usize,
    pub ny: usize,
    /// Row-major values, `values[j * nx + i]` at grid node (i, j).
    pub values: Vec<f64>,
}

impl TabulatedPotential {
    pub fn new(lo: Vec2, hi: Vec2, nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if nx < 2 || ny < 2 || values.len() != nx * ny || !(hi.x > lo.x && hi.y > lo.y) {
            return Err(Error::InvalidParameter("malformed potential grid".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "grid potential must be finite and non-negative".into(),
            ));
        }
        Ok(TabulatedPotential { lo, hi, nx, ny, values })
    }

    fn steps(&self) -> (f64, f64) {
        (
            (self.hi.x - self.lo.x) / (self.nx - 1) as f64,
            (self.hi.y - self.lo.y) / (self.ny - 1) as f64,
        )
    }

    pub fn value(&self, p: Vec2) -> f64 {
        let (dx, dy) = self.steps();
        let fx = ((p.x - self.lo.x) / dx).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((p.y - self.lo.y) / dy).clamp(0.0, (self.ny - 1) as f64);
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let v = |a: usize, b: usize| self.values[b * self.nx + a];
        (1.0 - ty) * ((1.0 - tx) * v(i, j) + tx * v(i + 1, j)) + ty * ((1.0 - tx) * v(i, j + 1) + tx * v(i + 1, j + 1))
    }

    /// Global Lipschitz constant of the interpolant.
    pub fn lipschitz(&self) -> f64 {
        let (dx, dy) = self.steps();
        let mut l: f64 = 0.0;
        for j in 0..self.ny - 1 {
            for i in 0..self.nx - 1 {
                let v = |a: usize, b: usize| self.values[b * self.nx + a];
                let gx = ((v(i + 1, j) - v(i, j)).abs()).max((v(i + 1, j + 1) - v(i, j + 1)).abs()) / dx;
                let gy = ((v(i, j + 1) - v(i, j)).abs()).max((v(i + 1, j + 1) - v(i + 1, j)).abs()) / dy;
                l = l.max(gx.hypot(gy));
            }
        }
        l
    }
}

/// Confining potentials g.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Zero,
    /// a |x − x0|²
    Quadratic {
        a: f64,
        x0: Vec2,
    },
    /// a |x − x0|⁴
    Quartic {
        a: f64,
        x0: Vec2,
    },
    /// a min(|x − x1|², |x − x2|²)
    ShiftedDoubleWell {
        a: f64,
        x1: Vec2,
        x2: Vec2,
    },
    Tabulated(TabulatedPotential),
}

impl Potential {
    pub fn value(&self, p: Vec2) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Quadratic { a, x0 } => a * (p - *x0).norm_squared(),
            Potential::Quartic { a, x0 } => a * (p - *x0).norm_squared().powi(2),
            Potential::ShiftedDoubleWell { a, x1, x2 } => a * (p - *x1).norm_squared().min((p - *x2).norm_squared()),
            Potential::Tabulated(t) => t.value(p),
        }
    }

    /// Coercive members of the catalog. Tabulated potentials are accepted
    /// on the caller's word.
    pub fn is_coercive(&self) -> bool {
        match self {
            Potential::Zero => false,
            Potential::Quadratic { a, .. } | Potential::Quartic { a, .. } | Potential::ShiftedDoubleWell { a, .. } => {
                *a > 0.0
            }
            Potential::Tabulated(_) => true,
        }
    }

    /// Lipschitz bound of g on the disk B(center, radius).
    pub fn lipschitz_bound(&self, center: Vec2, radius: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Quadratic { a, x0 } => 2.0 * a * ((center - *x0).norm() + radius),
            Potential::Quartic { a, x0 } => 4.0 * a * ((center - *x0).norm() + radius).powi(3),
            Potential::ShiftedDoubleWell { a, x1, x2 } => {
                2.0 * a * ((center - *x1).norm().max((center - *x2).norm()) + radius)
            }
            Potential::Tabulated(t) => t.lipschitz(),
        }
    }

    /// Minimizers of g (empty when g is constant).
    pub fn argmin(&self) -> Vec<Vec2> {
        match self {
            Potential::Zero => Vec::new(),
            Potential::Quadratic { x0, .. } | Potential::Quartic { x0, .. } => vec![*x0],
            Potential::ShiftedDoubleWell { x1, x2, .. } => vec![*x1, *x2],
            Potential::Tabulated(t) => {
                let (dx, dy) = t.steps();
                let k = (0..t.values.len())
                    .min_by(|&a, &b| t.values[a].total_cmp(&t.values[b]))
                    .unwrap_or(0);
                vec![t.lo + Vec2::new((k % t.nx) as f64 * dx, (k / t.nx) as f64 * dy)]
            }
        }
    }

    /// Σ A_i g(c_i) over the cells of a mesh.
    pub fn integrate(&self, mesh: &CellMesh) -> f64 {
        if matches!(self, Potential::Zero) {
            return 0.0;
        }
        (0..mesh.len())
            .map(|i| mesh.cells[i].area * self.value(mesh.center(i)))
            .sum()
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Zero => write!(f, "zero"),
            Potential::Quadratic { a, x0 } => write!(f, "quadratic:{},{},{}", a, x0.x, x0.y),
            Potential::Quartic { a, x0 } => write!(f, "quartic:{},{},{}", a, x0.x, x0.y),
            Potential::ShiftedDoubleWell { a, x1, x2 } => {
                write!(f, "double-well:{},{},{},{},{}", a, x1.x, x1.y, x2.x, x2.y)
            }
            Potential::Tabulated(t) => write!(f, "grid:{}x{}", t.nx, t.ny),
        }
    }
}

impl FromStr for Potential {
    type Err = Error;

    /// `zero`, `quadratic:a,x0,y0`, `quartic:a,x0,y0`,
    /// `double-well:a,x1,y1,x2,y2`. Grid potentials are read from JSON.
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidParameter(format!("potential '{s}': {e}")))?
        };
        let want = |k: usize| {
            if nums.len() == k {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "potential '{name}' takes {k} numbers, got {}",
                    nums.len()
                )))
            }
        };
        match name.trim() {
            "zero" => {
                want(0)?;
                Ok(Potential::Zero)
            }
            "quadratic" => {
                want(3)?;
                Ok(Potential::Quadratic {
                    a: nums[0],
                    x0: Vec2::new(nums[1], nums[2]),
                })
            }
            "quartic" => {
                want(3)?;
                Ok(Potential::Quartic {
                    a: nums[0],
                    x0: Vec2::new(nums[1], nums[2]),
                })
            }
            "double-well" => {
                want(5)?;
                Ok(Potential::ShiftedDoubleWell {
                    a: nums[0],
                    x1: Vec2::new(nums[1], nums[2]),
                    x2: Vec2::new(nums[3], nums[4]),
                })
            }
            other => Err(Error::InvalidParameter(format!("unknown potential '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub area: f64,
    #[serde(rename = "P")]
    pub perimeter: f64,
    #[serde(rename = "I1")]
    pub i1: f64,
    pub g_integral: f64,
    pub lambda: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    pub lambda_omega: f64,
    #[serde(rename = "E_relaxed")]
    pub energy_relaxed: f64,
    pub lambda_c: f64,
    /// E − (∫g + 2π√λ).
    pub bound_gap: f64,
}

/// λ_c(m) = 4m/π.
pub fn lambda_c(m: f64) -> f64 {
    4.0 * m / PI
}

/// λ_Ω = (π / I₁)².
pub fn lambda_omega(i1: f64) -> f64 {
    (PI / i1).powi(2)
}

/// Report from the four ingredients.
pub fn report_from_parts(area: f64, perimeter: f64, i1: f64, g_integral: f64, lambda: f64) -> EnergyReport {
    let energy = perimeter + lambda * i1 + g_integral;
    let lo = lambda_omega(i1);
    let energy_relaxed = if lambda <= lo {
        energy
    } else {
        perimeter + lo * i1 + g_integral + TAU * (lambda.sqrt() - lo.sqrt())
    };
    EnergyReport {
        area,
        perimeter,
        i1,
        g_integral,
        lambda,
        energy,
        lambda_omega: lo,
        energy_relaxed,
        lambda_c: lambda_c(area),
        bound_gap: energy - (g_integral + TAU * lambda.sqrt()),
    }
}

/// E_λ and its relaxation for a region with a solved equilibrium.
pub fn evaluate(region: &Region, sol: &EquilibriumSolution, g: &Potential, lambda: f64) -> Result<EnergyReport> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    if sol.mesh.region != *region {
        return Err(Error::Consistency(
            "equilibrium was solved on a different region".into(),
        ));
    }
    Ok(report_from_parts(
        region.area(),
        region.perimeter(),
        sol.i1,
        g.integrate(&sol.mesh),
        lambda,
    ))
}

/// P + λ I₁ − 2π√λ.
pub fn universal_lower_bound_gap(report: &EnergyReport) -> f64 {
    report.perimeter + report.lambda * report.i1 - TAU * report.lambda.sqrt()
}

/// Closed-form ball report: P = 2√(πm), I₁ = π/(2r). ∫g is integrated on
/// a disk mesh with spacing r/40 unless g vanishes.
pub fn ball_energy(m: f64, lambda: f64, g: &Potential, center: Vec2) -> Result<EnergyReport> {
    if !(m > 0.0) {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {m}")));
    }
    let r = (m / PI).sqrt();
    let gi = if matches!(g, Potential::Zero) {
        0.0
    } else {
        let disk = rescale_to_area(&shapes::disk(center, r, 512), m, center)?;
        g.integrate(&build_mesh(&disk, &MeshConfig::new(r / 40.0))?)
    };
    Ok(report_from_parts(m, TAU * r, PI / (2.0 * r), gi, lambda))
}
