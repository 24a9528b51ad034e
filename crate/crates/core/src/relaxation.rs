//! Recovery sequences: a shrunken copy of a region plus n small satellite
//! disks that carry the charge above the threshold λ_Ω away to a ring of
//! radius R. Their energies approach the relaxed envelope.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::energy::{self, EnergyReport, Potential};
use crate::equilibrium::{solve_mesh, solve_region, EquilibriumSolution};
use crate::error::{Error, Result};
use crate::geometry::{rescale_to_area, shapes, Region, Vec2};
use crate::quadrature::{build_mesh_with_spacings, MeshConfig};

/// Golden angle in radians.
const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationConfig {
    /// Mesh spacing of the base region.
    pub mesh: MeshConfig,
    pub potential: Potential,
    /// Polygon vertices per satellite disk.
    pub satellite_vertices: usize,
    /// Target number of cells per satellite; the satellite spacing is
    /// chosen from it and refined until at least 50 cells land.
    pub satellite_cells: usize,
}

impl RelaxationConfig {
    pub fn new(h: f64) -> Self {
        RelaxationConfig {
            mesh: MeshConfig::new(h).refined(true),
            potential: Potential::Zero,
            satellite_vertices: 64,
            satellite_cells: 64,
        }
    }
}

/// Charge radius r = (√λ − √λ_Ω)/2.
pub fn charge_radius(lambda: f64, lambda_omega: f64) -> f64 {
    0.5 * (lambda.sqrt() - lambda_omega.sqrt())
}

/// Shrink factor ρ_n = √(1 − πr²/(mn)).
pub fn shrink_factor(r: f64, m: f64, n: usize) -> Result<f64> {
    let q = 1.0 - PI * r * r / (m * n as f64);
    if !(q > 0.0) {
        return Err(Error::Placement(format!(
            "{n} satellites of total area {:.4} do not fit in mass {m}",
            PI * r * r / n as f64
        )));
    }
    Ok(q.sqrt())
}

/// n points on a golden-angle spiral filling the annulus B_{2R}∖B_R with
/// uniform area density.
pub fn spiral_points(n: usize, big_r: f64) -> Vec<Vec2> {
    (0..n)
        .map(|k| {
            let rad = big_r * (1.0 + 3.0 * (k as f64 + 0.5) / n as f64).sqrt();
            let a = GOLDEN_ANGLE * k as f64;
            Vec2::new(rad * a.cos(), rad * a.sin())
        })
        .collect()
}

fn min_pair_distance(p: &[Vec2]) -> f64 {
    let mut d = f64::INFINITY;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            d = d.min((p[i] - p[j]).norm());
        }
    }
    d
}

/// Σ_{i≠j} 1/|p_i − p_j|.
fn inverse_distance_sum(p: &[Vec2]) -> f64 {
    let mut s = 0.0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            s += 2.0 / (p[i] - p[j]).norm();
        }
    }
    s
}

/// The satellite disks alone: n polygonal disks of exact area π(r/n)²
/// centered on the spiral.
pub fn satellites(r: f64, n: usize, big_r: f64, vertices: usize) -> Result<Region> {
    if n == 0 {
        return Err(Error::InvalidParameter("satellite count must be positive".into()));
    }
    let rs = r / n as f64;
    let pts = spiral_points(n, big_r);
    let spacing = big_r / (n as f64).sqrt();
    if n > 1 {
        let d = min_pair_distance(&pts);
        if d < spacing {
            return Err(Error::Placement(format!(
                "spiral spacing {d:.4} is below R/√n = {spacing:.4} for n = {n}, R = {big_r}"
            )));
        }
    }
    if 2.0 * rs >= spacing {
        return Err(Error::Placement(format!(
            "satellites of radius {rs:.4} overlap at spacing {spacing:.4}"
        )));
    }
    let mut comps = Vec::with_capacity(n);
    for &c in &pts {
        let disk = rescale_to_area(&shapes::disk(c, rs, vertices), PI * rs * rs, c)?;
        comps.extend(disk.components);
    }
    Region::new(comps)
}

/// Ω_n = ρ_nΩ ∪ ⋃ B_{r/n}(x_i) with the x_i on a spiral in B_{2R}∖B_R.
/// `lambda_omega` is the threshold of the base region.
pub fn build_recovery_step_with(
    region: &Region,
    lambda: f64,
    lambda_omega: f64,
    n: usize,
    big_r: f64,
    vertices: usize,
) -> Result<Region> {
    if !(lambda > lambda_omega) {
        return Err(Error::NothingToRelax { lambda, lambda_omega });
    }
    if !(big_r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "placement radius must be positive, got {big_r}"
        )));
    }
    let reach = region
        .rings()
        .flat_map(|(_, _, r)| r.iter())
        .map(|p| p.norm())
        .fold(0.0, f64::max);
    if reach > 0.5 * big_r {
        return Err(Error::Precondition(format!(
            "region reaches radius {reach:.4}, outside B_(R/2) for R = {big_r}"
        )));
    }
    let m = region.area();
    let r = charge_radius(lambda, lambda_omega);
    let rho = shrink_factor(r, m, n)?;
    let base = region.scaled_about(Vec2::ZERO, rho);
    let sats = satellites(r, n, big_r, vertices)?;
    base.union_disjoint(&sats)
}

/// Recovery step for a region whose equilibrium is solved on `mesh`.
pub fn build_recovery_step(region: &Region, lambda: f64, n: usize, big_r: f64, mesh: &MeshConfig) -> Result<Region> {
    let sol = solve_region(region, mesh)?;
    build_recovery_step_with(region, lambda, energy::lambda_omega(sol.i1), n, big_r, 64)
}

/// Spacing giving about `target` cells in a disk of radius `rs`.
fn satellite_spacing(rs: f64, target: usize) -> f64 {
    rs * (PI / target as f64).sqrt()
}

/// Solves the equilibrium of a recovery region: the base components keep
/// the configured spacing, satellites get their own spacing, halved until
/// each carries at least 50 cells.
pub fn solve_recovery(
    omega_n: &Region,
    base_components: usize,
    satellite_radius: f64,
    cfg: &RelaxationConfig,
) -> Result<(EquilibriumSolution, usize)> {
    let total = omega_n.components.len();
    let mut hs = satellite_spacing(satellite_radius, cfg.satellite_cells);
    for _ in 0..4 {
        let spacings: Vec<f64> = (0..total)
            .map(|k| if k < base_components { cfg.mesh.h } else { hs })
            .collect();
        let mesh = build_mesh_with_spacings(omega_n, &spacings, &cfg.mesh)?;
        let mut counts = vec![0usize; total];
        for c in &mesh.cells {
            counts[c.component] += 1;
        }
        let fewest = counts[base_components..].iter().copied().min().unwrap_or(usize::MAX);
        if fewest >= 50 {
            return Ok((solve_mesh(&mesh)?, fewest));
        }
        hs *= 0.5;
    }
    Err(Error::ResolutionTooCoarse { cells: 0, min: 50 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub n: usize,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub rho_n: f64,
    /// E_λ(Ω_n), absent when the row failed.
    pub energy: Option<f64>,
    pub target: f64,
    pub relative_gap: Option<f64>,
    /// 2λ/R + C(√λ − √λ_Ω)²/R with C = 2 Σ_{i≠j} 1/|p_i − p_j| / n² on
    /// the unit spiral.
    pub bound: f64,
    pub area: Option<f64>,
    pub cells: Option<usize>,
    pub min_satellite_cells: Option<usize>,
    pub error: Option<String>,
}

/// Energy of the satellites alone, n P(B_{r/n}) + (√λ − √λ_Ω)² I₁(⋃B),
/// against the equipartition value 2π(√λ − √λ_Ω).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquipartitionCheck {
    pub n: usize,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub perimeter: f64,
    pub i1: f64,
    pub energy: f64,
    pub target: f64,
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverySequenceReport {
    pub lambda: f64,
    pub lambda_omega: f64,
    pub r: f64,
    pub base: EnergyReport,
    /// Relaxed energy of the base region.
    pub target: f64,
    pub rows: Vec<RecoveryRow>,
    pub equipartition: Option<EquipartitionCheck>,
}

impl RecoverySequenceReport {
    /// Row with the largest (n, R) that solved.
    pub fn final_row(&self) -> Option<&RecoveryRow> {
        self.rows.iter().filter(|r| r.energy.is_some()).max_by(|a, b| {
            (a.n, a.big_r)
                .partial_cmp(&(b.n, b.big_r))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    }

    /// Largest undershoot (Ē − E)/Ē over solved rows, 0 if none.
    pub fn worst_undershoot(&self) -> f64 {
        self.rows
            .iter()
            .filter_map(|r| r.relative_gap)
            .fold(0.0, |w, g| w.max(-g))
    }

    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        use std::io::Write;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            f,
            "n,R,rho_n,energy,target,relative_gap,bound,area,cells,min_satellite_cells,error"
        )?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                f,
                "{},{},{:.12e},{},{:.12e},{},{:.12e},{},{},{},{}",
                r.n,
                r.big_r,
                r.rho_n,
                opt(r.energy),
                r.target,
                opt(r.relative_gap),
                r.bound,
                opt(r.area),
                r.cells.map(|c| c.to_string()).unwrap_or_default(),
                r.min_satellite_cells.map(|c| c.to_string()).unwrap_or_default(),
                r.error.as_deref().unwrap_or("").replace(',', ";"),
            )?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Energies of Ω_n over every (n, R) pair, sorted by (n, R). Row failures
/// are recorded in the row. Below the threshold the report has a single
/// row holding the base energy.
pub fn run_convergence_study(
    region: &Region,
    lambda: f64,
    n_list: &[usize],
    r_list: &[f64],
    cfg: &RelaxationConfig,
) -> Result<RecoverySequenceReport> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    let sol = solve_region(region, &cfg.mesh)?;
    let base = energy::evaluate(region, &sol, &cfg.potential, lambda)?;
    let lo = base.lambda_omega;
    let target = base.energy_relaxed;
    if lambda <= lo {
        return Ok(RecoverySequenceReport {
            lambda,
            lambda_omega: lo,
            r: 0.0,
            target,
            rows: vec![RecoveryRow {
                n: 0,
                big_r: 0.0,
                rho_n: 1.0,
                energy: Some(base.energy),
                target,
                relative_gap: Some((base.energy - target) / target),
                bound: 0.0,
                area: Some(base.area),
                cells: Some(sol.mesh.len()),
                min_satellite_cells: None,
                error: None,
            }],
            base,
            equipartition: None,
        });
    }
    let r = charge_radius(lambda, lo);
    let excess = (lambda.sqrt() - lo.sqrt()).powi(2);
    let mut pairs: Vec<(usize, f64)> = n_list
        .iter()
        .flat_map(|&n| r_list.iter().map(move |&rr| (n, rr)))
        .collect();
    pairs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut rows = Vec::with_capacity(pairs.len());
    for &(n, big_r) in &pairs {
        let c = if n > 1 {
            2.0 * inverse_distance_sum(&spiral_points(n, 1.0)) / (n * n) as f64
        } else {
            0.0
        };
        let bound = (2.0 * lambda + c * excess) / big_r;
        let rho = shrink_factor(r, base.area, n).unwrap_or(f64::NAN);
        let mut row = RecoveryRow {
            n,
            big_r,
            rho_n: rho,
            energy: None,
            target,
            relative_gap: None,
            bound,
            area: None,
            cells: None,
            min_satellite_cells: None,
            error: None,
        };
        let res = build_recovery_step_with(region, lambda, lo, n, big_r, cfg.satellite_vertices).and_then(|omega| {
            let (s, fewest) = solve_recovery(&omega, region.components.len(), r / n as f64, cfg)?;
            let rep = energy::evaluate(&omega, &s, &cfg.potential, lambda)?;
            Ok((rep, s.mesh.len(), fewest))
        });
        match res {
            Ok((rep, cells, fewest)) => {
                row.energy = Some(rep.energy);
                row.relative_gap = Some((rep.energy - target) / target);
                row.area = Some(rep.area);
                row.cells = Some(cells);
                row.min_satellite_cells = Some(fewest);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        rows.push(row);
    }
    let equipartition = pairs
        .last()
        .map(|&(n, big_r)| equipartition_check(r, lo, lambda, n, big_r, cfg))
        .transpose()?;
    Ok(RecoverySequenceReport {
        lambda,
        lambda_omega: lo,
        r,
        base,
        target,
        rows,
        equipartition,
    })
}

/// Solves the satellite system alone and compares its energy with
/// 2π(√λ − √λ_Ω).
pub fn equipartition_check(
    r: f64,
    lambda_omega: f64,
    lambda: f64,
    n: usize,
    big_r: f64,
    cfg: &RelaxationConfig,
) -> Result<EquipartitionCheck> {
    let sats = satellites(r, n, big_r, cfg.satellite_vertices)?;
    let (sol, _) = solve_recovery(&sats, 0, r / n as f64, cfg)?;
    let excess = lambda.sqrt() - lambda_omega.sqrt();
    let perimeter = sats.perimeter();
    let energy = perimeter + excess * excess * sol.i1;
    let target = TAU * excess;
    Ok(EquipartitionCheck {
        n,
        big_r,
        perimeter,
        i1: sol.i1,
        energy,
        target,
        relative: (energy - target) / target,
    })
}
