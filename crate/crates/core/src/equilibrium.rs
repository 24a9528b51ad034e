//! Equilibrium measures, capacitary energy I₁ and the ½-capacity.

use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Region, Vec2};
use crate::quadrature::{self, assemble_kernel, build_mesh, dot, CellMesh, KernelMatrix, MeshConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stationarity tolerance on the potential, relative to I₁.
    pub tol: f64,
    pub max_rounds: usize,
    /// Relative residual at which conjugate gradients stop.
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub pg_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-6,
            max_rounds: 50,
            cg_tol: 1e-11,
            cg_max_iter: 2000,
            pg_max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    ActiveSet,
    ProjectedGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    pub masses: Vec<f64>,
    pub i1: f64,
    pub cap1: f64,
    /// Stationarity residual relative to I₁.
    pub residual: f64,
    pub method: SolverMethod,
    pub rounds: usize,
    pub cg_iterations: usize,
    pub mesh: CellMesh,
}

/// Summary written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    #[serde(rename = "I1")]
    pub i1: f64,
    pub cap1: f64,
    pub residual: f64,
    pub n_cells: usize,
    pub h: f64,
}

impl EquilibriumSolution {
    pub fn report(&self) -> EquilibriumReport {
        EquilibriumReport {
            i1: self.i1,
            cap1: self.cap1,
            residual: self.residual,
            n_cells: self.mesh.len(),
            h: self.mesh.h,
        }
    }

    /// Per-cell CSV with header `x,y,area,mass`.
    pub fn write_mass_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "x,y,area,mass")?;
        for (i, m) in self.masses.iter().enumerate() {
            let c = self.mesh.center(i);
            writeln!(
                f,
                "{:.17e},{:.17e},{:.17e},{:.17e}",
                c.x, c.y, self.mesh.cells[i].area, m
            )?;
        }
        f.flush()?;
        Ok(())
    }

    /// Mass per unit area on each cell.
    pub fn densities(&self) -> Vec<f64> {
        self.masses
            .iter()
            .zip(&self.mesh.cells)
            .map(|(m, c)| m / c.area)
            .collect()
    }
}

/// Preconditioned conjugate gradients for K_SS x = 1 on the support S.
fn pcg_on_support(k: &KernelMatrix, support: &[bool], cfg: &SolverConfig) -> (Vec<f64>, usize) {
    let n = k.n();
    let diag = k.diagonal();
    let mask = |v: &mut [f64]| {
        for (vi, &s) in v.iter_mut().zip(support) {
            if !s {
                *vi = 0.0;
            }
        }
    };
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = support.iter().map(|&s| if s { 1.0 } else { 0.0 }).collect();
    let bnorm = dot(&r, &r).sqrt();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut it = 0;
    while it < cfg.cg_max_iter {
        k.mul_vec_into(&p, &mut ap);
        mask(&mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        it += 1;
        if dot(&r, &r).sqrt() <= cfg.cg_tol * bnorm {
            break;
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (x, it)
}

/// Stationarity residual of masses `m` with potential `u = K m` and
/// energy `i1`: spread of u on the support and undershoot off it.
fn stationarity(m: &[f64], u: &[f64], i1: f64) -> f64 {
    let mut r: f64 = 0.0;
    for (mi, ui) in m.iter().zip(u) {
        if *mi > 0.0 {
            r = r.max((ui - i1).abs());
        } else {
            r = r.max(i1 - ui);
        }
    }
    r / i1
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in s.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Projected gradient on the simplex with Barzilai–Borwein steps and an
/// Armijo backtracking safeguard.
fn projected_gradient(k: &KernelMatrix, start: &[f64], cfg: &SolverConfig) -> (Vec<f64>, f64, f64, usize) {
    let mut m = project_to_simplex(start);
    let mut u = k.mul_vec(&m);
    let mut f = dot(&m, &u);
    let mut step = 1.0 / k.diagonal().iter().copied().fold(0.0, f64::max);
    let mut best = (m.clone(), f, stationarity(&m, &u, f));
    for it in 0..cfg.pg_max_iter {
        let res = stationarity(&m, &u, f);
        if res < best.2 {
            best = (m.clone(), f, res);
        }
        if res <= cfg.tol {
            return (m, f, res, it);
        }
        let mut t = step;
        loop {
            let trial: Vec<f64> = m.iter().zip(&u).map(|(mi, ui)| mi - t * 2.0 * ui).collect();
            let mn = project_to_simplex(&trial);
            let un = k.mul_vec(&mn);
            let fnew = dot(&mn, &un);
            let d: Vec<f64> = mn.iter().zip(&m).map(|(a, b)| a - b).collect();
            let decrease = 2.0 * dot(&u, &d);
            if fnew <= f + 1e-4 * decrease || t < 1e-300 {
                // Barzilai–Borwein estimate for the next trial step
                let du: Vec<f64> = un.iter().zip(&u).map(|(a, b)| a - b).collect();
                let sy = 2.0 * dot(&d, &du);
                step = if sy > 0.0 { dot(&d, &d) / sy } else { 2.0 * t };
                m = mn;
                u = un;
                f = fnew;
                break;
            }
            t *= 0.5;
        }
    }
    let (m, f, r) = best;
    (m, f, r, cfg.pg_max_iter)
}

/// Minimizes mᵀKm over the probability simplex.
pub fn solve_equilibrium_with(mesh: &CellMesh, k: &KernelMatrix, cfg: &SolverConfig) -> Result<EquilibriumSolution> {
    let n = mesh.len();
    if k.n() != n {
        return Err(Error::Consistency(format!("kernel has {} rows for {} cells", k.n(), n)));
    }
    let mut support = vec![true; n];
    let mut cg_total = 0;
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for round in 1..=cfg.max_rounds {
        let (x, it) = pcg_on_support(k, &support, cfg);
        cg_total += it;
        let negative: Vec<usize> = (0..n).filter(|&i| support[i] && x[i] < 0.0).collect();
        if !negative.is_empty() {
            for i in negative {
                support[i] = false;
            }
            continue;
        }
        let total: f64 = x.iter().sum();
        let m: Vec<f64> = x.iter().map(|xi| xi / total).collect();
        let u = k.mul_vec(&m);
        let i1 = dot(&m, &u);
        let res = stationarity(&m, &u, i1);
        if best.as_ref().is_none_or(|b| res < b.2) {
            best = Some((m.clone(), i1, res));
        }
        if res <= cfg.tol {
            return Ok(EquilibriumSolution {
                cap1: TAU / i1,
                masses: m,
                i1,
                residual: res,
                method: SolverMethod::ActiveSet,
                rounds: round,
                cg_iterations: cg_total,
                mesh: mesh.clone(),
            });
        }
        // release the cells whose potential falls below the level
        let mut added = false;
        for i in 0..n {
            if !support[i] && u[i] < i1 * (1.0 - cfg.tol) {
                support[i] = true;
                added = true;
            }
        }
        if !added {
            break;
        }
    }
    let start = best
        .as_ref()
        .map(|b| b.0.clone())
        .unwrap_or_else(|| mesh.cells.iter().map(|c| c.area).collect());
    let (m, i1, res, iters) = projected_gradient(k, &start, cfg);
    if res <= cfg.tol {
        Ok(EquilibriumSolution {
            cap1: TAU / i1,
            masses: m,
            i1,
            residual: res,
            method: SolverMethod::ProjectedGradient,
            rounds: cfg.max_rounds,
            cg_iterations: cg_total + iters,
            mesh: mesh.clone(),
        })
    } else {
        Err(Error::SolverFailure {
            residual: res,
            iterations: cg_total + iters,
            best_masses: m,
        })
    }
}

pub fn solve_equilibrium(mesh: &CellMesh, k: &KernelMatrix) -> Result<EquilibriumSolution> {
    solve_equilibrium_with(mesh, k, &SolverConfig::default())
}

/// Mesh, kernel and solve in one call.
pub fn solve_region(region: &Region, mesh_cfg: &MeshConfig) -> Result<EquilibriumSolution> {
    let mesh = build_mesh(region, mesh_cfg)?;
    solve_mesh(&mesh)
}

pub fn solve_mesh(mesh: &CellMesh) -> Result<EquilibriumSolution> {
    let k = assemble_kernel(mesh)?;
    solve_equilibrium(mesh, &k)
}

/// ½-capacity 2π / I₁.
pub fn capacity(sol: &EquilibriumSolution) -> f64 {
    TAU / sol.i1
}

/// Capacitary potential v at each point.
pub fn potential_field(sol: &EquilibriumSolution, points: &[Vec2]) -> Vec<f64> {
    quadrature::potential_many(&sol.mesh, &sol.masses, points)
}

/// Normalized potential u = v / I₁.
pub fn normalized_potential_field(sol: &EquilibriumSolution, points: &[Vec2]) -> Vec<f64> {
    potential_field(sol, points).into_iter().map(|v| v / sol.i1).collect()
}

/// Extrapolation of values at spacings h and h/2 assuming error ∝ h^p.
pub fn richardson(at_h: f64, at_half: f64, p: f64) -> f64 {
    let f = 2f64.powf(p);
    (f * at_half - at_h) / (f - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolatedEnergy {
    pub h: f64,
    pub i1_h: f64,
    pub i1_half: f64,
    pub exponent: f64,
    pub i1: f64,
    pub cells_h: usize,
    pub cells_half: usize,
}

/// I₁ at h and h/2 combined by Richardson extrapolation with exponent ½.
pub fn extrapolated_energy(region: &Region, cfg: &MeshConfig) -> Result<ExtrapolatedEnergy> {
    let coarse = solve_region(region, cfg)?;
    let (i1_h, cells_h) = (coarse.i1, coarse.mesh.len());
    drop(coarse);
    let fine_cfg = MeshConfig { h: cfg.h / 2.0, ..*cfg };
    let fine = solve_region(region, &fine_cfg)?;
    Ok(ExtrapolatedEnergy {
        h: cfg.h,
        i1_h,
        i1_half: fine.i1,
        exponent: 0.5,
        i1: richardson(i1_h, fine.i1, 0.5),
        cells_h,
        cells_half: fine.mesh.len(),
    })
}
