use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::integrals::{point_square, square_square, S0};
use super::CellMesh;
use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Default near-field cutoff in units of the local grid spacing.
pub const NEAR_CUTOFF: f64 = 3.0;
/// Width, in grid spacings, of the band below the cutoff over which the
/// exact cell integral is blended into the point kernel.
pub const BLEND_WIDTH: f64 = 1.0;

/// Weight of the exact integral at distance `dist` from a cell of grid
/// side `side`: 1 inside the band's inner edge, 0 at the cutoff.
#[inline]
fn near_weight(dist: f64, side: f64, cutoff: f64) -> f64 {
    let x = (cutoff - dist / side) / BLEND_WIDTH;
    if x >= 1.0 {
        1.0
    } else if x <= 0.0 {
        0.0
    } else {
        x * x * (3.0 - 2.0 * x)
    }
}

/// Dense symmetric matrix of mean inverse distances between cells.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    n: usize,
    data: Vec<f64>,
    pub near_cutoff: f64,
    pub h: f64,
    /// Number of entries evaluated with the closed-form near-field rule.
    pub near_pairs: usize,
}

impl KernelMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// y = K x, rows in parallel, each row summed in index order.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = dot(self.row(i), x);
        });
    }

    /// xᵀ K x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    /// Largest |K_ij − K_ji|.
    pub fn asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }

    /// Row-major dump: 8-byte magic `DRKERN01`, n as u64, h as f64, then
    /// n² f64 values, all little-endian.
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(b"DRKERN01")?;
        f.write_all(&(self.n as u64).to_le_bytes())?;
        f.write_all(&self.h.to_le_bytes())?;
        for v in &self.data {
            f.write_all(&v.to_le_bytes())?;
        }
        f.flush()?;
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators; the summation order is fixed
    let mut s = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        let i = 4 * k;
        s[0] += a[i] * b[i];
        s[1] += a[i + 1] * b[i + 1];
        s[2] += a[i + 2] * b[i + 2];
        s[3] += a[i + 3] * b[i + 3];
    }
    let mut t = (s[0] + s[1]) + (s[2] + s[3]);
    for i in 4 * chunks..a.len() {
        t += a[i] * b[i];
    }
    t
}

/// Kernel entry between two cells given the displacement of j from i.
#[inline]
fn entry(d: Vec2, si: f64, sj: f64, ai: f64, aj: f64, cutoff: f64) -> f64 {
    let dist = d.norm();
    let w = near_weight(dist, si.max(sj), cutoff);
    if w == 0.0 {
        1.0 / dist
    } else if w == 1.0 {
        square_square(d, ai.sqrt(), aj.sqrt())
    } else {
        w * square_square(d, ai.sqrt(), aj.sqrt()) + (1.0 - w) / dist
    }
}

/// Assembles K over all cell pairs: 1/|c_i − c_j| beyond `cutoff` grid
/// spacings, closed-form square-square integrals closer than
/// `cutoff − 1`, a smooth blend of the two in between, and s₀/√A on the
/// diagonal. Cells are modelled as squares of their own area centered
/// at their centroids.
pub fn assemble_kernel_with_cutoff(mesh: &CellMesh, cutoff: f64) -> Result<KernelMatrix> {
    let n = mesh.len();
    let cells = &mesh.cells;
    let mut data = vec![0.0; n * n];
    let near: usize = data
        .par_chunks_mut(n)
        .enumerate()
        .map(|(i, row)| -> Result<usize> {
            let ci = cells[i];
            row[i] = S0 / ci.area.sqrt();
            let mut near = 0;
            for j in i + 1..n {
                let cj = cells[j];
                let d = cj.center - ci.center;
                if d.x == 0.0 && d.y == 0.0 {
                    return Err(Error::Assembly(format!(
                        "cells {i} and {j} share the center {:?}",
                        mesh.center(i)
                    )));
                }
                let v = entry(d, ci.side, cj.side, ci.area, cj.area, cutoff);
                if d.norm() < cutoff * ci.side.max(cj.side) {
                    near += 1;
                }
                row[j] = v;
            }
            Ok(near)
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum();
    for i in 0..n {
        for j in 0..i {
            data[i * n + j] = data[j * n + i];
        }
    }
    Ok(KernelMatrix {
        n,
        data,
        near_cutoff: cutoff,
        h: mesh.h,
        near_pairs: 2 * near,
    })
}

pub fn assemble_kernel(mesh: &CellMesh) -> Result<KernelMatrix> {
    assemble_kernel_with_cutoff(mesh, NEAR_CUTOFF)
}

/// Mean inverse distance from `x` to each cell's square, or the point
/// kernel beyond the near-field cutoff.
#[inline]
fn cell_potential(mesh: &CellMesh, i: usize, x: Vec2) -> f64 {
    let c = mesh.cells[i];
    let d = x - mesh.center(i);
    let dist = d.norm();
    let w = near_weight(dist, c.side, NEAR_CUTOFF);
    if w == 0.0 {
        1.0 / dist
    } else if w == 1.0 {
        point_square(d, c.area.sqrt())
    } else {
        w * point_square(d, c.area.sqrt()) + (1.0 - w) / dist
    }
}

/// Potential Σ mᵢ · (mean inverse distance from cell i to x).
pub fn potential_at(mesh: &CellMesh, masses: &[f64], x: Vec2) -> f64 {
    let mut s = 0.0;
    for (i, &m) in masses.iter().enumerate() {
        if m != 0.0 {
            s += m * cell_potential(mesh, i, x);
        }
    }
    s
}

/// Potential at many points, in parallel over points.
pub fn potential_many(mesh: &CellMesh, masses: &[f64], xs: &[Vec2]) -> Vec<f64> {
    xs.par_iter().map(|&x| potential_at(mesh, masses, x)).collect()
}
