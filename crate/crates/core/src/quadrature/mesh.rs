use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ring, Component, Region, Vec2};

/// Pieces smaller than this fraction of their grid square are dropped.
const MIN_FRACTION: f64 = 1e-4;
/// Relative area deficit below which a clipped square counts as full.
const FULL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Centroid of the cell relative to the mesh origin.
    pub center: Vec2,
    pub area: f64,
    /// Side of the grid square the cell was cut from.
    pub side: f64,
    /// The grid square was cut by the boundary.
    pub boundary: bool,
    pub component: usize,
}

impl Cell {
    /// Side of the square with the same area, used as the cell's shape in
    /// near-field integrals.
    pub fn equivalent_side(&self) -> f64 {
        self.area.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshConfig {
    pub h: f64,
    /// Split boundary squares once into four.
    pub refine_boundary: bool,
    pub min_cells: usize,
}

impl MeshConfig {
    pub fn new(h: f64) -> Self {
        MeshConfig {
            h,
            refine_boundary: false,
            min_cells: 50,
        }
    }

    pub fn refined(mut self, on: bool) -> Self {
        self.refine_boundary = on;
        self
    }
}

/// Quadrature cells covering a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMesh {
    pub origin: Vec2,
    pub cells: Vec<Cell>,
    /// Largest grid spacing used.
    pub h: f64,
    pub region: Region,
}

impl CellMesh {
    /// Builds a mesh directly from cells with centers in absolute
    /// coordinates. No coverage checks are made.
    pub fn from_cells(cells: Vec<Cell>, h: f64, region: Region) -> Self {
        CellMesh {
            origin: Vec2::ZERO,
            cells,
            h,
            region,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn center(&self, i: usize) -> Vec2 {
        self.origin + self.cells[i].center
    }

    pub fn centers(&self) -> Vec<Vec2> {
        (0..self.len()).map(|i| self.center(i)).collect()
    }

    pub fn areas(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.area).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }

    pub fn boundary_count(&self) -> usize {
        self.cells.iter().filter(|c| c.boundary).count()
    }

    /// Same cells, moved rigidly; kernels assembled on the result are
    /// bitwise identical.
    pub fn translated(&self, d: Vec2) -> CellMesh {
        CellMesh {
            origin: self.origin + d,
            cells: self.cells.clone(),
            h: self.h,
            region: self.region.translated(d),
        }
    }

    /// Homothety about the mesh origin.
    pub fn scaled(&self, s: f64) -> CellMesh {
        CellMesh {
            origin: self.origin,
            cells: self
                .cells
                .iter()
                .map(|c| Cell {
                    center: c.center * s,
                    area: c.area * s * s,
                    side: c.side * s,
                    ..*c
                })
                .collect(),
            h: self.h * s,
            region: self.region.scaled_about(self.origin, s),
        }
    }

    /// Pushes cells forward by a map: centers go to `phi(center)`, areas
    /// are multiplied by the Jacobian determinant at the center.
    pub fn transported(&self, region: Region, phi: impl Fn(Vec2) -> Vec2, jacobian: impl Fn(Vec2) -> f64) -> CellMesh {
        CellMesh {
            origin: Vec2::ZERO,
            cells: (0..self.len())
                .map(|i| {
                    let c = self.center(i);
                    let j = jacobian(c);
                    Cell {
                        center: phi(c),
                        area: self.cells[i].area * j,
                        side: self.cells[i].side * j.sqrt(),
                        ..self.cells[i]
                    }
                })
                .collect(),
            h: self.h,
            region,
        }
    }
}

fn segment_touches_box(a: Vec2, b: Vec2, lo: Vec2, hi: Vec2) -> bool {
    // Liang–Barsky with closed box
    let d = b - a;
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [
        (-d.x, a.x - lo.x),
        (d.x, hi.x - a.x),
        (-d.y, a.y - lo.y),
        (d.y, hi.y - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    t0 <= t1
}

/// Area and centroid of component ∩ box.
fn clip_piece(comp: &Component, lo: Vec2, hi: Vec2) -> (f64, Vec2) {
    let mut a = 0.0;
    let mut m = Vec2::ZERO;
    for r in comp.rings() {
        let (ra, rm) = ring::area_moments(&ring::clip_to_box(r, lo, hi));
        a += ra;
        m += rm;
    }
    let c = if a > 0.0 { m / a } else { (lo + hi) * 0.5 };
    (a, c)
}

/// Cell for a clipped piece; the centroid is replaced by the nearest
/// inside subsample point when it falls outside the component.
fn make_cell(
    comp: &Component,
    ci: usize,
    lo: Vec2,
    side: f64,
    area: f64,
    centroid: Vec2,
    boundary: bool,
) -> Option<Cell> {
    let center = if comp.contains(centroid) {
        centroid
    } else {
        let mut best: Option<(f64, Vec2)> = None;
        for a in 0..4 {
            for b in 0..4 {
                let p = lo + Vec2::new((a as f64 + 0.5) * side / 4.0, (b as f64 + 0.5) * side / 4.0);
                if comp.contains(p) {
                    let d = p.distance(centroid);
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, p));
                    }
                }
            }
        }
        best?.1
    };
    Some(Cell {
        center,
        area,
        side,
        boundary,
        component: ci,
    })
}

fn mesh_component(comp: &Component, ci: usize, h: f64, refine: bool, out: &mut Vec<Cell>) {
    let (blo, bhi) = ring::bbox(&comp.outer);
    let i0 = (blo.x / h).floor() as i64;
    let i1 = (bhi.x / h).ceil() as i64;
    let j0 = (blo.y / h).floor() as i64;
    let j1 = (bhi.y / h).ceil() as i64;
    let ni = (i1 - i0) as usize;
    let nj = (j1 - j0) as usize;
    let mut touched = vec![false; ni * nj];
    let square = |i: i64, j: i64| {
        let lo = Vec2::new(i as f64 * h, j as f64 * h);
        (lo, Vec2::new((i + 1) as f64 * h, (j + 1) as f64 * h))
    };
    for r in comp.rings() {
        let n = r.len();
        for k in 0..n {
            let a = r[k];
            let b = r[(k + 1) % n];
            let ia = (((a.x.min(b.x)) / h).floor() as i64).max(i0);
            let ib = (((a.x.max(b.x)) / h).floor() as i64).min(i1 - 1);
            let ja = (((a.y.min(b.y)) / h).floor() as i64).max(j0);
            let jb = (((a.y.max(b.y)) / h).floor() as i64).min(j1 - 1);
            for i in (ia - 1).max(i0)..=(ib + 1).min(i1 - 1) {
                for j in (ja - 1).max(j0)..=(jb + 1).min(j1 - 1) {
                    let idx = (i - i0) as usize * nj + (j - j0) as usize;
                    if !touched[idx] {
                        let (lo, hi) = square(i, j);
                        if segment_touches_box(a, b, lo, hi) {
                            touched[idx] = true;
                        }
                    }
                }
            }
        }
    }
    let full = h * h;
    for i in i0..i1 {
        for j in j0..j1 {
            let (lo, hi) = square(i, j);
            let mid = (lo + hi) * 0.5;
            if !touched[(i - i0) as usize * nj + (j - j0) as usize] {
                if comp.contains(mid) {
                    out.push(Cell {
                        center: mid,
                        area: full,
                        side: h,
                        boundary: false,
                        component: ci,
                    });
                }
                continue;
            }
            let (a, c) = clip_piece(comp, lo, hi);
            if a >= full * (1.0 - FULL_TOL) {
                out.push(Cell {
                    center: mid,
                    area: full,
                    side: h,
                    boundary: false,
                    component: ci,
                });
                continue;
            }
            if a <= MIN_FRACTION * full {
                continue;
            }
            if refine {
                let s = 0.5 * h;
                for (di, dj) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
                    let slo = lo + Vec2::new(di * s, dj * s);
                    let shi = slo + Vec2::new(s, s);
                    let (sa, sc) = clip_piece(comp, slo, shi);
                    if sa <= MIN_FRACTION * s * s {
                        continue;
                    }
                    let sa = sa.min(s * s);
                    if let Some(cell) = make_cell(comp, ci, slo, s, sa, sc, true) {
                        out.push(cell);
                    }
                }
            } else if let Some(cell) = make_cell(comp, ci, lo, h, a, c, true) {
                out.push(cell);
            }
        }
    }
}

fn ring_gap(a: &[Vec2], b: &[Vec2]) -> f64 {
    let ab = a
        .iter()
        .map(|&p| ring::distance_to_ring(b, p))
        .fold(f64::INFINITY, f64::min);
    let ba = b
        .iter()
        .map(|&p| ring::distance_to_ring(a, p))
        .fold(f64::INFINITY, f64::min);
    ab.min(ba)
}

/// Smallest feature of a component: its diameter or the gap between any
/// two of its rings.
fn feature_size(comp: &Component) -> f64 {
    let o = &comp.outer;
    let mut d2: f64 = 0.0;
    for i in 0..o.len() {
        for j in i + 1..o.len() {
            d2 = d2.max((o[i] - o[j]).norm_squared());
        }
    }
    let mut f = d2.sqrt();
    let rings: Vec<&Vec<Vec2>> = comp.rings().collect();
    for i in 0..rings.len() {
        for j in i + 1..rings.len() {
            f = f.min(ring_gap(rings[i], rings[j]));
        }
    }
    f
}

/// Meshes each component with its own spacing `spacings[k]`.
pub fn build_mesh_with_spacings(region: &Region, spacings: &[f64], cfg: &MeshConfig) -> Result<CellMesh> {
    if spacings.len() != region.components.len() {
        return Err(Error::InvalidSpacing(format!(
            "{} spacings for {} components",
            spacings.len(),
            region.components.len()
        )));
    }
    let mut cells = Vec::new();
    for (ci, (comp, &h)) in region.components.iter().zip(spacings).enumerate() {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidSpacing(format!("spacing must be positive, got {h}")));
        }
        let f = feature_size(comp);
        if h >= f / 4.0 {
            return Err(Error::InvalidSpacing(format!(
                "spacing {h} is not below a quarter of the smallest feature ({f:.4}) of component {ci}"
            )));
        }
        mesh_component(comp, ci, h, cfg.refine_boundary, &mut cells);
    }
    if cells.len() < cfg.min_cells {
        return Err(Error::ResolutionTooCoarse {
            cells: cells.len(),
            min: cfg.min_cells,
        });
    }
    Ok(CellMesh {
        origin: Vec2::ZERO,
        cells,
        h: spacings.iter().copied().fold(0.0, f64::max),
        region: region.clone(),
    })
}

/// Axis-aligned grid of spacing `cfg.h` clipped exactly to the region.
pub fn build_mesh(region: &Region, cfg: &MeshConfig) -> Result<CellMesh> {
    build_mesh_with_spacings(region, &vec![cfg.h; region.components.len()], cfg)
}
