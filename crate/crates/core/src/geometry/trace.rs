use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{Region, Vec2};
use crate::error::{Error, Result};

/// Turning angles at or beyond this value are treated as cusps.
pub const CUSP_ANGLE: f64 = std::f64::consts::PI - 0.1;

/// Per-vertex boundary data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub position: Vec2,
    /// Outward unit normal (normal of the tangent bisector).
    pub normal: Vec2,
    /// Discrete curvature, positive where the region is locally convex.
    pub curvature: f64,
    /// Arclength weight: half the sum of the adjacent edge lengths.
    pub weight: f64,
    /// Signed turning angle, positive for left turns.
    pub turning: f64,
    /// Normal half-derivative of the capacitary potential.
    pub half_derivative: Option<f64>,
    /// Vertex excluded from boundary integrals.
    pub flagged: bool,
    /// Euler–Lagrange residual.
    pub residual: Option<f64>,
}

/// Boundary fields of a region, ring by ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTrace {
    pub points: Vec<TracePoint>,
    pub rings: Vec<Range<usize>>,
    /// Lagrange multiplier of the area constraint.
    pub multiplier: Option<f64>,
}

impl BoundaryTrace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }

    pub fn flagged_count(&self) -> usize {
        self.points.iter().filter(|p| p.flagged).count()
    }

    /// Mean adjacent-vertex spacing.
    pub fn mean_spacing(&self) -> f64 {
        self.total_weight() / self.points.len() as f64
    }

    /// Sum of turning angles for each ring.
    pub fn total_turning(&self) -> Vec<f64> {
        self.rings
            .iter()
            .map(|r| self.points[r.clone()].iter().map(|p| p.turning).sum())
            .collect()
    }

    pub fn max_abs_residual(&self) -> Option<f64> {
        self.points
            .iter()
            .filter(|p| !p.flagged)
            .map(|p| p.residual.map(f64::abs))
            .try_fold(0.0f64, |m, r| r.map(|r| m.max(r)))
    }

    /// Arclength-weighted L² norm of the residual over unflagged vertices.
    pub fn l2_residual(&self) -> Option<f64> {
        let mut s = 0.0;
        for p in self.points.iter().filter(|p| !p.flagged) {
            let r = p.residual?;
            s += r * r * p.weight;
        }
        Some(s.sqrt())
    }
}

/// Discrete normals, turning-angle curvature and arclength weights.
pub fn boundary_trace(region: &Region) -> Result<BoundaryTrace> {
    let mut points = Vec::with_capacity(region.vertex_count());
    let mut rings = Vec::with_capacity(region.ring_count());
    for (ring_idx, (_, _, ring)) in region.rings().enumerate() {
        let n = ring.len();
        if n < 3 {
            return Err(Error::InvalidRegion {
                location: format!("ring {ring_idx}"),
                reason: format!("degenerate ring with {n} vertices"),
            });
        }
        let start = points.len();
        for i in 0..n {
            let prev = ring[(i + n - 1) % n];
            let cur = ring[i];
            let next = ring[(i + 1) % n];
            let e1 = cur - prev;
            let e2 = next - cur;
            let l1 = e1.norm();
            let l2 = e2.norm();
            let t1 = e1 / l1;
            let t2 = e2 / l2;
            let theta = t1.cross(t2).atan2(t1.dot(t2));
            if theta.abs() >= CUSP_ANGLE {
                return Err(Error::IllConditionedBoundary {
                    ring: ring_idx,
                    vertex: i,
                    angle: theta,
                });
            }
            let mean_len = 0.5 * (l1 + l2);
            let bisector = (t1 + t2).normalized();
            points.push(TracePoint {
                position: cur,
                normal: bisector.right_normal(),
                curvature: 2.0 * (0.5 * theta).sin() / mean_len,
                weight: mean_len,
                turning: theta,
                half_derivative: None,
                flagged: false,
                residual: None,
            });
        }
        rings.push(start..points.len());
    }
    Ok(BoundaryTrace {
        points,
        rings,
        multiplier: None,
    })
}
