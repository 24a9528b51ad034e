//! Outer parallel sets Ω^δ = {x : dist(x, Ω) ≤ δ} of polygonal regions.

use std::f64::consts::PI;

use super::{ring, Component, Region, Vec2};
use crate::error::{Error, Result};

/// Largest angular step used when rounding convex corners.
const ARC_STEP: f64 = PI / 32.0;

/// Raw offset: arcs at convex corners, miter points elsewhere. May contain
/// swallowtail loops where concave features are swallowed.
fn raw_offset(r: &[Vec2], delta: f64) -> Result<Vec<(Vec2, bool)>> {
    let n = r.len();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let prev = r[(i + n - 1) % n];
        let cur = r[i];
        let next = r[(i + 1) % n];
        let t1 = (cur - prev).normalized();
        let t2 = (next - cur).normalized();
        let n1 = t1.right_normal();
        let n2 = t2.right_normal();
        let theta = t1.cross(t2).atan2(t1.dot(t2));
        if theta > ARC_STEP {
            let k = (theta / ARC_STEP).ceil() as usize;
            for j in 0..=k {
                out.push((cur + n1.rotated(theta * j as f64 / k as f64) * delta, true));
            }
        } else {
            let denom = 1.0 + n1.dot(n2);
            if denom < 1e-9 {
                return Err(Error::TopologyChange("cusp in ring".into()));
            }
            out.push((cur + (n1 + n2) * (delta / denom), true));
        }
    }
    Ok(out)
}

/// Proper crossing point of segments ab and cd.
fn crossing(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> Option<Vec2> {
    let r = b - a;
    let s = d - c;
    let den = r.cross(s);
    if den == 0.0 {
        return None;
    }
    let t = (c - a).cross(s) / den;
    let u = (c - a).cross(r) / den;
    if t > 0.0 && t < 1.0 && u > 0.0 && u < 1.0 {
        Some(a + r * t)
    } else {
        None
    }
}

/// Crossing of two non-adjacent edges enclosing the shortest loop.
fn shortest_loop_crossing(pts: &[(Vec2, bool)]) -> Option<(usize, usize, Vec2)> {
    let pts: Vec<Vec2> = pts.iter().map(|p| p.0).collect();
    let n = pts.len();
    let boxes: Vec<(Vec2, Vec2)> = (0..n)
        .map(|k| {
            let a = pts[k];
            let b = pts[(k + 1) % n];
            (
                Vec2::new(a.x.min(b.x), a.y.min(b.y)),
                Vec2::new(a.x.max(b.x), a.y.max(b.y)),
            )
        })
        .collect();
    let mut best: Option<(usize, usize, Vec2)> = None;
    let mut best_len = usize::MAX;
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (l1, h1) = boxes[i];
            let (l2, h2) = boxes[j];
            if l1.x > h2.x || l2.x > h1.x || l1.y > h2.y || l2.y > h1.y {
                continue;
            }
            if let Some(p) = crossing(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                let len = (j - i).min(n - (j - i));
                if len < best_len {
                    best_len = len;
                    best = Some((i, j, p));
                }
            }
        }
    }
    best
}

/// A loop is spurious when one of its generated vertices lies strictly
/// inside the δ-neighbourhood of the source ring. Crossing points sit on
/// chords and are not tested.
fn is_spurious(lp: &[(Vec2, bool)], src: &[Vec2], delta: f64) -> bool {
    lp.iter()
        .any(|&(p, exact)| exact && ring::distance_to_ring(src, p) < delta * (1.0 - 1e-6))
}

fn offset_ring(r: &[Vec2], delta: f64) -> Result<Vec<Vec2>> {
    let mut pts = raw_offset(r, delta)?;
    let scale = delta.max(ring::length(r) / r.len() as f64);
    loop {
        pts.dedup_by(|a, b| a.0.distance(b.0) <= 1e-12 * scale);
        while pts.len() > 1 && pts[0].0.distance(pts.last().unwrap().0) <= 1e-12 * scale {
            pts.pop();
        }
        if pts.len() < 3 {
            return Err(Error::TopologyChange(format!("ring vanishes at offset {delta}")));
        }
        let Some((i, j, p)) = shortest_loop_crossing(&pts) else {
            if is_spurious(&pts, r, delta) {
                return Err(Error::TopologyChange(format!("ring inverts at offset {delta}")));
            }
            return Ok(pts.into_iter().map(|p| p.0).collect());
        };
        let p = (p, false);
        let inner: Vec<(Vec2, bool)> = std::iter::once(p).chain(pts[i + 1..=j].iter().copied()).collect();
        let outer: Vec<(Vec2, bool)> = std::iter::once(p)
            .chain(pts[j + 1..].iter().copied())
            .chain(pts[..=i].iter().copied())
            .collect();
        pts = if is_spurious(&inner, r, delta) {
            outer
        } else if is_spurious(&outer, r, delta) {
            inner
        } else {
            return Err(Error::TopologyChange(format!("ring pinches off at offset {delta}")));
        };
    }
}

/// Outward offset of the outer rings and inward offset of the holes by
/// `delta`, with convex corners rounded and swallowed concave features
/// removed. Offsets that pinch a ring, close a hole or make components
/// touch are reported as [`Error::TopologyChange`].
pub fn dilate(region: &Region, delta: f64) -> Result<Region> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dilation must be non-negative, got {delta}"
        )));
    }
    if delta == 0.0 {
        return Ok(region.clone());
    }
    let mut comps = Vec::with_capacity(region.components.len());
    for c in &region.components {
        let outer = offset_ring(&c.outer, delta)?;
        let mut holes = Vec::with_capacity(c.holes.len());
        for h in &c.holes {
            let oh = offset_ring(h, delta).map_err(|_| Error::TopologyChange("hole closes".into()))?;
            if ring::signed_area(&oh) >= 0.0 {
                return Err(Error::TopologyChange("hole closes".into()));
            }
            holes.push(oh);
        }
        comps.push(Component::with_holes(outer, holes));
    }
    Region::new(comps).map_err(|e| Error::TopologyChange(e.to_string()))
}
