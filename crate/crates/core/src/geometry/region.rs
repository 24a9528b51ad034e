use serde::{Deserialize, Serialize};

use super::{ring, Vec2};
use crate::error::{Error, Result};

/// One connected piece: a counterclockwise outer ring and clockwise holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub outer: Vec<Vec2>,
    #[serde(default)]
    pub holes: Vec<Vec<Vec2>>,
}

impl Component {
    pub fn new(outer: Vec<Vec2>) -> Self {
        Component {
            outer,
            holes: Vec::new(),
        }
    }

    pub fn with_holes(outer: Vec<Vec2>, holes: Vec<Vec<Vec2>>) -> Self {
        Component { outer, holes }
    }

    pub fn area(&self) -> f64 {
        ring::signed_area(&self.outer) + self.holes.iter().map(|h| ring::signed_area(h)).sum::<f64>()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        ring::contains(&self.outer, p) && !self.holes.iter().any(|h| ring::contains(h, p))
    }

    pub fn rings(&self) -> impl Iterator<Item = &Vec<Vec2>> {
        std::iter::once(&self.outer).chain(self.holes.iter())
    }
}

/// Which ring of which component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingKind {
    Outer,
    Hole(usize),
}

/// A planar set made of disjoint polygonal components with holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub components: Vec<Component>,
}

pub(crate) fn ring_label(component: usize, kind: RingKind, global: usize) -> String {
    match kind {
        RingKind::Outer => format!("ring {global} (component {component}, outer)"),
        RingKind::Hole(k) => format!("ring {global} (component {component}, hole {k})"),
    }
}

impl Region {
    /// Builds and validates a region.
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let r = Region { components };
        r.validate()?;
        Ok(r)
    }

    /// Single simply connected component; the ring is reoriented to be
    /// counterclockwise if needed.
    pub fn from_ring(mut outer: Vec<Vec2>) -> Result<Self> {
        if ring::signed_area(&outer) < 0.0 {
            outer.reverse();
        }
        Region::new(vec![Component::new(outer)])
    }

    pub(crate) fn from_components_unchecked(components: Vec<Component>) -> Self {
        Region { components }
    }

    /// Iterates all rings as (component index, kind, ring).
    pub fn rings(&self) -> impl Iterator<Item = (usize, RingKind, &Vec<Vec2>)> {
        self.components.iter().enumerate().flat_map(|(c, comp)| {
            std::iter::once((c, RingKind::Outer, &comp.outer)).chain(
                comp.holes
                    .iter()
                    .enumerate()
                    .map(move |(k, h)| (c, RingKind::Hole(k), h)),
            )
        })
    }

    pub fn ring_count(&self) -> usize {
        self.components.iter().map(|c| 1 + c.holes.len()).sum()
    }

    pub fn vertex_count(&self) -> usize {
        self.rings().map(|(_, _, r)| r.len()).sum()
    }

    /// Checks every structural invariant of a region.
    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidRegion {
                location: "region".into(),
                reason: "no components".into(),
            });
        }
        let labels: Vec<String> = self
            .rings()
            .enumerate()
            .map(|(g, (c, k, _))| ring_label(c, k, g))
            .collect();
        for (g, (_, kind, r)) in self.rings().enumerate() {
            let bad = |reason: String| Error::InvalidRegion {
                location: labels[g].clone(),
                reason,
            };
            if r.len() < 3 {
                return Err(bad(format!("degenerate ring with {} vertices", r.len())));
            }
            if let Some(i) = r.iter().position(|p| !p.is_finite()) {
                return Err(bad(format!("non-finite coordinate at vertex {i}")));
            }
            let n = r.len();
            if let Some(i) = (0..n).find(|&i| r[i] == r[(i + 1) % n]) {
                return Err(bad(format!("repeated vertex {i}")));
            }
            let a = ring::signed_area(r);
            match kind {
                RingKind::Outer if a <= 0.0 => {
                    return Err(bad(format!(
                        "outer ring must be counterclockwise (signed area {a:.3e})"
                    )))
                }
                RingKind::Hole(_) if a >= 0.0 => {
                    return Err(bad(format!("hole must be clockwise (signed area {a:.3e})")))
                }
                _ => {}
            }
            if let Some(c) = ring::find_crossing(&[r.as_slice()]) {
                return Err(bad(format!(
                    "not simple: edges {} and {} intersect",
                    c.edge_a, c.edge_b
                )));
            }
        }
        let all: Vec<&[Vec2]> = self.rings().map(|(_, _, r)| r.as_slice()).collect();
        if let Some(c) = ring::find_crossing(&all) {
            return Err(Error::InvalidRegion {
                location: labels[c.ring_a].clone(),
                reason: format!("intersects {}", labels[c.ring_b]),
            });
        }
        // holes inside their outer ring
        let mut g = 0;
        for (ci, comp) in self.components.iter().enumerate() {
            g += 1;
            for (k, h) in comp.holes.iter().enumerate() {
                if !ring::contains(&comp.outer, h[0]) {
                    return Err(Error::InvalidRegion {
                        location: labels[g].clone(),
                        reason: format!("hole {k} lies outside the outer ring of component {ci}"),
                    });
                }
                g += 1;
            }
        }
        // no component inside another component's filled part
        for (i, a) in self.components.iter().enumerate() {
            for (j, b) in self.components.iter().enumerate() {
                if i != j && b.contains(a.outer[0]) {
                    return Err(Error::InvalidRegion {
                        location: format!("component {i}"),
                        reason: format!("overlaps component {j}"),
                    });
                }
            }
        }
        if self.area() <= 0.0 {
            return Err(Error::InvalidRegion {
                location: "region".into(),
                reason: "non-positive total area".into(),
            });
        }
        Ok(())
    }

    /// Shoelace area over all rings (holes negative).
    pub fn area(&self) -> f64 {
        self.components.iter().map(Component::area).sum()
    }

    /// Total length of all rings, holes included.
    pub fn perimeter(&self) -> f64 {
        self.rings().map(|(_, _, r)| ring::length(r)).sum()
    }

    pub fn centroid(&self) -> Vec2 {
        let mut a = 0.0;
        let mut m = Vec2::ZERO;
        for (_, _, r) in self.rings() {
            let (ra, rm) = ring::area_moments(r);
            a += ra;
            m += rm;
        }
        m / a
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.components.iter().any(|c| c.contains(p))
    }

    pub fn bbox(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in &self.components {
            let (l, h) = ring::bbox(&c.outer);
            lo.x = lo.x.min(l.x);
            lo.y = lo.y.min(l.y);
            hi.x = hi.x.max(h.x);
            hi.y = hi.y.max(h.y);
        }
        (lo, hi)
    }

    /// Largest distance between two boundary vertices.
    pub fn diameter(&self) -> f64 {
        let pts: Vec<Vec2> = self.components.iter().flat_map(|c| c.outer.iter().copied()).collect();
        let mut d2: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                d2 = d2.max((pts[i] - pts[j]).norm_squared());
            }
        }
        d2.sqrt()
    }

    pub fn distance_to_boundary(&self, p: Vec2) -> f64 {
        self.rings()
            .map(|(_, _, r)| ring::distance_to_ring(r, p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Applies a point map to every vertex. The result is not validated.
    pub fn map_points(&self, f: impl Fn(Vec2) -> Vec2) -> Region {
        Region {
            components: self
                .components
                .iter()
                .map(|c| Component {
                    outer: c.outer.iter().map(|&p| f(p)).collect(),
                    holes: c.holes.iter().map(|h| h.iter().map(|&p| f(p)).collect()).collect(),
                })
                .collect(),
        }
    }

    pub fn translated(&self, d: Vec2) -> Region {
        self.map_points(|p| p + d)
    }

    /// Homothety about `center` with ratio `s`.
    pub fn scaled_about(&self, center: Vec2, s: f64) -> Region {
        self.map_points(|p| center + (p - center) * s)
    }

    /// Uniform arclength resampling of every ring with spacing close to
    /// `spacing`; each ring keeps at least `min_vertices` vertices.
    pub fn resampled(&self, spacing: f64, min_vertices: usize) -> Region {
        let rs = |r: &Vec<Vec2>| {
            let n = ((ring::length(r) / spacing).round() as usize).max(min_vertices).max(3);
            ring::resample(r, n)
        };
        Region {
            components: self
                .components
                .iter()
                .map(|c| Component {
                    outer: rs(&c.outer),
                    holes: c.holes.iter().map(rs).collect(),
                })
                .collect(),
        }
    }

    /// Union with the components of another region (no overlap check
    /// beyond validation).
    pub fn union_disjoint(&self, other: &Region) -> Result<Region> {
        let mut comps = self.components.clone();
        comps.extend(other.components.iter().cloned());
        Region::new(comps)
    }

    /// Minimum distance between the closures of two regions, assuming they
    /// are disjoint (boundary-to-boundary distance).
    pub fn distance_to(&self, other: &Region) -> f64 {
        let mut best = f64::INFINITY;
        for (_, _, a) in self.rings() {
            for (_, _, b) in other.rings() {
                for &p in a.iter() {
                    best = best.min(ring::distance_to_ring(b, p));
                }
                for &p in b.iter() {
                    best = best.min(ring::distance_to_ring(a, p));
                }
            }
        }
        best
    }
}

fn check_rings(region: &Region) -> Result<()> {
    for (g, (c, k, r)) in region.rings().enumerate() {
        if r.len() < 3 {
            return Err(Error::InvalidRegion {
                location: ring_label(c, k, g),
                reason: format!("degenerate ring with {} vertices", r.len()),
            });
        }
    }
    Ok(())
}

/// Area of a region (shoelace over all rings, holes negative).
pub fn area(region: &Region) -> Result<f64> {
    check_rings(region)?;
    Ok(region.area())
}

/// Perimeter of a region, hole boundaries included.
pub fn perimeter(region: &Region) -> Result<f64> {
    check_rings(region)?;
    Ok(region.perimeter())
}

/// Homothety about `center` restoring area `m` exactly.
pub fn rescale_to_area(region: &Region, m: f64, center: Vec2) -> Result<Region> {
    if !(m > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target area must be positive, got {m}"
        )));
    }
    let s = (m / region.area()).sqrt();
    Ok(region.scaled_about(center, s))
}
