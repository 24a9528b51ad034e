//! Constructors for the test and seed shapes used throughout.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::{ring, Component, Region, Vec2};
use crate::error::Result;
use crate::rng::CounterRng;

/// Regular `n`-gon inscribed in the circle of radius `radius`.
pub fn circle_ring(center: Vec2, radius: f64, n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|k| center + Vec2::from_angle(TAU * k as f64 / n as f64) * radius)
        .collect()
}

pub fn disk(center: Vec2, radius: f64, n: usize) -> Region {
    Region::from_components_unchecked(vec![Component::new(circle_ring(center, radius, n))])
}

/// Ellipse with semi-axes `a` (x) and `b` (y), `n` vertices equally spaced
/// in arclength.
pub fn ellipse(center: Vec2, a: f64, b: f64, n: usize) -> Region {
    let dense: Vec<Vec2> = (0..64 * n)
        .map(|k| {
            let t = TAU * k as f64 / (64 * n) as f64;
            center + Vec2::new(a * t.cos(), b * t.sin())
        })
        .collect();
    Region::from_components_unchecked(vec![Component::new(ring::resample(&dense, n))])
}

/// Ellipse of area `m` and axis ratio `ratio` (major along x).
pub fn ellipse_with_area(center: Vec2, m: f64, ratio: f64, n: usize) -> Region {
    let b = (m / (PI * ratio)).sqrt();
    ellipse(center, ratio * b, b, n)
}

/// Axis-aligned square with lower-left corner `lo`.
pub fn square(lo: Vec2, side: f64) -> Region {
    Region::from_components_unchecked(vec![Component::new(vec![
        lo,
        lo + Vec2::new(side, 0.0),
        lo + Vec2::new(side, side),
        lo + Vec2::new(0.0, side),
    ])])
}

/// Square with a concentric square hole.
pub fn square_with_hole(lo: Vec2, side: f64, hole_side: f64) -> Region {
    let outer = square(lo, side).components.remove(0).outer;
    let c = lo + Vec2::new(side / 2.0, side / 2.0);
    let hl = c - Vec2::new(hole_side / 2.0, hole_side / 2.0);
    let mut hole = vec![
        hl,
        hl + Vec2::new(hole_side, 0.0),
        hl + Vec2::new(hole_side, hole_side),
        hl + Vec2::new(0.0, hole_side),
    ];
    hole.reverse();
    Region::from_components_unchecked(vec![Component::with_holes(outer, vec![hole])])
}

pub fn annulus(center: Vec2, outer: f64, inner: f64, n_outer: usize, n_inner: usize) -> Region {
    let mut hole = circle_ring(center, inner, n_inner);
    hole.reverse();
    Region::from_components_unchecked(vec![Component::with_holes(
        circle_ring(center, outer, n_outer),
        vec![hole],
    )])
}

/// Square of side `side` with corners rounded to `corner` radius, `n`
/// vertices equally spaced in arclength.
pub fn rounded_square(center: Vec2, side: f64, corner: f64, n: usize) -> Region {
    let half = side / 2.0 - corner;
    let mut dense = Vec::new();
    let arc_pts = 256;
    let corners = [
        Vec2::new(half, half),
        Vec2::new(-half, half),
        Vec2::new(-half, -half),
        Vec2::new(half, -half),
    ];
    for (q, c) in corners.iter().enumerate() {
        let start = q as f64 * FRAC_PI_2;
        for k in 0..=arc_pts {
            let t = start + FRAC_PI_2 * k as f64 / arc_pts as f64;
            dense.push(center + *c + Vec2::from_angle(t) * corner);
        }
    }
    dense.dedup_by(|a, b| a.distance(*b) < 1e-14);
    Region::from_components_unchecked(vec![Component::new(ring::resample(&dense, n))])
}

/// Rounded square of area `m`.
pub fn rounded_square_with_area(center: Vec2, m: f64, corner_fraction: f64, n: usize) -> Region {
    // area of a rounded square: s² − (4 − π) c², c = f s
    let f = corner_fraction;
    let side = (m / (1.0 - (4.0 - PI) * f * f)).sqrt();
    rounded_square(center, side, f * side, n)
}

/// Random star-shaped polygon r(θ) = R (1 + Σ_{k=2..5} a_k cos(kθ + φ_k))
/// with |a_k| ≤ amplitude / k, drawn from `rng`.
pub fn random_star(rng: &mut CounterRng, center: Vec2, mean_radius: f64, amplitude: f64, n: usize) -> Result<Region> {
    let modes: Vec<(f64, f64, f64)> = (2..=5)
        .map(|k| {
            let a = rng.uniform(-amplitude, amplitude) / k as f64;
            let phi = rng.uniform(0.0, TAU);
            (k as f64, a, phi)
        })
        .collect();
    let dense: Vec<Vec2> = (0..16 * n)
        .map(|j| {
            let t = TAU * j as f64 / (16 * n) as f64;
            let r = mean_radius * (1.0 + modes.iter().map(|&(k, a, p)| a * (k * t + p).cos()).sum::<f64>());
            center + Vec2::from_angle(t) * r
        })
        .collect();
    Region::from_ring(ring::resample(&dense, n))
}
