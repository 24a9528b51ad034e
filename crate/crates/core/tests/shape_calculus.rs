use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::sync::OnceLock;

use approx::assert_relative_eq;
use drops2d::energy::{self, Potential};
use drops2d::equilibrium::{solve_region, EquilibriumSolution};
use drops2d::geometry::{boundary_trace, rescale_to_area, shapes, BoundaryTrace, Region, Vec2};
use drops2d::quadrature::MeshConfig;
use drops2d::shape_calculus::{
    euler_lagrange_residual, first_variation_cap1, first_variation_i1, half_normal_derivative,
    half_normal_derivative_with, predicted_variation_i1, HalfDerivativeOptions, VectorField,
};
use drops2d::Error;
use proptest::prelude::*;

struct Fixture {
    region: Region,
    sol: EquilibriumSolution,
    trace: BoundaryTrace,
}

fn fixture(region: Region, h: f64) -> Fixture {
    let sol = solve_region(&region, &MeshConfig::new(h).refined(true)).unwrap();
    let trace = half_normal_derivative(&region, &sol, &boundary_trace(&region).unwrap()).unwrap();
    Fixture { region, sol, trace }
}

fn unit_disk() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| fixture(shapes::disk(Vec2::ZERO, 1.0, 96), 0.03))
}

/// 2:1 ellipse of area π.
fn ellipse() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| fixture(shapes::ellipse(Vec2::ZERO, SQRT_2, 1.0 / SQRT_2, 80), 0.03))
}

fn values(trace: &BoundaryTrace) -> Vec<f64> {
    trace
        .points
        .iter()
        .filter(|p| !p.flagged)
        .map(|p| p.half_derivative.unwrap())
        .collect()
}

/// max |D² − mean D²| / mean D².
fn square_spread(trace: &BoundaryTrace) -> f64 {
    let d2: Vec<f64> = values(trace).iter().map(|d| d * d).collect();
    let mean = d2.iter().sum::<f64>() / d2.len() as f64;
    d2.iter().map(|v| (v - mean).abs() / mean).fold(0.0, f64::max)
}

#[test]
fn unit_disk_half_derivative_is_minus_root_two() {
    let f = unit_disk();
    assert_eq!(f.trace.flagged_count(), 0);
    for d in values(&f.trace) {
        assert_relative_eq!(d, -SQRT_2, max_relative = 0.03);
    }
    assert!(square_spread(&f.trace) <= 0.03);
}

#[test]
fn half_derivative_scales_as_a_to_the_minus_three_halves() {
    let f = fixture(shapes::disk(Vec2::ZERO, 2.0, 120), 0.05);
    for d in values(&f.trace) {
        assert_relative_eq!(d, -SQRT_2 * 2f64.powf(-1.5), max_relative = 0.03);
    }
}

#[test]
fn half_derivative_is_nonpositive_and_varies_on_the_ellipse() {
    let f = ellipse();
    assert!(f.trace.flagged_count() * 10 <= f.trace.len());
    assert!(values(&f.trace).iter().all(|d| *d <= 0.0));
    assert!(square_spread(&f.trace) > 0.1);
}

#[test]
fn mirrored_vertices_agree() {
    // the ellipse vertices at angles 2πk/n mirror to n − k across the x axis
    let f = ellipse();
    let n = f.trace.len();
    for k in 1..n / 2 {
        let (a, b) = (&f.trace.points[k], &f.trace.points[n - k]);
        assert!((a.position.y + b.position.y).abs() < 1e-12);
        if let (false, false, Some(da), Some(db)) = (a.flagged, b.flagged, a.half_derivative, b.half_derivative) {
            assert_relative_eq!(da, db, max_relative = 0.01);
        }
    }
}

#[test]
fn adjacent_increments_stay_bounded() {
    let f = ellipse();
    let top = values(&f.trace).iter().map(|d| d.abs()).fold(0.0, f64::max);
    let n = f.trace.len();
    for i in 0..n {
        let (a, b) = (&f.trace.points[i], &f.trace.points[(i + 1) % n]);
        if let (Some(da), Some(db)) = (a.half_derivative, b.half_derivative) {
            assert!((da - db).abs() <= 0.15 * top, "vertex {i}: {da} {db}");
        }
    }
}

#[test]
fn dilation_of_the_unit_disk() {
    let f = unit_disk();
    let zeta = VectorField::Dilation { center: Vec2::ZERO };
    let v = first_variation_i1(&f.region, &f.sol, &f.trace, &zeta).unwrap();
    assert_relative_eq!(v.predicted, -FRAC_PI_2, max_relative = 0.02);
    assert!(v.relative && v.discrepancy <= 0.02, "{v:?}");
    let c = first_variation_cap1(&f.region, &f.sol, &f.trace, &zeta).unwrap();
    assert_relative_eq!(c.predicted, 4.0, max_relative = 0.02);
    assert!(c.chain_rule_error.unwrap() <= 1e-10);
}

#[test]
fn translation_of_the_unit_disk() {
    let f = unit_disk();
    let zeta = VectorField::Translation { e: Vec2::new(0.6, 0.8) };
    let v = first_variation_i1(&f.region, &f.sol, &f.trace, &zeta).unwrap();
    assert!(v.predicted.abs() <= 1e-3 * FRAC_PI_2, "{v:?}");
    assert!(v.fd.abs() <= 1e-3 * FRAC_PI_2, "{v:?}");
    let c = first_variation_cap1(&f.region, &f.sol, &f.trace, &zeta).unwrap();
    assert!(c.predicted.abs() <= 1e-3 * 4.0);
}

#[test]
fn normal_bump_on_the_unit_disk() {
    let f = unit_disk();
    let zeta = VectorField::normal_bump_at(&f.trace, 10, 0.4);
    let v = first_variation_i1(&f.region, &f.sol, &f.trace, &zeta).unwrap();
    assert!(v.discrepancy <= 0.02, "{v:?}");
}

#[test]
fn dilation_of_the_ellipse() {
    let f = ellipse();
    let zeta = VectorField::Dilation { center: Vec2::ZERO };
    let v = first_variation_i1(&f.region, &f.sol, &f.trace, &zeta).unwrap();
    assert!(v.relative && v.discrepancy <= 0.02, "{v:?}");
    // dilation about the origin scales I₁ by 1/(1 + t)
    assert_relative_eq!(v.fd, -f.sol.i1, max_relative = 1e-6);
}

#[test]
fn euler_lagrange_on_balls() {
    let f = unit_disk();
    for lambda in [0.0, 1.0, 2.5] {
        let el = euler_lagrange_residual(&f.trace, &Potential::Zero, lambda).unwrap();
        let expected = 1.0 - lambda / 4.0;
        assert!(el.max_abs_residual().unwrap() <= 0.03 * expected.abs().max(1.0));
        assert_relative_eq!(el.multiplier.unwrap(), expected, max_relative = 0.03);
        assert!(el.l2_residual().unwrap() <= el.max_abs_residual().unwrap() * (2.0 * PI).sqrt());
    }
    let el = euler_lagrange_residual(&f.trace, &Potential::Zero, energy::lambda_c(PI)).unwrap();
    assert!(el.multiplier.unwrap().abs() <= 0.05);
    let half = fixture(shapes::disk(Vec2::ZERO, 0.5, 64), 0.015);
    let el = euler_lagrange_residual(&half.trace, &Potential::Zero, 0.25).unwrap();
    assert_relative_eq!(el.multiplier.unwrap(), 2.0 - 0.25 / 0.5, max_relative = 0.03);
    assert!(el.max_abs_residual().unwrap() * 0.5 <= 0.03);
}

#[test]
fn ellipse_is_not_critical() {
    let f = ellipse();
    let el = euler_lagrange_residual(&f.trace, &Potential::Zero, 1.0).unwrap();
    assert!(el.max_abs_residual().unwrap() > 0.1, "{:?}", el.max_abs_residual());
    // the residual has zero arclength mean
    let mean: f64 = el
        .points
        .iter()
        .filter_map(|p| p.residual.map(|r| r * p.weight))
        .sum::<f64>();
    assert!(mean.abs() < 1e-12);
}

#[test]
fn descent_along_minus_residual_lowers_the_energy() {
    let f = ellipse();
    let lambda = 1.0;
    let cfg = MeshConfig::new(0.03);
    let e0 = {
        let sol = solve_region(&f.region, &cfg).unwrap();
        energy::evaluate(&f.region, &sol, &Potential::Zero, lambda)
            .unwrap()
            .energy
    };
    let el = euler_lagrange_residual(&f.trace, &Potential::Zero, lambda).unwrap();
    let dt = 0.004;
    let ring: Vec<Vec2> = el
        .points
        .iter()
        .map(|p| p.position - p.normal * (dt * p.residual.unwrap_or(0.0)))
        .collect();
    let moved = rescale_to_area(&Region::from_ring(ring).unwrap(), f.region.area(), Vec2::ZERO).unwrap();
    let sol = solve_region(&moved, &cfg).unwrap();
    let e1 = energy::evaluate(&moved, &sol, &Potential::Zero, lambda).unwrap().energy;
    let predicted: f64 = -dt
        * el.points
            .iter()
            .filter_map(|p| p.residual.map(|r| r * r * p.weight))
            .sum::<f64>();
    assert!(e1 < e0, "{e0} -> {e1}");
    assert!(
        (e1 - e0) < 0.5 * predicted,
        "change {} against first order {predicted}",
        e1 - e0
    );
}

#[test]
fn unreliable_traces_are_rejected() {
    let mut t = ellipse().trace.clone();
    let k = t.len() / 5;
    for p in t.points.iter_mut().take(k) {
        p.flagged = true;
    }
    assert!(matches!(
        euler_lagrange_residual(&t, &Potential::Zero, 1.0),
        Err(Error::UnreliableTrace { .. })
    ));
}

#[test]
fn preconditions_are_enforced() {
    let f = unit_disk();
    let dense = shapes::disk(Vec2::ZERO, 1.0, 256);
    let r = half_normal_derivative(&dense, &f.sol, &boundary_trace(&dense).unwrap());
    assert!(matches!(r, Err(Error::Precondition(_))));
    let opts = HalfDerivativeOptions { h: Some(0.01) };
    assert!(half_normal_derivative_with(&dense, &f.sol, &boundary_trace(&dense).unwrap(), &opts).is_ok());
    let bare = boundary_trace(&f.region).unwrap();
    assert!(matches!(
        predicted_variation_i1(&bare, &VectorField::Dilation { center: Vec2::ZERO }),
        Err(Error::Precondition(_))
    ));
}

proptest! {
    #[test]
    fn jacobian_matches_the_numerical_derivative(
        x in -1.0f64..1.0, y in -1.0f64..1.0, t in -0.05f64..0.05, w in 0.2f64..1.0, kind in 0usize..3,
    ) {
        let zeta = match kind {
            0 => VectorField::Dilation { center: Vec2::new(0.1, -0.2) },
            1 => VectorField::Translation { e: Vec2::new(0.3, 0.4) },
            _ => VectorField::NormalBump { center: Vec2::new(0.2, 0.1), width: w, direction: Vec2::new(0.6, -0.8) },
        };
        let p = Vec2::new(x, y);
        let e = 1e-6;
        let dx = (zeta.map(p + Vec2::new(e, 0.0), t) - zeta.map(p - Vec2::new(e, 0.0), t)) * (0.5 / e);
        let dy = (zeta.map(p + Vec2::new(0.0, e), t) - zeta.map(p - Vec2::new(0.0, e), t)) * (0.5 / e);
        let det = dx.x * dy.y - dx.y * dy.x;
        prop_assert!((zeta.jacobian(p, t) - det).abs() < 1e-7);
    }
}
