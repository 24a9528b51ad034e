//! Closed-form mean inverse distances for axis-aligned squares.

use crate::geometry::Vec2;

/// Mean of 1/|x − y| over x, y drawn uniformly from the same unit square:
/// 4 asinh(1) + (4/3)(1 − √2).
pub const S0: f64 = 2.973_209_598_247_378_7;

/// Antiderivative whose fourth mixed difference gives the square-square
/// integral of 1/r.
#[inline]
fn g(u: f64, v: f64) -> f64 {
    let u = u.abs();
    let v = v.abs();
    let r = u.hypot(v);
    let t1 = if u > 0.0 {
        0.5 * u * u * v * (v / u).asinh()
    } else {
        0.0
    };
    let t2 = if v > 0.0 {
        0.5 * v * v * u * (u / v).asinh()
    } else {
        0.0
    };
    t1 + t2 - r * r * r / 6.0
}

/// Beyond this many sides of the smaller square the fourth difference of
/// `g` cancels badly.
const CLOSED_FORM_REACH: f64 = 4.0;
/// Pairs farther apart than this multiple of the summed sides use the
/// product Gauss rule, which keeps full relative precision.
const SEPARATED: f64 = 1.5;

/// Four-point Gauss–Legendre rule on [−½, ½].
const GL4: [(f64, f64); 4] = [
    (-0.430_568_155_797_026_3, 0.173_927_422_568_726_84),
    (-0.169_990_521_792_428_13, 0.326_072_577_431_273_1),
    (0.169_990_521_792_428_13, 0.326_072_577_431_273_1),
    (0.430_568_155_797_026_3, 0.173_927_422_568_726_84),
];

/// Eight-point Gauss–Legendre rule on [−½, ½].
const GL8: [(f64, f64); 8] = [
    (-0.480_144_928_248_768_1, 0.050_614_268_145_188_344),
    (-0.398_333_238_706_813_36, 0.111_190_517_226_687_17),
    (-0.262_766_204_958_164_5, 0.156_853_322_938_943_52),
    (-0.091_717_321_247_824_89, 0.181_341_891_689_180_88),
    (0.091_717_321_247_824_89, 0.181_341_891_689_180_88),
    (0.262_766_204_958_164_5, 0.156_853_322_938_943_52),
    (0.398_333_238_706_813_36, 0.111_190_517_226_687_17),
    (0.480_144_928_248_768_1, 0.050_614_268_145_188_344),
];

/// Mean inverse distance between a square of side `si` and a square of
/// side `sj` whose center is displaced by `d`.
pub fn square_square(d: Vec2, si: f64, sj: f64) -> f64 {
    let (small, big, d) = if si <= sj { (si, sj, d) } else { (sj, si, -d) };
    let dist = d.norm();
    if dist <= CLOSED_FORM_REACH * small {
        return square_square_closed(d, small, big);
    }
    if dist >= SEPARATED * (small + big) {
        let mut tot = 0.0;
        for &(x1, w1) in &GL4 {
            for &(y1, w2) in &GL4 {
                let p = Vec2::new(x1 * small, y1 * small) - d;
                let mut inner = 0.0;
                for &(x2, w3) in &GL4 {
                    for &(y2, w4) in &GL4 {
                        inner += w3 * w4 / (p - Vec2::new(x2 * big, y2 * big)).norm();
                    }
                }
                tot += w1 * w2 * inner;
            }
        }
        return tot;
    }
    let mut tot = 0.0;
    for &(x, wx) in &GL8 {
        for &(y, wy) in &GL8 {
            tot += wx * wy * point_square(Vec2::new(x * small, y * small) - d, big);
        }
    }
    tot
}

fn square_square_closed(d: Vec2, si: f64, sj: f64) -> f64 {
    let (a1, a2) = (-0.5 * si, 0.5 * si);
    let (c1, c2) = (d.x - 0.5 * sj, d.x + 0.5 * sj);
    let (d1, d2) = (d.y - 0.5 * sj, d.y + 0.5 * sj);
    let us = [(c2 - a1, 1.0), (c2 - a2, -1.0), (c1 - a1, -1.0), (c1 - a2, 1.0)];
    let vs = [(d2 - a1, 1.0), (d2 - a2, -1.0), (d1 - a1, -1.0), (d1 - a2, 1.0)];
    let mut tot = 0.0;
    for &(u, su) in &us {
        for &(v, sv) in &vs {
            tot += su * sv * g(u, v);
        }
    }
    tot / (si * si * sj * sj)
}

#[inline]
fn h(u: f64, v: f64) -> f64 {
    let a = if u != 0.0 { u * (v / u.abs()).asinh() } else { 0.0 };
    let b = if v != 0.0 { v * (u / v.abs()).asinh() } else { 0.0 };
    a + b
}

/// Mean inverse distance from a point displaced by `d` from the center of
/// a square of side `s` to the points of that square.
pub fn point_square(d: Vec2, s: f64) -> f64 {
    let us = [(d.x + 0.5 * s, 1.0), (d.x - 0.5 * s, -1.0)];
    let vs = [(d.y + 0.5 * s, 1.0), (d.y - 0.5 * s, -1.0)];
    let mut tot = 0.0;
    for &(u, su) in &us {
        for &(v, sv) in &vs {
            tot += su * sv * h(u, v);
        }
    }
    tot / (s * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_pair_is_s0() {
        let closed = 4.0 * 1f64.asinh() + 4.0 / 3.0 * (1.0 - 2f64.sqrt());
        assert!((S0 - closed).abs() < 1e-15);
        assert!((square_square(Vec2::ZERO, 1.0, 1.0) - S0).abs() < 1e-13);
        assert!((square_square(Vec2::ZERO, 0.1, 0.1) - S0 / 0.1).abs() < 1e-11);
    }

    #[test]
    fn far_pairs_approach_point_kernel() {
        let d = Vec2::new(30.0, 40.0);
        assert!((square_square(d, 1.0, 0.5) * 50.0 - 1.0).abs() < 1e-4);
        assert!((point_square(d, 1.0) * 50.0 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn point_at_center_is_finite() {
        // 4 ln(1 + √2) / s for the center of a square of side s
        let v = point_square(Vec2::ZERO, 2.0);
        assert!((v - 4.0 * (1.0 + 2f64.sqrt()).ln() / 2.0).abs() < 1e-14);
    }
}
