//! Closed polylines stored without a repeated closing vertex.

use super::Vec2;

/// Signed shoelace area; positive for counterclockwise rings. Vertices
/// are taken relative to the first one, so distant rings keep their
/// precision.
pub fn signed_area(ring: &[Vec2]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let o = ring[0];
    let mut s = 0.0;
    for i in 1..n - 1 {
        s += (ring[i] - o).cross(ring[i + 1] - o);
    }
    0.5 * s
}

/// Signed area together with the signed first moments (∫x, ∫y).
pub fn area_moments(ring: &[Vec2]) -> (f64, Vec2) {
    let n = ring.len();
    if n < 3 {
        return (0.0, Vec2::ZERO);
    }
    let o = ring[0];
    let mut a = 0.0;
    let mut mx = 0.0;
    let mut my = 0.0;
    for i in 1..n - 1 {
        let p = ring[i] - o;
        let q = ring[i + 1] - o;
        let c = p.cross(q);
        a += c;
        mx += (p.x + q.x) * c;
        my += (p.y + q.y) * c;
    }
    let area = 0.5 * a;
    (area, Vec2::new(mx / 6.0 + o.x * area, my / 6.0 + o.y * area))
}

pub fn length(ring: &[Vec2]) -> f64 {
    let n = ring.len();
    (0..n).map(|i| ring[i].distance(ring[(i + 1) % n])).sum()
}

/// Even-odd crossing test. Points exactly on the boundary may land on
/// either side.
pub fn contains(ring: &[Vec2], p: Vec2) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = ring[i];
        let b = ring[j];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_squared();
    if l2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / l2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

pub fn distance_to_ring(ring: &[Vec2], p: Vec2) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| point_segment_distance(p, ring[i], ring[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

pub fn bbox(ring: &[Vec2]) -> (Vec2, Vec2) {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in ring {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Location of a crossing between edges of a set of rings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Crossing {
    pub ring_a: usize,
    pub edge_a: usize,
    pub ring_b: usize,
    pub edge_b: usize,
}

/// Finds any pair of intersecting edges among `rings`, ignoring the shared
/// vertex of consecutive edges in the same ring. Sweeps edges sorted by
/// their lower x bound.
pub fn find_crossing(rings: &[&[Vec2]]) -> Option<Crossing> {
    struct Edge {
        ring: usize,
        idx: usize,
        a: Vec2,
        b: Vec2,
        xmin: f64,
        xmax: f64,
    }
    let mut edges = Vec::new();
    for (r, ring) in rings.iter().enumerate() {
        let n = ring.len();
        for i in 0..n {
            let a = ring[i];
            let b = ring[(i + 1) % n];
            edges.push(Edge {
                ring: r,
                idx: i,
                a,
                b,
                xmin: a.x.min(b.x),
                xmax: a.x.max(b.x),
            });
        }
    }
    edges.sort_by(|p, q| p.xmin.total_cmp(&q.xmin));
    for i in 0..edges.len() {
        let e = &edges[i];
        for f in edges[i + 1..].iter() {
            if f.xmin > e.xmax {
                break;
            }
            if e.ring == f.ring {
                let n = rings[e.ring].len();
                let adjacent = (e.idx + 1) % n == f.idx || (f.idx + 1) % n == e.idx;
                if adjacent {
                    // consecutive edges share one vertex; they only conflict
                    // when they fold back onto each other
                    let (shared, p, q) = if (e.idx + 1) % n == f.idx {
                        (e.b, e.a, f.b)
                    } else {
                        (e.a, e.b, f.a)
                    };
                    let u = p - shared;
                    let v = q - shared;
                    if n > 3 && u.cross(v) == 0.0 && u.dot(v) > 0.0 {
                        return Some(Crossing {
                            ring_a: e.ring,
                            edge_a: e.idx,
                            ring_b: f.ring,
                            edge_b: f.idx,
                        });
                    }
                    continue;
                }
            }
            let ylo = e.a.y.min(e.b.y);
            let yhi = e.a.y.max(e.b.y);
            if f.a.y.max(f.b.y) < ylo || f.a.y.min(f.b.y) > yhi {
                continue;
            }
            if segments_intersect(e.a, e.b, f.a, f.b) {
                return Some(Crossing {
                    ring_a: e.ring,
                    edge_a: e.idx,
                    ring_b: f.ring,
                    edge_b: f.idx,
                });
            }
        }
    }
    None
}

/// Resamples a closed ring to `n` points equally spaced in arclength,
/// starting at the first vertex.
pub fn resample(ring: &[Vec2], n: usize) -> Vec<Vec2> {
    let m = ring.len();
    let mut cum = Vec::with_capacity(m + 1);
    cum.push(0.0);
    for i in 0..m {
        let l = ring[i].distance(ring[(i + 1) % m]);
        cum.push(cum[i] + l);
    }
    let total = cum[m];
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let s = total * k as f64 / n as f64;
        while seg + 1 < m && cum[seg + 1] <= s {
            seg += 1;
        }
        let a = ring[seg];
        let b = ring[(seg + 1) % m];
        let l = cum[seg + 1] - cum[seg];
        let t = if l > 0.0 { (s - cum[seg]) / l } else { 0.0 };
        out.push(a + (b - a) * t);
    }
    out
}

/// Clips a ring against an axis-aligned box (Sutherland–Hodgman). The
/// result may contain degenerate edges along the box sides but its signed
/// area and moments equal those of ring ∩ box, also for non-convex rings.
pub fn clip_to_box(ring: &[Vec2], lo: Vec2, hi: Vec2) -> Vec<Vec2> {
    let mut poly: Vec<Vec2> = ring.to_vec();
    let mut tmp = Vec::with_capacity(poly.len() + 8);
    // (axis, bound, keep_greater)
    let planes = [(0, lo.x, true), (0, hi.x, false), (1, lo.y, true), (1, hi.y, false)];
    for &(axis, bound, keep_ge) in &planes {
        if poly.is_empty() {
            break;
        }
        tmp.clear();
        let coord = |p: &Vec2| if axis == 0 { p.x } else { p.y };
        let inside = |p: &Vec2| {
            if keep_ge {
                coord(p) >= bound
            } else {
                coord(p) <= bound
            }
        };
        let n = poly.len();
        for i in 0..n {
            let cur = poly[i];
            let prev = poly[(i + n - 1) % n];
            let cin = inside(&cur);
            let pin = inside(&prev);
            if cin != pin {
                let t = (bound - coord(&prev)) / (coord(&cur) - coord(&prev));
                let mut x = prev + (cur - prev) * t;
                if axis == 0 {
                    x.x = bound;
                } else {
                    x.y = bound;
                }
                tmp.push(x);
            }
            if cin {
                tmp.push(cur);
            }
        }
        std::mem::swap(&mut poly, &mut tmp);
    }
    poly
}
