use super::{Region, Vec2};

fn boundary_vertices(r: &Region) -> Vec<Vec2> {
    r.rings().flat_map(|(_, _, ring)| ring.iter().copied()).collect()
}

fn directed(a: &Region, b: &Region) -> f64 {
    boundary_vertices(a)
        .into_iter()
        .map(|p| b.distance_to_boundary(p))
        .fold(0.0, f64::max)
}

/// Hausdorff distance between the boundaries of two regions: vertices of
/// one boundary are projected onto the edges of the other, both ways.
pub fn hausdorff_distance(a: &Region, b: &Region) -> f64 {
    directed(a, b).max(directed(b, a))
}

/// Vertex-to-vertex variant without edge projection.
pub fn hausdorff_distance_vertices(a: &Region, b: &Region) -> f64 {
    let pa = boundary_vertices(a);
    let pb = boundary_vertices(b);
    let dir = |p: &[Vec2], q: &[Vec2]| {
        p.iter()
            .map(|&x| q.iter().map(|&y| x.distance(y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    dir(&pa, &pb).max(dir(&pb, &pa))
}
