use std::f64::consts::{FRAC_PI_2, PI};

use approx::assert_relative_eq;
use drops2d::equilibrium::{solve_mesh, solve_region};
use drops2d::geometry::{shapes, Region, Vec2};
use drops2d::quadrature::{assemble_kernel, build_mesh, integrals, potential_at, Cell, CellMesh, MeshConfig};
use drops2d::rng::CounterRng;
use drops2d::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Adaptive Simpson on [a, b].
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
}

/// Gauss–Legendre nodes and weights on [0, 1].
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            (0.5 * (1.0 - x), 1.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

fn cell(center: Vec2, side: f64) -> Cell {
    Cell {
        center,
        area: side * side,
        side,
        boundary: false,
        component: 0,
    }
}

#[test]
fn self_energy_constant_matches_polar_oracle() {
    // ∫∫ over two unit squares of 1/|x−y| = 8 ∫_0^{π/4} ∫_0^{sec θ} (1 − r cos θ)(1 − r sin θ) dr dθ
    let outer = |t: f64| {
        let (c, s) = (t.cos(), t.sin());
        simpson(&|r: f64| (1.0 - r * c) * (1.0 - r * s), 0.0, 1.0 / c, 1e-14)
    };
    let oracle = 8.0 * simpson(&outer, 0.0, PI / 4.0, 1e-14);
    assert_relative_eq!(integrals::S0, oracle, max_relative = 1e-12);

    let region = shapes::square(Vec2::ZERO, 1.0);
    let mesh = CellMesh::from_cells(vec![cell(Vec2::new(0.5, 0.5), 1.0)], 1.0, region);
    let k = assemble_kernel(&mesh).unwrap();
    assert_relative_eq!(k.get(0, 0), integrals::S0, max_relative = 1e-15);
}

#[test]
fn near_field_integral_matches_product_gauss() {
    let gl = gauss_legendre(24);
    for (d, s1, s2) in [
        (Vec2::new(1.5, 0.0), 1.0, 1.0),
        (Vec2::new(1.2, 0.9), 1.0, 0.5),
        (Vec2::new(1.9, 1.5), 0.8, 1.0),
    ] {
        let mut q = 0.0;
        for &(x1, w1) in &gl {
            for &(y1, w2) in &gl {
                for &(x2, w3) in &gl {
                    for &(y2, w4) in &gl {
                        let p = Vec2::new((x1 - 0.5) * s1, (y1 - 0.5) * s1);
                        let r = d + Vec2::new((x2 - 0.5) * s2, (y2 - 0.5) * s2);
                        q += w1 * w2 * w3 * w4 / (r - p).norm();
                    }
                }
            }
        }
        assert_relative_eq!(integrals::square_square(d, s1, s2), q, max_relative = 1e-9);
    }
    // a small square beside a large one, then separated pairs on the
    // four-point product rule
    for (d, s1, s2, tol) in [
        (Vec2::new(0.35, 0.1), 0.1, 0.5, 1e-9),
        (Vec2::new(0.35, 0.0), 0.05, 0.5, 1e-8),
        (Vec2::new(-0.8, 1.1), 1.0, 0.05, 1e-9),
        (Vec2::new(2.0, 2.0), 0.8, 1.0, 1e-8),
        (Vec2::new(3.0, 0.0), 1.0, 1.0, 1e-8),
        (Vec2::new(0.0, 0.045), 0.0027, 0.0027, 1e-12),
    ] {
        let mut q = 0.0;
        for &(x1, w1) in &gl {
            for &(y1, w2) in &gl {
                for &(x2, w3) in &gl {
                    for &(y2, w4) in &gl {
                        let p = Vec2::new((x1 - 0.5) * s1, (y1 - 0.5) * s1);
                        let r = d + Vec2::new((x2 - 0.5) * s2, (y2 - 0.5) * s2);
                        q += w1 * w2 * w3 * w4 / (r - p).norm();
                    }
                }
            }
        }
        assert_relative_eq!(integrals::square_square(d, s1, s2), q, max_relative = tol);
        if s1 != s2 {
            assert_eq!(
                integrals::square_square(d, s1, s2),
                integrals::square_square(-d, s2, s1)
            );
        }
    }
    let mut q = 0.0;
    let d = Vec2::new(0.9, 0.4);
    for &(x, wx) in &gl {
        for &(y, wy) in &gl {
            q += wx * wy / (d - Vec2::new(x - 0.5, y - 0.5)).norm();
        }
    }
    assert_relative_eq!(integrals::point_square(d, 1.0), q, max_relative = 1e-10);
}

#[test]
fn aligned_unit_square_gives_sixteen_cells() {
    let mut cfg = MeshConfig::new(0.25);
    cfg.min_cells = 1;
    let mesh = build_mesh(&shapes::square(Vec2::ZERO, 1.0), &cfg).unwrap();
    assert_eq!(mesh.len(), 16);
    for c in &mesh.cells {
        assert_eq!(c.area, 1.0 / 16.0);
        assert!(!c.boundary);
    }
}

#[test]
fn disk_cells_cover_its_area() {
    let disk = shapes::disk(Vec2::ZERO, 1.0, 512);
    let mesh = build_mesh(&disk, &MeshConfig::new(0.05)).unwrap();
    assert!((mesh.total_area() - disk.area()).abs() / disk.area() < 5e-3);
    assert!((mesh.total_area() - PI).abs() / PI < 5e-3);
}

#[test]
fn annulus_has_no_cell_in_its_hole() {
    let ann = shapes::annulus(Vec2::new(0.1, -0.2), 1.0, 0.5, 256, 128);
    for refine in [false, true] {
        let mesh = build_mesh(&ann, &MeshConfig::new(0.04).refined(refine)).unwrap();
        for i in 0..mesh.len() {
            let c = mesh.center(i);
            assert!(
                (c - Vec2::new(0.1, -0.2)).norm() > 0.5,
                "cell {i} at {c:?} lies in the hole"
            );
            assert!(ann.contains(c));
        }
        assert!((mesh.total_area() - ann.area()).abs() / ann.area() < 5e-3);
    }
}

#[test]
fn too_coarse_or_too_large_spacing_is_rejected() {
    let disk = shapes::disk(Vec2::ZERO, 1.0, 128);
    assert!(matches!(
        build_mesh(&disk, &MeshConfig::new(0.4)),
        Err(Error::ResolutionTooCoarse { .. })
    ));
    assert!(matches!(
        build_mesh(&disk, &MeshConfig::new(0.6)),
        Err(Error::InvalidSpacing(_))
    ));
    assert!(matches!(
        build_mesh(&disk, &MeshConfig::new(-0.1)),
        Err(Error::InvalidSpacing(_))
    ));
}

#[test]
fn far_cells_use_the_point_kernel_exactly() {
    let h = 0.05;
    let region = shapes::square(Vec2::ZERO, 1.0);
    let mesh = CellMesh::from_cells(
        vec![cell(Vec2::new(0.1, 0.1), h), cell(Vec2::new(0.1 + 10.0 * h, 0.1), h)],
        h,
        region,
    );
    let k = assemble_kernel(&mesh).unwrap();
    assert_eq!(k.get(0, 1), 1.0 / (10.0 * h));
    assert_eq!(k.get(1, 0), k.get(0, 1));
    // potential of a single far cell
    let x = Vec2::new(0.1, 2.1);
    assert_eq!(potential_at(&mesh, &[1.0, 0.0], x), 0.5);
}

#[test]
fn coincident_cells_fail_assembly() {
    let region = shapes::square(Vec2::ZERO, 1.0);
    let mesh = CellMesh::from_cells(
        vec![cell(Vec2::new(0.5, 0.5), 0.1), cell(Vec2::new(0.5, 0.5), 0.1)],
        0.1,
        region,
    );
    assert!(matches!(assemble_kernel(&mesh), Err(Error::Assembly(_))));
}

#[test]
fn potential_at_a_cell_center_is_finite() {
    let mesh = build_mesh(&shapes::disk(Vec2::ZERO, 1.0, 128), &MeshConfig::new(0.1)).unwrap();
    let m = vec![1.0 / mesh.len() as f64; mesh.len()];
    for i in [0, mesh.len() / 2] {
        let v = potential_at(&mesh, &m, mesh.center(i));
        assert!(v.is_finite() && v > 0.0);
    }
}

#[test]
fn kernel_is_symmetric_with_positive_diagonal() {
    let mesh = build_mesh(
        &shapes::ellipse(Vec2::new(0.3, 0.1), 1.2, 0.7, 256),
        &MeshConfig::new(0.05).refined(true),
    )
    .unwrap();
    let k = assemble_kernel(&mesh).unwrap();
    assert_eq!(k.asymmetry(), 0.0);
    assert!(k.diagonal().iter().all(|&d| d > 0.0));
    assert!(k.near_pairs > 0);
}

#[test]
fn kernel_is_translation_invariant_bitwise() {
    let mesh = build_mesh(
        &shapes::disk(Vec2::ZERO, 1.0, 256),
        &MeshConfig::new(0.06).refined(true),
    )
    .unwrap();
    let k = assemble_kernel(&mesh).unwrap();
    let moved = mesh.translated(Vec2::new(12.345, -6.789));
    let k2 = assemble_kernel(&moved).unwrap();
    assert_eq!(k, k2);
}

#[test]
fn kernel_scales_inversely_with_the_mesh() {
    let mesh = build_mesh(
        &shapes::disk(Vec2::ZERO, 1.0, 256),
        &MeshConfig::new(0.06).refined(true),
    )
    .unwrap();
    let k = assemble_kernel(&mesh).unwrap();
    for s in [2.0, 0.37, 1.01] {
        let ks = assemble_kernel(&mesh.scaled(s)).unwrap();
        for i in 0..k.n() {
            for j in 0..k.n() {
                let a = ks.get(i, j) * s;
                assert!(
                    (a - k.get(i, j)).abs() <= 1e-12 * k.get(i, j),
                    "entry ({i}, {j}) at scale {s}: {a} vs {} {:?} {:?}",
                    k.get(i, j),
                    mesh.cells[i],
                    mesh.cells[j]
                );
            }
        }
    }
}

#[test]
fn kernel_is_positive_definite_on_small_meshes() {
    for region in [
        shapes::disk(Vec2::ZERO, 1.0, 256),
        shapes::annulus(Vec2::ZERO, 1.0, 0.4, 256, 128),
        shapes::square(Vec2::new(0.013, 0.021), 1.0),
    ] {
        let mesh = build_mesh(&region, &MeshConfig::new(0.07)).unwrap();
        assert!(mesh.len() <= 1000);
        let k = assemble_kernel(&mesh).unwrap();
        let m = DMatrix::from_fn(k.n(), k.n(), |i, j| k.get(i, j));
        let min = m.symmetric_eigenvalues().min();
        assert!(min > 0.0, "smallest eigenvalue {min}");
    }
}

#[test]
fn kernel_binary_dump_has_header() {
    let mesh = build_mesh(&shapes::disk(Vec2::ZERO, 1.0, 128), &MeshConfig::new(0.2)).unwrap_or_else(|_| {
        let mut c = MeshConfig::new(0.2);
        c.min_cells = 1;
        build_mesh(&shapes::disk(Vec2::ZERO, 1.0, 128), &c).unwrap()
    });
    let k = assemble_kernel(&mesh).unwrap();
    let path = std::env::temp_dir().join(format!("drops2d-kernel-{}.bin", std::process::id()));
    k.write_binary(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(&bytes[..8], b"DRKERN01");
    assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize, k.n());
    assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 0.2);
    assert_eq!(bytes.len(), 24 + 8 * k.n() * k.n());
    assert_eq!(f64::from_le_bytes(bytes[24..32].try_into().unwrap()), k.get(0, 0));
}

/// In-plane potential of the unit-disk equilibrium density
/// 1/(2π√(1 − r²)) at (ρ, 0), by polar quadrature with r = sin φ.
fn disk_potential_oracle(rho: f64) -> f64 {
    let gl = gauss_legendre(48);
    let mut v = 0.0;
    for &(u, wu) in &gl {
        let phi = 0.5 * PI * u;
        let r = phi.sin();
        for &(t, wt) in &gl {
            // θ over [0, π], doubled by symmetry
            let th = PI * t;
            let d = (rho * rho + r * r - 2.0 * rho * r * th.cos()).sqrt();
            v += wu * wt * r / d;
        }
    }
    // density · r dr dθ with dr = cos φ dφ cancels the √(1 − r²)
    v * (0.5 * PI) * PI * 2.0 / (2.0 * PI)
}

#[test]
fn disk_potential_oracle_reproduces_arcsin() {
    for rho in [1.5, 2.0, 4.0] {
        assert_relative_eq!(disk_potential_oracle(rho), (1.0 / rho).asin(), max_relative = 1e-8);
    }
}

#[test]
fn equilibrium_potential_on_the_unit_disk() {
    let sol = solve_region(
        &shapes::disk(Vec2::ZERO, 1.0, 512),
        &MeshConfig::new(0.03).refined(true),
    )
    .unwrap();
    let v0 = potential_at(&sol.mesh, &sol.masses, Vec2::ZERO);
    assert!((v0 - FRAC_PI_2).abs() / FRAC_PI_2 < 0.015, "v(0) = {v0}");
    for x in [
        Vec2::new(2.0, 0.0),
        Vec2::new(0.0, -2.0),
        Vec2::new(2f64.sqrt(), 2f64.sqrt()),
    ] {
        let v = potential_at(&sol.mesh, &sol.masses, x);
        let oracle = disk_potential_oracle(2.0);
        assert!((v - oracle).abs() / oracle < 0.015, "v({x:?}) = {v}, oracle {oracle}");
        assert!((v - 0.5f64.asin()).abs() / 0.5f64.asin() < 0.015);
    }
    let far = Vec2::new(600.0, 800.0);
    let v = potential_at(&sol.mesh, &sol.masses, far);
    assert!((v * far.norm() - 1.0).abs() < 0.01);
}

#[test]
fn disk_energy_converges_under_refinement() {
    let disk = shapes::disk(Vec2::ZERO, 1.0, 512);
    let a = solve_region(&disk, &MeshConfig::new(0.06)).unwrap().i1;
    let b = solve_region(&disk, &MeshConfig::new(0.03)).unwrap().i1;
    assert!((a - b).abs() / b < 0.01, "I1(h) = {a}, I1(h/2) = {b}");
}

#[test]
fn transported_mesh_matches_scaled_mesh() {
    let disk = shapes::disk(Vec2::ZERO, 1.0, 128);
    let mesh = build_mesh(&disk, &MeshConfig::new(0.06)).unwrap();
    let s = 1.02;
    let moved = mesh.transported(disk.scaled_about(Vec2::ZERO, s), |x| x * s, |_| s * s);
    let a = solve_mesh(&moved).unwrap().i1;
    let b = solve_mesh(&mesh.scaled(s)).unwrap().i1;
    let c = solve_mesh(&mesh).unwrap().i1;
    assert_relative_eq!(a, b, max_relative = 1e-10);
    assert_relative_eq!(a * s, c, max_relative = 1e-10);
}

fn star(seed: u64) -> Region {
    let mut rng = CounterRng::new(seed);
    shapes::random_star(&mut rng, Vec2::new(0.2, -0.1), 1.0, 0.3, 64).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn mesh_invariants_on_random_stars(seed in any::<u64>(), refine in any::<bool>()) {
        let region = star(seed);
        let h = 0.05;
        let mesh = build_mesh(&region, &MeshConfig::new(h).refined(refine)).unwrap();
        let a = region.area();
        prop_assert!((mesh.total_area() - a).abs() / a < 5e-3);
        for i in 0..mesh.len() {
            prop_assert!(region.contains(mesh.center(i)));
            let c = mesh.cells[i];
            prop_assert!(c.area > 0.0);
            if c.boundary {
                prop_assert!(c.area <= h * h * (1.0 + 1e-12));
            }
        }
    }
}
