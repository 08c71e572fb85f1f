use bisobolev::geom::Point;
use bisobolev::mesh::{
    overlay, r_tiling, triangulate, triangulate_domain, GradingParams, MeshError, Polygon, Triangulation,
};
use proptest::prelude::*;

/// Vertices on the unit circle around (0.5, 0.5) at jittered angles; always convex.
fn convex_polygon(n: usize, jitter: &[f64], radius: f64) -> Polygon {
    let pts = (0..n)
        .map(|k| {
            let t = (k as f64 + 0.4 * jitter[k]) / n as f64 * std::f64::consts::TAU;
            Point::new(0.5 + radius * t.cos(), 0.5 + radius * t.sin())
        })
        .collect();
    Polygon::new(pts, vec![]).unwrap()
}

fn mesh_area(t: &Triangulation) -> f64 {
    (0..t.num_triangles()).map(|k| t.signed_area(k)).sum()
}

fn interiors_overlap(a: &bisobolev::mesh::Square, b: &bisobolev::mesh::Square) -> bool {
    let (amin, amax, bmin, bmax) = (a.min(), a.max(), b.min(), b.max());
    amin.x < bmax.x && bmin.x < amax.x && amin.y < bmax.y && bmin.y < amax.y
}

#[test]
fn single_tile_domain_gives_two_triangles() {
    // spacing larger than the square: one cell, split once
    let d = Polygon::rect(-0.5, -0.5, 0.5, 0.5).unwrap();
    let t = triangulate_domain(&d, 2.0).unwrap();
    assert_eq!(t.num_triangles(), 2);
}

#[test]
fn domain_with_hole_has_two_boundary_loops() {
    let d = Polygon::square_with_hole();
    let tiling = r_tiling(&d, 1.0 / 32.0).unwrap();
    let t = triangulate(&d, &tiling, GradingParams::default()).unwrap();
    t.validate(Some(&d)).unwrap();
    assert_eq!(t.boundary().len(), 2);
    assert!((mesh_area(&t) - d.area()).abs() < 1e-12 * d.area());
}

#[test]
fn tile_count_lower_bounds_triangles() {
    let d = Polygon::unit_square();
    let tiling = r_tiling(&d, 0.1).unwrap();
    assert_eq!(tiling.len(), 49);
    let t = triangulate(&d, &tiling, GradingParams::default()).unwrap();
    assert!(t.num_triangles() >= 98);
}

#[test]
fn coarse_tiling_is_empty() {
    assert!(matches!(r_tiling(&Polygon::unit_square(), 0.5), Err(MeshError::EmptyTiling { .. })));
}

#[test]
fn uncovered_area_shrinks_on_convex_domains() {
    for d in [Polygon::unit_square(), convex_polygon(7, &[0.1, -0.3, 0.2, 0.0, 0.4, -0.1, 0.3], 0.5)] {
        let mut prev = f64::INFINITY;
        for k in 3..8 {
            let r = 1.0 / (1u32 << k) as f64;
            let u = r_tiling(&d, r).map(|t| t.uncovered_area).unwrap_or(d.area());
            assert!(u <= prev + 1e-15, "r = {r}: {u} > {prev}");
            prev = u;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tilings_are_disjoint_and_compactly_contained(
        n in 3usize..9,
        jitter in prop::collection::vec(-1.0f64..1.0, 9),
        k in 3u32..6,
    ) {
        let d = convex_polygon(n, &jitter, 0.5);
        let r = 1.0 / (1u32 << k) as f64;
        let Ok(tiling) = r_tiling(&d, r) else { return Ok(()) };
        for (i, a) in tiling.squares.iter().enumerate() {
            let big = a.scaled(3.0);
            prop_assert!(big.corners().iter().all(|&c| d.contains(c) && !d.on_boundary(c)));
            for b in &tiling.squares[i + 1..] {
                prop_assert!(!interiors_overlap(a, b));
            }
        }
        let covered: f64 = tiling.squares.iter().map(|s| s.area()).sum();
        prop_assert!((covered + tiling.uncovered_area - d.area()).abs() < 1e-12);
    }

    #[test]
    fn meshes_of_convex_domains_conform(
        n in 3usize..9,
        jitter in prop::collection::vec(-1.0f64..1.0, 9),
        k in 3u32..6,
    ) {
        let d = convex_polygon(n, &jitter, 0.5);
        let r = 1.0 / (1u32 << k) as f64;
        let tiling = r_tiling(&d, r).unwrap_or_else(|_| bisobolev::mesh::Tiling::empty(&d, r));
        let t = triangulate(&d, &tiling, GradingParams::default()).unwrap();
        t.validate(Some(&d)).unwrap();
        prop_assert!((mesh_area(&t) - d.area()).abs() < 1e-12 * d.area());
        for v in d.vertices() {
            prop_assert!(t.vertices().contains(&v));
        }
        // every tile is split into exactly two triangles
        let mut per_tile = vec![0usize; tiling.len()];
        for k in 0..t.num_triangles() {
            let c = t.centroid(k);
            if let Some(s) = tiling.squares.iter().position(|s| s.contains(c)) {
                let [a, b, e] = t.triangle_points(k);
                let (lo, hi) = (tiling.squares[s].min(), tiling.squares[s].max());
                let inside = |p: Point| p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
                prop_assert!(inside(a) && inside(b) && inside(e));
                per_tile[s] += 1;
            }
        }
        prop_assert!(per_tile.iter().all(|&c| c == 2));
    }

    #[test]
    fn overlay_area_is_symmetric(
        n in 3usize..8,
        jitter in prop::collection::vec(-1.0f64..1.0, 8),
        h1 in 0.08f64..0.4,
        h2 in 0.08f64..0.4,
    ) {
        let d = convex_polygon(n, &jitter, 0.5);
        let a = triangulate_domain(&d, h1).unwrap();
        let b = triangulate_domain(&d, h2).unwrap();
        let ab = overlay(&a, &b);
        let ba = overlay(&b, &a);
        prop_assert!((ab.area() - ba.area()).abs() <= 1e-12 * d.area());
        prop_assert!((ab.area() + ab.discarded_area - d.area()).abs() <= 1e-9 * d.area());
    }
}
