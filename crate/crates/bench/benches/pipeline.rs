use bisobolev::geom::Point;
use bisobolev::linalg2::NormKind;
use bisobolev::maps::from_spec;
use bisobolev::mesh::{overlay, r_tiling, triangulate, triangulate_domain, GradingParams, Polygon, Triangulation};
use bisobolev::pamap::PAMap;
use bisobolev::pipeline::{build_approximant, ApproxParams};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn warped_grid(n: usize) -> PAMap {
    let t = Triangulation::grid(0.0, 0.0, 1.0, 1.0, n, n);
    PAMap::from_fn(t, |p| {
        let s = 0.05 * (std::f64::consts::PI * p.x).sin() * (std::f64::consts::PI * p.y).sin();
        Point::new(p.x + s, p.y + s)
    })
}

fn energies(c: &mut Criterion) {
    let mut g = c.benchmark_group("energy_identity");
    for n in [32, 128] {
        let m = warped_grid(n);
        g.bench_with_input(BenchmarkId::from_parameter(2 * n * n), &m, |b, m| {
            b.iter(|| black_box(m.energy_identity_gap(NormKind::Frobenius).unwrap()))
        });
    }
    g.finish();
}

fn meshing(c: &mut Criterion) {
    let d = Polygon::square_with_hole();
    let mut g = c.benchmark_group("triangulate");
    for k in [4u32, 6] {
        let r = 1.0 / (1u32 << k) as f64;
        let tiling = r_tiling(&d, r).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(format!("r=1/{}", 1u32 << k)), &tiling, |b, t| {
            b.iter(|| black_box(triangulate(&d, t, GradingParams::default()).unwrap()))
        });
    }
    g.finish();
}

fn overlays(c: &mut Criterion) {
    let d = Polygon::unit_square();
    let a = triangulate_domain(&d, 1.0 / 24.0).unwrap();
    let b = Triangulation::grid(0.0, 0.0, 1.0, 1.0, 17, 17);
    c.bench_function("overlay", |bch| bch.iter(|| black_box(overlay(&a, &b).area())));
}

fn approximants(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_approximant");
    g.sample_size(10);
    for spec in ["sine_warp:a=0.1", "radial:alpha=2"] {
        let o = from_spec(spec, None).unwrap();
        g.bench_function(spec, |b| {
            b.iter(|| black_box(build_approximant(o.as_ref(), 1.0 / 16.0, &ApproxParams::default()).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, energies, meshing, overlays, approximants);
criterion_main!(benches);
