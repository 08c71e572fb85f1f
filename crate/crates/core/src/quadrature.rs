//! Composite Gauss quadrature on triangles.
//!
//! Each triangle is split uniformly into `4^level` children and integrated with
//! a collapsed (Duffy) tensor Gauss–Legendre rule. Two consecutive levels give
//! the value (finer) and an error estimate (their difference).

use crate::geom::{triangle_area, Point};
use crate::mesh::{overlay, Triangulation};
use crate::numeric::{CompensatedSum, Estimate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureParams {
    /// Gauss points per direction.
    pub order: usize,
    /// Coarse subdivision level; the estimate also uses `level + 1`.
    pub level: u32,
    /// Relative tolerance that the two levels must meet (times 10).
    pub tol: f64,
    /// Cells per domain diameter when the integrand has no natural pieces.
    pub base_resolution: usize,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        Self { order: 4, level: 0, tol: 1e-6, base_resolution: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadratureError {
    #[error("quadrature levels disagree: {coarse} vs {fine} (tolerance {tol})")]
    Unstable { coarse: f64, fine: f64, tol: f64 },
    #[error("integrand is not finite at ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
    #[error("invalid quadrature parameters: {0}")]
    InvalidParams(String),
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Barycentric rule on a triangle: `(λ1, λ2, weight)` with weights summing to 1.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    points: Vec<(f64, f64, f64)>,
}

impl TriangleRule {
    pub fn collapsed(order: usize) -> Self {
        let gl = gauss_legendre(order);
        let mut points = Vec::with_capacity(order * order);
        for &(u, wu) in &gl {
            for &(v, wv) in &gl {
                // (u, v) ↦ λ1 = u (1 − v), λ2 = u v, Jacobian 2u relative to the triangle
                points.push((u * (1.0 - v), u * v, 2.0 * u * wu * wv));
            }
        }
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn nodes<'a>(&'a self, t: &'a [Point; 3]) -> impl Iterator<Item = (Point, f64)> + 'a {
        let (e1, e2) = (t[1] - t[0], t[2] - t[0]);
        self.points.iter().map(move |&(l1, l2, w)| (t[0] + e1 * l1 + e2 * l2, w))
    }

    /// `∫_t f`, unsubdivided.
    pub fn integrate(&self, t: &[Point; 3], f: &impl Fn(Point) -> f64) -> f64 {
        let area = triangle_area(t);
        let mut s = CompensatedSum::new();
        for (p, w) in self.nodes(t) {
            s.add(w * f(p));
        }
        area * s.value()
    }
}

/// The `4^level` midpoint children of `t`, in a fixed order.
pub fn subdivide(t: &[Point; 3], level: u32) -> Vec<[Point; 3]> {
    let mut cur = vec![*t];
    for _ in 0..level {
        let mut next = Vec::with_capacity(cur.len() * 4);
        for [a, b, c] in cur {
            let (ab, bc, ca) = (a.midpoint(b), b.midpoint(c), c.midpoint(a));
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [bc, ca, ab]]);
        }
        cur = next;
    }
    cur
}

/// Every node used by the coarse and fine levels on `t`.
pub fn sample_nodes(t: &[Point; 3], params: &QuadratureParams) -> Vec<Point> {
    let rule = TriangleRule::collapsed(params.order);
    let mut out = Vec::new();
    for level in [params.level, params.level + 1] {
        for child in subdivide(t, level) {
            out.extend(rule.nodes(&child).map(|(p, _)| p));
        }
    }
    out
}

fn check(params: &QuadratureParams) -> Result<(), QuadratureError> {
    if params.order == 0 || params.order > 32 || params.level > 8 || !(params.tol > 0.0) {
        return Err(QuadratureError::InvalidParams(format!("{params:?}")));
    }
    Ok(())
}

/// Integrates `f(p, tag)` over tagged triangles. The tag lets the integrand
/// know which piece of a piecewise-defined function it is in.
pub fn integrate_tagged<F>(cells: &[([Point; 3], usize)], params: &QuadratureParams, f: F) -> Result<Estimate, QuadratureError>
where
    F: Fn(Point, usize) -> f64 + Sync,
{
    check(params)?;
    let rule = TriangleRule::collapsed(params.order);
    let per_cell: Vec<Result<(f64, f64), QuadratureError>> = cells
        .par_iter()
        .map(|(t, tag)| {
            let mut lv = [0.0; 2];
            for (slot, level) in [params.level, params.level + 1].into_iter().enumerate() {
                let mut s = CompensatedSum::new();
                for child in subdivide(t, level) {
                    let area = triangle_area(&child);
                    let mut inner = CompensatedSum::new();
                    for (p, w) in rule.nodes(&child) {
                        let v = f(p, *tag);
                        if !v.is_finite() {
                            return Err(QuadratureError::NonFinite { x: p.x, y: p.y });
                        }
                        inner.add(w * v);
                    }
                    s.add(area * inner.value());
                }
                lv[slot] = s.value();
            }
            Ok((lv[0], lv[1]))
        })
        .collect();
    let (mut coarse, mut fine, mut area) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
    for (r, (t, _)) in per_cell.into_iter().zip(cells) {
        let (c, f) = r?;
        coarse.add(c);
        fine.add(f);
        area.add(triangle_area(t));
    }
    let (c, f) = (coarse.value(), fine.value());
    let error = (f - c).abs();
    let scale = f.abs().max(1e-12 * area.value());
    if error > 10.0 * params.tol * scale {
        return Err(QuadratureError::Unstable { coarse: c, fine: f, tol: params.tol });
    }
    Ok(Estimate { value: f, error })
}

pub fn integrate<F>(cells: &[[Point; 3]], params: &QuadratureParams, f: F) -> Result<Estimate, QuadratureError>
where
    F: Fn(Point) -> f64 + Sync,
{
    let tagged: Vec<([Point; 3], usize)> = cells.iter().map(|&t| (t, 0)).collect();
    integrate_tagged(&tagged, params, |p, _| f(p))
}

/// Cells of `mesh`, cut by `pieces` when given; tags are mesh triangle indices.
pub fn mesh_cells(mesh: &Triangulation, pieces: Option<&Triangulation>) -> Vec<([Point; 3], usize)> {
    match pieces {
        None => (0..mesh.num_triangles()).map(|t| (mesh.triangle_points(t), t)).collect(),
        Some(p) => {
            let ov = overlay(mesh, p);
            let mut out = Vec::with_capacity(ov.len() * 2);
            for c in &ov.cells {
                out.extend(c.triangles().map(|t| (t, c.parent_a)));
            }
            out
        }
    }
}
