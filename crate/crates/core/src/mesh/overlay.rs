//! Common refinement of two triangulations of the same region.
//!
//! Every pair of overlapping triangles is clipped against each other; the
//! result is a list of convex cells, each lying inside exactly one triangle of
//! either input. Cells are not stitched into a conforming mesh: integrals of
//! quantities that are constant per input triangle only need the cell areas.

use super::{MeshError, Triangulation};
use crate::geom::{loop_signed_area, BBox, Point};
use crate::numeric::CompensatedSum;
use rayon::prelude::*;

/// Cells smaller than this fraction of the covered area are dropped.
pub const SLIVER_RELATIVE_AREA: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct OverlayCell {
    /// Convex, counterclockwise.
    pub polygon: Vec<Point>,
    pub area: f64,
    pub parent_a: usize,
    pub parent_b: usize,
}

impl OverlayCell {
    /// Fan triangulation of the cell from its first vertex.
    pub fn triangles(&self) -> impl Iterator<Item = [Point; 3]> + '_ {
        let p = &self.polygon;
        (1..p.len() - 1).map(move |k| [p[0], p[k], p[k + 1]])
    }
}

#[derive(Clone, Debug, Default)]
pub struct Overlay {
    pub cells: Vec<OverlayCell>,
    pub discarded_area: f64,
    pub discarded_count: usize,
}

impl Overlay {
    pub fn area(&self) -> f64 {
        let mut s = CompensatedSum::new();
        for c in &self.cells {
            s.add(c.area);
        }
        s.value()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `OverlayDegenerate` if any sliver was dropped.
    pub fn strict(self) -> Result<Self, MeshError> {
        if self.discarded_count > 0 {
            return Err(MeshError::OverlayDegenerate {
                count: self.discarded_count,
                discarded_area: self.discarded_area,
            });
        }
        Ok(self)
    }
}

/// Clips the convex counterclockwise polygon `poly` to the left side of `a → b`.
fn clip_half_plane(poly: &[Point], a: Point, b: Point, out: &mut Vec<Point>) {
    out.clear();
    let d = b - a;
    let side = |p: Point| d.cross(p - a);
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        let (sp, sq) = (side(p), side(q));
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp > 0.0 && sq < 0.0) || (sp < 0.0 && sq > 0.0) {
            let t = sp / (sp - sq);
            out.push(p.lerp(q, t));
        }
    }
}

/// Intersection of two counterclockwise triangles as a convex polygon.
pub fn clip_triangles(a: &[Point; 3], b: &[Point; 3]) -> Vec<Point> {
    let mut poly = a.to_vec();
    let mut buf = Vec::with_capacity(9);
    for k in 0..3 {
        clip_half_plane(&poly, b[k], b[(k + 1) % 3], &mut buf);
        std::mem::swap(&mut poly, &mut buf);
        if poly.len() < 3 {
            poly.clear();
            break;
        }
    }
    poly
}

/// Common refinement of `t1` and `t2`.
pub fn overlay(t1: &Triangulation, t2: &Triangulation) -> Overlay {
    let threshold = SLIVER_RELATIVE_AREA * t1.area().max(t2.area());
    let per_triangle: Vec<(Vec<OverlayCell>, f64, usize)> = (0..t1.num_triangles())
        .into_par_iter()
        .map(|ta| {
            let pa = t1.triangle_points(ta);
            let bb = BBox::of_points(pa.iter());
            let mut cands = t2.candidates(&bb);
            cands.sort_unstable();
            let mut cells = Vec::new();
            let mut lost = 0.0;
            let mut lost_n = 0;
            for tb in cands {
                let pb = t2.triangle_points(tb);
                let poly = clip_triangles(&pa, &pb);
                if poly.len() < 3 {
                    continue;
                }
                let area = loop_signed_area(&poly);
                if area <= 0.0 {
                    continue;
                }
                if area < threshold {
                    lost += area;
                    lost_n += 1;
                    continue;
                }
                cells.push(OverlayCell { polygon: poly, area, parent_a: ta, parent_b: tb });
            }
            (cells, lost, lost_n)
        })
        .collect();
    let mut out = Overlay::default();
    let mut lost = CompensatedSum::new();
    for (cells, l, n) in per_triangle {
        out.cells.extend(cells);
        lost.add(l);
        out.discarded_count += n;
    }
    out.discarded_area = lost.value();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square(diag_ll_ur: bool) -> Triangulation {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let t = if diag_ll_ur { vec![[0, 1, 2], [0, 2, 3]] } else { vec![[0, 1, 3], [1, 2, 3]] };
        Triangulation::new(v, t).unwrap()
    }

    #[test]
    fn self_overlay_preserves_area() {
        let t = Triangulation::grid(0.0, 0.0, 1.0, 1.0, 7, 5);
        let o = overlay(&t, &t);
        assert_eq!(o.len(), t.num_triangles());
        assert!((o.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_diagonals_give_four_cells() {
        let o = overlay(&square(true), &square(false));
        assert_eq!(o.len(), 4);
        for c in &o.cells {
            assert!((c.area - 0.25).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn grids_refine_each_other(nx in 1usize..9, ny in 1usize..9, mx in 1usize..9, my in 1usize..9) {
            let a = Triangulation::grid(0.0, 0.0, 1.0, 1.0, nx, ny);
            let b = Triangulation::grid(0.0, 0.0, 1.0, 1.0, mx, my);
            let ab = overlay(&a, &b);
            let ba = overlay(&b, &a);
            prop_assert!((ab.area() - 1.0).abs() < 1e-12);
            prop_assert!((ab.area() - ba.area()).abs() < 1e-12);
            // each cell sits inside both parents
            for c in &ab.cells {
                let n = c.polygon.len() as f64;
                let g = c.polygon.iter().fold(Point::new(0.0, 0.0), |acc, &p| acc + p * (1.0 / n));
                prop_assert!(crate::mesh::predicates::in_triangle_closed(g, &a.triangle_points(c.parent_a)));
                prop_assert!(crate::mesh::predicates::in_triangle_closed(g, &b.triangle_points(c.parent_b)));
            }
        }
    }
}
