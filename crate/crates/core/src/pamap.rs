//! Piecewise affine maps on a triangulation.
//!
//! A map is stored as its source mesh plus one image point per vertex. The
//! affine piece of each triangle is derived once; gradients, energies and the
//! inverse all come from those pieces. Because the inverse reuses the same
//! connectivity, the forward and inverse energies agree triangle by triangle:
//! `|A| area(T) = |det A| |A⁻¹| area(T) = |A⁻¹| area(A T)`.

use crate::geom::{loop_signed_area, triangle_area, Point};
use crate::linalg2::{Mat2, NormKind};
use crate::mesh::io::{parse_records, records_to_triangulation, write_triangulation};
use crate::mesh::predicates::{on_segment, orientation, segments_intersect, Orientation};
use crate::mesh::{overlay, MeshError, Triangulation};
use crate::numeric::{CompensatedSum, Estimate};
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PaMapError {
    #[error("point ({x}, {y}) is outside the source domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("map is not a homeomorphism: {0}")]
    NotHomeomorphism(String),
    #[error("{images} image vertices for {vertices} source vertices")]
    VertexCountMismatch { vertices: usize, images: usize },
    #[error("maps have different source domains (areas {0} and {1})")]
    DomainMismatch(f64, f64),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// `x ↦ a x + b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Affine {
    pub a: Mat2,
    pub b: Point,
}

impl Affine {
    pub const IDENTITY: Affine = Affine { a: Mat2::IDENTITY, b: Point::new(0.0, 0.0) };

    pub fn apply(&self, p: Point) -> Point {
        self.a.mul_vec(p) + self.b
    }

    /// The affine map sending `src[k]` to `dst[k]`.
    ///
    /// The linear part is `P adj(E) / det(E)` with edge matrices `E`, `P`, so
    /// when `dst == src` the result is the identity bit for bit.
    pub fn from_triangles(src: &[Point; 3], dst: &[Point; 3]) -> Affine {
        let e = Mat2::from_cols(src[1] - src[0], src[2] - src[0]);
        let p = Mat2::from_cols(dst[1] - dst[0], dst[2] - dst[0]);
        let det = e.det();
        let m = p * e.adjugate();
        let a = Mat2::new(m.a11 / det, m.a12 / det, m.a21 / det, m.a22 / det);
        Affine { a, b: dst[0] - a.mul_vec(src[0]) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomeoReport {
    pub is_homeomorphism: bool,
    pub min_jacobian: f64,
    pub orientation_violations: Vec<usize>,
    pub boundary_simple: bool,
}

#[derive(Clone, Debug)]
pub struct PAMap {
    source: Triangulation,
    image: Vec<Point>,
    pieces: Vec<Affine>,
}

impl PAMap {
    pub fn new(source: Triangulation, image: Vec<Point>) -> Result<Self, PaMapError> {
        if image.len() != source.num_vertices() {
            return Err(PaMapError::VertexCountMismatch { vertices: source.num_vertices(), images: image.len() });
        }
        let pieces = source
            .triangles()
            .iter()
            .enumerate()
            .map(|(t, tri)| Affine::from_triangles(&source.triangle_points(t), &tri.map(|v| image[v])))
            .collect();
        Ok(Self { source, image, pieces })
    }

    pub fn identity(source: Triangulation) -> Self {
        let image = source.vertices().to_vec();
        Self::new(source, image).expect("same vertex count")
    }

    /// Interpolates `f` at the source vertices.
    pub fn from_fn(source: Triangulation, f: impl Fn(Point) -> Point) -> Self {
        let image = source.vertices().iter().map(|&p| f(p)).collect();
        Self::new(source, image).expect("same vertex count")
    }

    pub fn source(&self) -> &Triangulation {
        &self.source
    }

    pub fn image_vertices(&self) -> &[Point] {
        &self.image
    }

    pub fn pieces(&self) -> &[Affine] {
        &self.pieces
    }

    pub fn num_triangles(&self) -> usize {
        self.source.num_triangles()
    }

    pub fn image_triangle(&self, t: usize) -> [Point; 3] {
        self.source.triangles()[t].map(|v| self.image[v])
    }

    /// Image vertices with the source connectivity (not validated).
    pub fn image_triangulation(&self) -> Result<Triangulation, PaMapError> {
        Ok(self.source.with_vertices(self.image.clone())?)
    }

    pub fn gradient(&self, t: usize) -> Mat2 {
        self.pieces[t].a
    }

    pub fn jacobian(&self, t: usize) -> f64 {
        self.pieces[t].a.det()
    }

    /// Evaluates through triangle `t`; vertices map exactly to their images.
    pub fn eval_in(&self, t: usize, p: Point) -> Point {
        let tri = self.source.triangles()[t];
        for v in tri {
            if self.source.vertices()[v] == p {
                return self.image[v];
            }
        }
        self.pieces[t].apply(p)
    }

    pub fn eval(&self, p: Point) -> Result<Point, PaMapError> {
        let t = self.source.locate(p).ok_or(PaMapError::OutsideDomain { x: p.x, y: p.y })?;
        Ok(self.eval_in(t, p))
    }

    pub fn validate_homeomorphism(&self) -> HomeoReport {
        let mut min_jacobian = f64::INFINITY;
        let mut violations = Vec::new();
        for t in 0..self.num_triangles() {
            let [a, b, c] = self.image_triangle(t);
            if orientation(a, b, c) != Orientation::Positive {
                violations.push(t);
            }
            min_jacobian = min_jacobian.min(self.jacobian(t));
        }
        if self.num_triangles() == 0 {
            min_jacobian = 0.0;
        }
        let boundary_simple = self.boundary_image_simple();
        HomeoReport {
            is_homeomorphism: violations.is_empty() && boundary_simple && min_jacobian > 0.0,
            min_jacobian,
            orientation_violations: violations,
            boundary_simple,
        }
    }

    /// Image boundary loops are simple, pairwise disjoint and keep their orientation.
    fn boundary_image_simple(&self) -> bool {
        let loops = self.source.boundary();
        for (k, l) in loops.iter().enumerate() {
            let src = loop_signed_area(&self.source.boundary_loop_points(k));
            let img: Vec<Point> = l.iter().map(|&v| self.image[v]).collect();
            let dst = loop_signed_area(&img);
            if dst == 0.0 || (src > 0.0) != (dst > 0.0) {
                return false;
            }
        }
        // (x_min, x_max, loop, position, a, b)
        let mut segs = Vec::new();
        for (li, l) in loops.iter().enumerate() {
            for i in 0..l.len() {
                let (a, b) = (self.image[l[i]], self.image[l[(i + 1) % l.len()]]);
                if a == b {
                    return false;
                }
                segs.push((a.x.min(b.x), a.x.max(b.x), li, i, a, b));
            }
        }
        segs.sort_by(|s, t| s.0.total_cmp(&t.0));
        for i in 0..segs.len() {
            let (_, xmax, la, ia, a0, a1) = segs[i];
            for &(xmin_b, _, lb, ib, b0, b1) in &segs[i + 1..] {
                if xmin_b > xmax {
                    break;
                }
                if a0.y.max(a1.y) < b0.y.min(b1.y) || b0.y.max(b1.y) < a0.y.min(a1.y) {
                    continue;
                }
                if !segments_intersect(a0, a1, b0, b1) {
                    continue;
                }
                let n = loops[la].len();
                if la == lb && n > 2 && ((ia + 1) % n == ib || (ib + 1) % n == ia) {
                    // consecutive: only the shared vertex may be common
                    let (p, q) = if (ia + 1) % n == ib { (a0, b1) } else { (a1, b0) };
                    if on_segment(p, b0, b1) || on_segment(q, a0, a1) {
                        return false;
                    }
                    continue;
                }
                return false;
            }
        }
        true
    }

    /// Same connectivity, source and image swapped.
    pub fn invert(&self) -> Result<PAMap, PaMapError> {
        let rep = self.validate_homeomorphism();
        if !rep.is_homeomorphism {
            return Err(PaMapError::NotHomeomorphism(format!(
                "{} inverted triangles, boundary simple = {}",
                rep.orientation_violations.len(),
                rep.boundary_simple
            )));
        }
        Ok(self.invert_unchecked())
    }

    pub(crate) fn invert_unchecked(&self) -> PAMap {
        let source = self.source.with_vertices(self.image.clone()).expect("same vertex count");
        PAMap::new(source, self.source.vertices().to_vec()).expect("same vertex count")
    }

    /// Per-triangle `|A_T| area(T)`.
    pub fn energy_density(&self, kind: NormKind) -> Vec<f64> {
        (0..self.num_triangles())
            .map(|t| self.pieces[t].a.norm(kind) * triangle_area(&self.source.triangle_points(t)))
            .collect()
    }

    /// `∫ |Du|` over the source, exactly up to summation rounding.
    pub fn w11_energy(&self, kind: NormKind) -> f64 {
        let mut s = CompensatedSum::new();
        for e in self.energy_density(kind) {
            s.add(e);
        }
        s.value()
    }

    /// Energy restricted to a subset of triangles.
    pub fn w11_energy_on(&self, kind: NormKind, triangles: impl IntoIterator<Item = usize>) -> f64 {
        let mut s = CompensatedSum::new();
        for t in triangles {
            s.add(self.pieces[t].a.norm(kind) * triangle_area(&self.source.triangle_points(t)));
        }
        s.value()
    }

    /// `|∫|Du| − ∫|Du⁻¹||`.
    pub fn energy_identity_gap(&self, kind: NormKind) -> Result<f64, PaMapError> {
        let inv = self.invert()?;
        Ok((self.w11_energy(kind) - inv.w11_energy(kind)).abs())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        write_triangulation(&self.source, &mut s);
        for w in &self.image {
            let _ = writeln!(s, "w {} {}", w.x, w.y);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, PaMapError> {
        let rec = parse_records(text)?;
        let t = records_to_triangulation(&rec)?;
        PAMap::new(t, rec.images)
    }
}

/// `∫ |Du₁ − Du₂|` over the common refinement of the two source meshes.
///
/// The error bound covers slivers dropped by the overlay.
pub fn l1_gradient_distance(m1: &PAMap, m2: &PAMap, kind: NormKind) -> Result<Estimate, PaMapError> {
    let (a1, a2) = (m1.source.area(), m2.source.area());
    if (a1 - a2).abs() > 1e-9 * a1.max(a2) {
        return Err(PaMapError::DomainMismatch(a1, a2));
    }
    let ov = overlay(&m1.source, &m2.source);
    let mut s = CompensatedSum::new();
    let mut max_gap: f64 = 0.0;
    for c in &ov.cells {
        let g = (m1.pieces[c.parent_a].a - m2.pieces[c.parent_b].a).norm(kind);
        max_gap = max_gap.max(g);
        s.add(g * c.area);
    }
    Ok(Estimate { value: s.value(), error: ov.discarded_area * max_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_grid(n: usize) -> Triangulation {
        Triangulation::grid(0.0, 0.0, 1.0, 1.0, n, n)
    }

    /// Moves interior vertices by at most `amp` cell sizes; small `amp` keeps it injective.
    fn perturbed(n: usize, amp: f64, seed: u64) -> PAMap {
        let t = unit_grid(n);
        let boundary = t.is_boundary_vertex();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 1.0 / n as f64;
        let image = t
            .vertices()
            .iter()
            .zip(&boundary)
            .map(|(&p, &b)| {
                if b {
                    p
                } else {
                    p + Point::new(rng.gen_range(-amp..amp) * h, rng.gen_range(-amp..amp) * h)
                }
            })
            .collect();
        PAMap::new(t, image).unwrap()
    }

    #[test]
    fn identity_examples() {
        let m = PAMap::identity(unit_grid(4));
        let p = Point::new(0.3141, 0.2718);
        assert_eq!(m.eval(p).unwrap(), p);
        assert_eq!(m.gradient(3), Mat2::IDENTITY);
        assert!(m.validate_homeomorphism().is_homeomorphism);
        assert!((m.w11_energy(NormKind::Frobenius) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.energy_identity_gap(NormKind::Frobenius).unwrap(), 0.0);
        let inv = m.invert().unwrap();
        assert_eq!(inv.eval(p).unwrap(), p);
    }

    #[test]
    fn stretch_examples() {
        let m = PAMap::from_fn(unit_grid(3), |p| Point::new(2.0 * p.x, p.y));
        assert_eq!(m.eval(Point::new(0.5, 0.5)).unwrap(), Point::new(1.0, 0.5));
        let g = m.gradient(0);
        assert!((g - Mat2::diag(2.0, 1.0)).frobenius() < 1e-15);
        assert!((m.w11_energy(NormKind::Frobenius) - 5f64.sqrt()).abs() < 1e-14);
        let inv = m.invert().unwrap();
        assert!((inv.gradient(0) - Mat2::diag(0.5, 1.0)).frobenius() < 1e-15);
        let q = inv.eval(Point::new(1.2, 0.4)).unwrap();
        assert!((q - Point::new(0.6, 0.4)).norm() < 1e-15);
    }

    #[test]
    fn shear_gap_vanishes() {
        let m = PAMap::from_fn(unit_grid(2), |p| Point::new(p.x + 2.0 * p.y, p.y));
        assert!(m.energy_identity_gap(NormKind::Frobenius).unwrap() < 1e-12);
        assert!(m.energy_identity_gap(NormKind::Operator).unwrap() < 1e-12);
    }

    #[test]
    fn zero_map_has_zero_energy() {
        let m = PAMap::from_fn(unit_grid(2), |_| Point::new(0.3, 0.3));
        assert_eq!(m.w11_energy(NormKind::Frobenius), 0.0);
        assert_eq!(m.jacobian(0), 0.0);
        assert!(!m.validate_homeomorphism().is_homeomorphism);
    }

    #[test]
    fn flipped_triangle_is_reported() {
        let t = unit_grid(2);
        let mut image = t.vertices().to_vec();
        // center vertex pushed past the right edge of its neighbours
        let c = t.vertices().iter().position(|&p| p == Point::new(0.5, 0.5)).unwrap();
        image[c] = Point::new(1.2, 0.5);
        let m = PAMap::new(t, image).unwrap();
        let rep = m.validate_homeomorphism();
        assert!(!rep.is_homeomorphism);
        assert!(!rep.orientation_violations.is_empty());
        assert!(rep.boundary_simple);
        assert!(m.invert().is_err());
    }

    #[test]
    fn folding_square_onto_half() {
        // four triangles around the bottom/top midpoints; x ↦ |x − 1/2|
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(0.5, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.5, 1.0),
            Point::new(0.0, 1.0),
        ];
        let t = Triangulation::new(v, vec![[0, 1, 4], [0, 4, 5], [1, 2, 3], [1, 3, 4]]).unwrap();
        let m = PAMap::from_fn(t, |p| Point::new((p.x - 0.5).abs(), p.y));
        let rep = m.validate_homeomorphism();
        assert!(!rep.is_homeomorphism);
        assert!(!rep.boundary_simple);
        // brute force: two distinct points share an image
        let a = m.eval(Point::new(0.25, 0.5)).unwrap();
        let b = m.eval(Point::new(0.75, 0.5)).unwrap();
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn l1_distance_examples() {
        let id = PAMap::identity(unit_grid(3));
        let st = PAMap::from_fn(unit_grid(5), |p| Point::new(2.0 * p.x, p.y));
        let d = l1_gradient_distance(&id, &st, NormKind::Frobenius).unwrap();
        assert!((d.value - 1.0).abs() < 1e-12);
        assert_eq!(l1_gradient_distance(&id, &id, NormKind::Frobenius).unwrap().value, 0.0);
    }

    #[test]
    fn l1_distance_single_triangle_change() {
        let t = unit_grid(2);
        let m1 = PAMap::identity(t.clone());
        let mut image = t.vertices().to_vec();
        let c = t.vertices().iter().position(|&p| p == Point::new(0.5, 0.5)).unwrap();
        image[c] = Point::new(0.55, 0.5);
        let m2 = PAMap::new(t.clone(), image).unwrap();
        let mut expect = 0.0;
        for k in 0..t.num_triangles() {
            expect += (m2.gradient(k) - Mat2::IDENTITY).frobenius() * t.signed_area(k);
        }
        let d = l1_gradient_distance(&m1, &m2, NormKind::Frobenius).unwrap();
        assert!((d.value - expect).abs() < 1e-14);
    }

    #[test]
    fn text_round_trip() {
        let m = perturbed(4, 0.15, 9);
        let back = PAMap::from_text(&m.to_text()).unwrap();
        assert_eq!(back.image_vertices(), m.image_vertices());
        assert_eq!(back.to_text(), m.to_text());
    }

    proptest! {
        #[test]
        fn energy_identity_and_round_trip(n in 1usize..12, seed in 0u64..1000) {
            let m = perturbed(n, 0.15, seed);
            prop_assert!(m.validate_homeomorphism().is_homeomorphism);
            for kind in NormKind::ALL {
                let e = m.w11_energy(kind);
                prop_assert!(m.energy_identity_gap(kind).unwrap() <= 1e-9 * e);
            }
            let fro = m.w11_energy(NormKind::Frobenius);
            let op = m.w11_energy(NormKind::Operator);
            prop_assert!(op <= fro * (1.0 + 1e-15) && fro <= 2f64.sqrt() * op * (1.0 + 1e-15));
            let inv = m.invert().unwrap();
            let back = inv.invert().unwrap();
            for (a, b) in back.image_vertices().iter().zip(m.image_vertices()) {
                prop_assert!((*a - *b).norm() <= 1e-12);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..50 {
                let p = Point::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
                let q = inv.eval(m.eval(p).unwrap()).unwrap();
                prop_assert!((q - p).norm() <= 1e-9);
            }
        }

        #[test]
        fn l1_distance_is_a_metric(seed in 0u64..500) {
            let a = perturbed(3, 0.15, seed);
            let b = perturbed(4, 0.15, seed + 1);
            let c = perturbed(5, 0.15, seed + 2);
            let k = NormKind::Frobenius;
            let ab = l1_gradient_distance(&a, &b, k).unwrap().value;
            let ba = l1_gradient_distance(&b, &a, k).unwrap().value;
            let bc = l1_gradient_distance(&b, &c, k).unwrap().value;
            let ac = l1_gradient_distance(&a, &c, k).unwrap().value;
            prop_assert!((ab - ba).abs() <= 1e-12);
            prop_assert!(ac <= ab + bc + 1e-12);
        }
    }
}
