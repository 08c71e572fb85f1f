use super::predicates::{on_segment, segments_intersect};
use super::MeshError;
use crate::geom::{loop_signed_area, BBox, Point};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// Polygonal domain: counterclockwise outer loop, clockwise holes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    outer: Vec<Point>,
    holes: Vec<Vec<Point>>,
}

impl Polygon {
    /// Validates simplicity, orientation, nesting and positive area.
    pub fn new(outer: Vec<Point>, holes: Vec<Vec<Point>>) -> Result<Self, MeshError> {
        let poly = Self { outer, holes };
        poly.check()?;
        Ok(poly)
    }

    /// Accepts loops in any orientation and fixes them up before validating.
    pub fn new_normalized(mut outer: Vec<Point>, mut holes: Vec<Vec<Point>>) -> Result<Self, MeshError> {
        if loop_signed_area(&outer) < 0.0 {
            outer.reverse();
        }
        for h in &mut holes {
            if loop_signed_area(h) > 0.0 {
                h.reverse();
            }
        }
        Self::new(outer, holes)
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, MeshError> {
        if !(x1 > x0 && y1 > y0) {
            return Err(MeshError::InvalidPolygon(format!(
                "degenerate rectangle [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        Self::new(
            vec![
                Point::new(x0, y0),
                Point::new(x1, y0),
                Point::new(x1, y1),
                Point::new(x0, y1),
            ],
            vec![],
        )
    }

    pub fn unit_square() -> Self {
        Self::rect(0.0, 0.0, 1.0, 1.0).expect("unit square")
    }

    /// `[-1/2, 1/2]²`, inscribed in the unit disk.
    pub fn centered_square() -> Self {
        Self::rect(-0.5, -0.5, 0.5, 0.5).expect("centered square")
    }

    /// Unit square with the square hole `[3/8, 5/8]²`.
    pub fn square_with_hole() -> Self {
        let h = vec![
            Point::new(0.375, 0.375),
            Point::new(0.375, 0.625),
            Point::new(0.625, 0.625),
            Point::new(0.625, 0.375),
        ];
        Self::new(Self::unit_square().outer, vec![h]).expect("square with hole")
    }

    pub fn outer(&self) -> &[Point] {
        &self.outer
    }

    pub fn holes(&self) -> &[Vec<Point>] {
        &self.holes
    }

    pub fn loops(&self) -> impl Iterator<Item = &[Point]> {
        std::iter::once(self.outer.as_slice()).chain(self.holes.iter().map(|h| h.as_slice()))
    }

    pub fn vertices(&self) -> impl Iterator<Item = Point> + '_ {
        self.loops().flat_map(|l| l.iter().copied())
    }

    /// All boundary segments, loop by loop, in loop orientation.
    pub fn segments(&self) -> Vec<(Point, Point)> {
        let mut out = Vec::new();
        for l in self.loops() {
            for i in 0..l.len() {
                out.push((l[i], l[(i + 1) % l.len()]));
            }
        }
        out
    }

    pub fn area(&self) -> f64 {
        loop_signed_area(&self.outer) + self.holes.iter().map(|h| loop_signed_area(h)).sum::<f64>()
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(self.outer.iter())
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.outer.iter().enumerate() {
            for b in &self.outer[i + 1..] {
                d = d.max(a.dist(*b));
            }
        }
        d
    }

    pub fn on_boundary(&self, p: Point) -> bool {
        self.segments().iter().any(|&(a, b)| on_segment(p, a, b))
    }

    /// Strict interior test (boundary points are outside).
    pub fn contains(&self, p: Point) -> bool {
        if self.on_boundary(p) {
            return false;
        }
        self.winding(p) != 0
    }

    /// Interior or boundary.
    pub fn contains_closed(&self, p: Point) -> bool {
        self.on_boundary(p) || self.winding(p) != 0
    }

    fn winding(&self, p: Point) -> i32 {
        let mut w = 0;
        for (a, b) in self.segments() {
            if a.y <= p.y {
                if b.y > p.y && (b - a).cross(p - a) > 0.0 {
                    w += 1;
                }
            } else if b.y <= p.y && (b - a).cross(p - a) < 0.0 {
                w -= 1;
            }
        }
        w
    }

    /// Euclidean distance from `p` to the boundary.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.segments()
            .iter()
            .map(|&(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    fn check(&self) -> Result<(), MeshError> {
        let bad = |m: String| Err(MeshError::InvalidPolygon(m));
        for (k, l) in self.loops().enumerate() {
            if l.len() < 3 {
                return bad(format!("loop {k} has fewer than 3 vertices"));
            }
            if l.iter().any(|p| !p.is_finite()) {
                return bad(format!("loop {k} has non-finite coordinates"));
            }
        }
        if loop_signed_area(&self.outer) <= 0.0 {
            return bad("outer loop must be counterclockwise with positive area".into());
        }
        for (k, h) in self.holes.iter().enumerate() {
            if loop_signed_area(h) >= 0.0 {
                return bad(format!("hole {k} must be clockwise"));
            }
        }
        // every pair of boundary segments may only touch at a shared loop vertex
        let loops: Vec<&[Point]> = self.loops().collect();
        let mut segs = Vec::new();
        for (li, l) in loops.iter().enumerate() {
            for i in 0..l.len() {
                segs.push((li, i, l[i], l[(i + 1) % l.len()]));
            }
        }
        for (x, &(la, ia, a0, a1)) in segs.iter().enumerate() {
            for &(lb, ib, b0, b1) in &segs[x + 1..] {
                if !segments_intersect(a0, a1, b0, b1) {
                    continue;
                }
                let n = loops[la].len();
                let adjacent = la == lb && ((ia + 1) % n == ib || (ib + 1) % n == ia);
                if adjacent {
                    // consecutive edges share exactly one vertex; reject folding back
                    let shared = if (ia + 1) % n == ib { a1 } else { a0 };
                    let (p, q) = if (ia + 1) % n == ib { (a0, b1) } else { (a1, b0) };
                    if on_segment(p, shared, q) || on_segment(q, shared, p) {
                        return bad(format!("loop {la} folds back at vertex {shared:?}"));
                    }
                    continue;
                }
                return bad(format!("boundary segments cross near {a0:?}"));
            }
        }
        for (k, h) in self.holes.iter().enumerate() {
            let outer_only = Polygon { outer: self.outer.clone(), holes: vec![] };
            if !h.iter().all(|&p| outer_only.contains(p)) {
                return bad(format!("hole {k} is not inside the outer loop"));
            }
        }
        if self.area() <= 0.0 {
            return bad("polygon has no area".into());
        }
        Ok(())
    }
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.dist(a + d * t)
}

/// Named domains: `unit-square`, `centered-square`, `square-with-hole`,
/// `rect:x0=..,y0=..,x1=..,y1=..`.
impl FromStr for Polygon {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, MeshError> {
        let s = s.trim();
        let (name, params) = s.split_once(':').unwrap_or((s, ""));
        match name {
            "unit-square" | "unit_square" => Ok(Polygon::unit_square()),
            "centered-square" | "centered_square" => Ok(Polygon::centered_square()),
            "square-with-hole" | "square_with_hole" => Ok(Polygon::square_with_hole()),
            "rect" => {
                let mut v = [None; 4];
                for kv in params.split(',').filter(|t| !t.trim().is_empty()) {
                    let (k, val) = kv
                        .split_once('=')
                        .ok_or_else(|| MeshError::InvalidPolygon(format!("bad rect parameter `{kv}`")))?;
                    let x: f64 = val
                        .trim()
                        .parse()
                        .map_err(|_| MeshError::InvalidPolygon(format!("bad number `{val}`")))?;
                    let slot = match k.trim() {
                        "x0" => 0,
                        "y0" => 1,
                        "x1" => 2,
                        "y1" => 3,
                        other => return Err(MeshError::InvalidPolygon(format!("unknown rect key `{other}`"))),
                    };
                    v[slot] = Some(x);
                }
                match v {
                    [Some(x0), Some(y0), Some(x1), Some(y1)] => Polygon::rect(x0, y0, x1, y1),
                    _ => Err(MeshError::InvalidPolygon("rect needs x0, y0, x1, y1".into())),
                }
            }
            other => Err(MeshError::InvalidPolygon(format!("unknown domain `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_basics() {
        let sq = Polygon::unit_square();
        assert_eq!(sq.area(), 1.0);
        assert!(sq.contains(Point::new(0.5, 0.5)));
        assert!(!sq.contains(Point::new(1.0, 0.5)));
        assert!(sq.contains_closed(Point::new(1.0, 0.5)));
        assert!(!sq.contains_closed(Point::new(1.5, 0.5)));
    }

    #[test]
    fn hole_excluded() {
        let p = Polygon::square_with_hole();
        assert!((p.area() - (1.0 - 0.0625)).abs() < 1e-15);
        assert!(!p.contains(Point::new(0.5, 0.5)));
        assert!(p.contains(Point::new(0.1, 0.5)));
    }

    #[test]
    fn rejects_bad_loops() {
        let p = Point::new;
        // bow-tie
        let bowtie = vec![p(0.0, 0.0), p(1.0, 1.0), p(1.0, 0.0), p(0.0, 1.0)];
        assert!(Polygon::new(bowtie, vec![]).is_err());
        // clockwise outer
        let cw = vec![p(0.0, 0.0), p(0.0, 1.0), p(1.0, 1.0), p(1.0, 0.0)];
        assert!(Polygon::new(cw.clone(), vec![]).is_err());
        assert!(Polygon::new_normalized(cw, vec![]).is_ok());
    }

    #[test]
    fn parses_names() {
        assert_eq!("unit-square".parse::<Polygon>().unwrap(), Polygon::unit_square());
        let r: Polygon = "rect:x0=0,y0=0,x1=2,y1=1".parse().unwrap();
        assert_eq!(r.area(), 2.0);
        assert!("blob".parse::<Polygon>().is_err());
    }
}
