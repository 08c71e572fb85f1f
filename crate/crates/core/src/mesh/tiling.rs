use super::{MeshError, Polygon};
use crate::geom::Point;
use serde::{Deserialize, Serialize};

/// Axis-aligned square `Q_side(center)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub center: Point,
    pub side: f64,
}

impl Square {
    pub fn new(center: Point, side: f64) -> Self {
        debug_assert!(side > 0.0);
        Self { center, side }
    }

    pub fn min(&self) -> Point {
        Point::new(self.center.x - 0.5 * self.side, self.center.y - 0.5 * self.side)
    }

    pub fn max(&self) -> Point {
        Point::new(self.center.x + 0.5 * self.side, self.center.y + 0.5 * self.side)
    }

    /// Corners counterclockwise from the lower-left.
    pub fn corners(&self) -> [Point; 4] {
        let (lo, hi) = (self.min(), self.max());
        [lo, Point::new(hi.x, lo.y), hi, Point::new(lo.x, hi.y)]
    }

    /// Concentric square with `factor` times the side.
    pub fn scaled(&self, factor: f64) -> Square {
        Square::new(self.center, self.side * factor)
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    pub fn contains(&self, p: Point) -> bool {
        let (lo, hi) = (self.min(), self.max());
        p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y
    }

    /// Points `((i + ½)/n, (j + ½)/n)` of the square, row by row.
    pub fn sample_grid(&self, n: usize) -> Vec<Point> {
        let lo = self.min();
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                out.push(Point::new(
                    lo.x + (i as f64 + 0.5) / n as f64 * self.side,
                    lo.y + (j as f64 + 0.5) / n as f64 * self.side,
                ));
            }
        }
        out
    }
}

/// The r-tiling of a domain: lattice squares whose tripled concentric square
/// sits at positive distance from the boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tiling {
    pub r: f64,
    pub squares: Vec<Square>,
    /// Lattice index `(i, j)` of each square: center `= (i r, j r)`.
    pub lattice: Vec<(i64, i64)>,
    pub uncovered_area: f64,
}

impl Tiling {
    pub fn empty(domain: &Polygon, r: f64) -> Self {
        Self {
            r,
            squares: Vec::new(),
            lattice: Vec::new(),
            uncovered_area: domain.area(),
        }
    }

    pub fn len(&self) -> usize {
        self.squares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }
}

/// Closed segment `[a, b]` meets the closed box `[lo, hi]` (Liang–Barsky).
pub(crate) fn segment_hits_box(a: Point, b: Point, lo: Point, hi: Point) -> bool {
    let d = b - a;
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    for (p, q) in [
        (-d.x, a.x - lo.x),
        (d.x, hi.x - a.x),
        (-d.y, a.y - lo.y),
        (d.y, hi.y - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// `Q_{3r}(center)` is compactly contained in the domain.
pub fn tripled_square_inside(domain: &Polygon, center: Point, r: f64) -> bool {
    let big = Square::new(center, 3.0 * r);
    let (lo, hi) = (big.min(), big.max());
    if !domain.contains(center) {
        return false;
    }
    !domain.segments().iter().any(|&(a, b)| segment_hits_box(a, b, lo, hi))
}

/// Builds the r-tiling; `EmptyTiling` when no lattice square qualifies.
pub fn r_tiling(domain: &Polygon, r: f64) -> Result<Tiling, MeshError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(MeshError::InvalidParameter(format!("tile size must be positive, got {r}")));
    }
    let bb = domain.bbox();
    let i0 = ((bb.min.x + 1.5 * r) / r).ceil() as i64;
    let i1 = ((bb.max.x - 1.5 * r) / r).floor() as i64;
    let j0 = ((bb.min.y + 1.5 * r) / r).ceil() as i64;
    let j1 = ((bb.max.y - 1.5 * r) / r).floor() as i64;
    let mut squares = Vec::new();
    let mut lattice = Vec::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            let c = Point::new(i as f64 * r, j as f64 * r);
            if tripled_square_inside(domain, c, r) {
                squares.push(Square::new(c, r));
                lattice.push((i, j));
            }
        }
    }
    let uncovered_area = domain.area() - squares.len() as f64 * r * r;
    if squares.is_empty() {
        return Err(MeshError::EmptyTiling { r, uncovered_area });
    }
    Ok(Tiling { r, squares, lattice, uncovered_area })
}
