//! Exact orientation and segment predicates.
//!
//! Orientation goes through Shewchuk's adaptive-precision `orient2d`, so the
//! sign is never decided by rounding. Everything that only needs approximate
//! geometry lives elsewhere.

use crate::geom::Point;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Positive,
    Negative,
    Collinear,
}

impl Orientation {
    pub fn is_positive(self) -> bool {
        self == Orientation::Positive
    }
}

#[inline]
fn coord(p: Point) -> robust::Coord<f64> {
    robust::Coord { x: p.x, y: p.y }
}

/// Exact sign of twice the signed area of `(p, q, s)`.
pub fn orientation(p: Point, q: Point, s: Point) -> Orientation {
    let d = robust::orient2d(coord(p), coord(q), coord(s));
    if d > 0.0 {
        Orientation::Positive
    } else if d < 0.0 {
        Orientation::Negative
    } else {
        Orientation::Collinear
    }
}

/// Adaptive-precision value of `orient2d` (sign is exact, magnitude approximate).
pub fn orient2d(p: Point, q: Point, s: Point) -> f64 {
    robust::orient2d(coord(p), coord(q), coord(s))
}

/// `p` lies on the closed segment `[a, b]` (exact for collinearity).
pub fn on_segment(p: Point, a: Point, b: Point) -> bool {
    if orientation(a, b, p) != Orientation::Collinear {
        return false;
    }
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed segments `[a, b]` and `[c, d]` share at least one point.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orientation(a, b, c);
    let o2 = orientation(a, b, d);
    let o3 = orientation(c, d, a);
    let o4 = orientation(c, d, b);
    let opposite = |u: Orientation, v: Orientation| {
        matches!(
            (u, v),
            (Orientation::Positive, Orientation::Negative) | (Orientation::Negative, Orientation::Positive)
        )
    };
    if opposite(o1, o2) && opposite(o3, o4) {
        return true;
    }
    (o1 == Orientation::Collinear && on_segment(c, a, b))
        || (o2 == Orientation::Collinear && on_segment(d, a, b))
        || (o3 == Orientation::Collinear && on_segment(a, c, d))
        || (o4 == Orientation::Collinear && on_segment(b, c, d))
}

/// Point in closed triangle, assuming the triangle is positively oriented.
pub fn in_triangle_closed(p: Point, t: &[Point; 3]) -> bool {
    orientation(t[0], t[1], p) != Orientation::Negative
        && orientation(t[1], t[2], p) != Orientation::Negative
        && orientation(t[2], t[0], p) != Orientation::Negative
}

/// Point strictly inside a triangle of either orientation.
pub fn in_triangle_open(p: Point, t: &[Point; 3]) -> bool {
    let o = [
        orientation(t[0], t[1], p),
        orientation(t[1], t[2], p),
        orientation(t[2], t[0], p),
    ];
    o.iter().all(|&x| x == Orientation::Positive) || o.iter().all(|&x| x == Orientation::Negative)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_examples() {
        let o = Point::new(0.0, 0.0);
        assert_eq!(orientation(o, Point::new(1.0, 0.0), Point::new(0.0, 1.0)), Orientation::Positive);
        assert_eq!(orientation(o, Point::new(0.0, 1.0), Point::new(1.0, 0.0)), Orientation::Negative);
        assert_eq!(orientation(o, Point::new(1.0, 1.0), Point::new(2.0, 2.0)), Orientation::Collinear);
    }

    #[test]
    fn orientation_survives_rounding_traps() {
        // Points nearly on the line y = x; naive evaluation gets several of these wrong.
        let a = Point::new(0.5, 0.5);
        let b = Point::new(12.0, 12.0);
        let c = Point::new(24.0, 24.0);
        for i in 0..64 {
            let p = Point::new(0.5 + i as f64 * f64::EPSILON, 0.5);
            let exact = orientation(b, c, p);
            // p is on or below the diagonal, so orientation is never positive
            assert_ne!(exact, Orientation::Positive, "i = {i}");
        }
        assert_eq!(orientation(a, b, c), Orientation::Collinear);
    }

    #[test]
    fn segment_cases() {
        let p = Point::new;
        assert!(segments_intersect(p(0.0, 0.0), p(1.0, 1.0), p(0.0, 1.0), p(1.0, 0.0)));
        assert!(!segments_intersect(p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0), p(1.0, 1.0)));
        // touching at an endpoint
        assert!(segments_intersect(p(0.0, 0.0), p(1.0, 0.0), p(1.0, 0.0), p(2.0, 5.0)));
        // collinear overlap
        assert!(segments_intersect(p(0.0, 0.0), p(2.0, 0.0), p(1.0, 0.0), p(3.0, 0.0)));
        // collinear disjoint
        assert!(!segments_intersect(p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0), p(3.0, 0.0)));
    }
}
