//! Finite-depth Cantor-type homeomorphisms of the unit square.
//!
//! The one-dimensional profile `g` starts as the identity on `[0, 1]`. At each
//! level every kept interval of length `L` and slope `s` is cut into a left
//! kept part of length `(1 − ρ) L / 2`, a middle of length `ρ L` and a right
//! kept part. The kept parts get slope `s φ`; the middle absorbs the rest of
//! the rise, slope `s (1 − (1 − ρ) φ) / ρ`, so `g(1) = 1` at every depth. At
//! depth `k` the kept set has measure `(1 − ρ)^k` and slope `φ^k`.

use super::{MapError, MapOracle, MapProperties};
use crate::geom::Point;
use crate::linalg2::Mat2;
use crate::mesh::{Polygon, Triangulation};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CantorParams {
    pub depth: u32,
    /// Fraction `ρ` of each kept interval given to the middle piece.
    pub removal_ratio: f64,
    /// Factor `φ` applied to the slope of kept pieces at each level.
    pub flat_slope: f64,
}

impl Default for CantorParams {
    fn default() -> Self {
        Self { depth: 3, removal_ratio: 0.25, flat_slope: 0.5 }
    }
}

/// One interval of the piecewise linear profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Piece {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub slope: f64,
    /// Kept at every level, so its slope is `φ^depth`.
    pub flat: bool,
}

/// The increasing piecewise linear profile `g : [0, 1] → [0, 1]`.
#[derive(Clone, Debug)]
pub struct Cantor1d {
    params: CantorParams,
    pieces: Vec<Piece>,
}

impl Cantor1d {
    pub fn new(params: CantorParams) -> Result<Self, MapError> {
        let (rho, phi) = (params.removal_ratio, params.flat_slope);
        if !(rho > 0.0 && rho < 1.0) {
            return Err(MapError::BadParams(format!("removal ratio must lie in (0, 1), got {rho}")));
        }
        if !(phi > 0.0 && (1.0 - rho) * phi < 1.0) {
            return Err(MapError::BadParams(format!(
                "flat slope must satisfy 0 < φ < 1/(1 − ρ), got φ = {phi}, ρ = {rho}"
            )));
        }
        // (x0, length, slope, kept)
        let mut iv: Vec<(f64, f64, f64, bool)> = vec![(0.0, 1.0, 1.0, true)];
        for _ in 0..params.depth {
            let mut next = Vec::with_capacity(iv.len() + 2 * iv.len());
            for &(x0, len, s, kept) in &iv {
                if !kept {
                    next.push((x0, len, s, false));
                    continue;
                }
                let side = 0.5 * (1.0 - rho) * len;
                let mid = rho * len;
                next.push((x0, side, s * phi, true));
                next.push((x0 + side, mid, s * (1.0 - (1.0 - rho) * phi) / rho, false));
                next.push((x0 + side + mid, len - side - mid, s * phi, true));
            }
            iv = next;
        }
        let mut pieces = Vec::with_capacity(iv.len());
        let mut y = 0.0;
        for (k, &(x0, len, s, kept)) in iv.iter().enumerate() {
            let x1 = if k + 1 < iv.len() { iv[k + 1].0 } else { 1.0 };
            let y1 = if k + 1 < iv.len() { y + s * len } else { 1.0 };
            pieces.push(Piece { x0, x1, y0: y, y1, slope: s, flat: kept && params.depth > 0 });
            y = y1;
        }
        Ok(Self { params, pieces })
    }

    pub fn params(&self) -> CantorParams {
        self.params
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    fn piece_at_x(&self, x: f64) -> &Piece {
        let i = self.pieces.partition_point(|p| p.x0 <= x);
        &self.pieces[i.saturating_sub(1).min(self.pieces.len() - 1)]
    }

    fn piece_at_y(&self, y: f64) -> &Piece {
        let i = self.pieces.partition_point(|p| p.y0 <= y);
        &self.pieces[i.saturating_sub(1).min(self.pieces.len() - 1)]
    }

    pub fn eval(&self, x: f64) -> f64 {
        let p = self.piece_at_x(x);
        if x == p.x0 {
            return p.y0;
        }
        p.y0 + p.slope * (x - p.x0)
    }

    /// Slope at `x` (right derivative at breakpoints).
    pub fn slope(&self, x: f64) -> f64 {
        self.piece_at_x(x).slope
    }

    pub fn inverse(&self, y: f64) -> f64 {
        let p = self.piece_at_y(y);
        if y == p.y0 {
            return p.x0;
        }
        p.x0 + (y - p.y0) / p.slope
    }

    pub fn inverse_slope(&self, y: f64) -> f64 {
        1.0 / self.piece_at_y(y).slope
    }

    /// Total length of the flat pieces, `(1 − ρ)^depth`.
    pub fn flat_measure(&self) -> f64 {
        self.pieces.iter().filter(|p| p.flat).map(|p| p.x1 - p.x0).sum()
    }
}

/// `(x, y) ↦ (g(x), y)` on the unit square.
#[derive(Clone, Debug)]
pub struct CantorMap {
    g: Cantor1d,
    domain: Polygon,
}

impl CantorMap {
    pub fn new(params: CantorParams) -> Result<Self, MapError> {
        Ok(Self { g: Cantor1d::new(params)?, domain: Polygon::unit_square() })
    }

    pub fn profile(&self) -> &Cantor1d {
        &self.g
    }

    fn strips(xs: &[f64]) -> Triangulation {
        let n = xs.len() - 1;
        let mut v = Vec::with_capacity(2 * xs.len());
        for &x in xs {
            v.push(Point::new(x, 0.0));
            v.push(Point::new(x, 1.0));
        }
        let mut t = Vec::with_capacity(2 * n);
        for i in 0..n {
            let (b0, t0, b1, t1) = (2 * i, 2 * i + 1, 2 * i + 2, 2 * i + 3);
            t.push([b0, b1, t1]);
            t.push([b0, t1, t0]);
        }
        Triangulation::new(v, t).expect("strip mesh")
    }
}

impl MapOracle for CantorMap {
    fn name(&self) -> String {
        let p = self.g.params;
        let mut s = format!("cantor:depth={}", p.depth);
        if p.removal_ratio != 0.25 {
            s += &format!(",ratio={}", p.removal_ratio);
        }
        if p.flat_slope != 0.5 {
            s += &format!(",slope={}", p.flat_slope);
        }
        s
    }
    fn domain(&self) -> &Polygon {
        &self.domain
    }
    fn eval(&self, p: Point) -> Result<Point, MapError> {
        if !self.domain.contains_closed(p) {
            return Err(MapError::OutsideDomain { x: p.x, y: p.y });
        }
        Ok(Point::new(self.g.eval(p.x), p.y))
    }
    fn grad(&self, p: Point) -> Option<Mat2> {
        Some(Mat2::diag(self.g.slope(p.x), 1.0))
    }
    fn inverse_eval(&self, y: Point) -> Option<Point> {
        Some(Point::new(self.g.inverse(y.x), y.y))
    }
    fn inverse_grad(&self, y: Point) -> Option<Mat2> {
        Some(Mat2::diag(self.g.inverse_slope(y.x), 1.0))
    }
    fn image_domain(&self) -> Option<Polygon> {
        Some(Polygon::unit_square())
    }
    fn pieces(&self) -> Option<Triangulation> {
        let mut xs: Vec<f64> = self.g.pieces.iter().map(|p| p.x0).collect();
        xs.push(1.0);
        Some(Self::strips(&xs))
    }
    fn image_pieces(&self) -> Option<Triangulation> {
        let mut ys: Vec<f64> = self.g.pieces.iter().map(|p| p.y0).collect();
        ys.push(1.0);
        Some(Self::strips(&ys))
    }
    fn properties(&self) -> MapProperties {
        let smax = self.g.pieces.iter().map(|p| p.slope).fold(1.0f64, f64::max);
        let smin = self.g.pieces.iter().map(|p| p.slope).fold(1.0f64, f64::min);
        let p = self.g.params;
        MapProperties {
            injective: true,
            bi_lipschitz: Some(smax.max(1.0 / smin)),
            degenerate_set: (p.depth > 0).then(|| {
                format!(
                    "slope {} on a set of measure {}",
                    p.flat_slope.powi(p.depth as i32),
                    self.g.flat_measure()
                )
            }),
            piecewise_affine: true,
            lusin_n: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_one_profile() {
        let g = Cantor1d::new(CantorParams { depth: 1, ..Default::default() }).unwrap();
        let slopes: Vec<f64> = g.pieces().iter().map(|p| p.slope).collect();
        assert_eq!(slopes, vec![0.5, 2.5, 0.5]);
        assert_eq!(g.eval(3.0 / 8.0), 3.0 / 16.0);
        assert_eq!(g.eval(5.0 / 8.0), 13.0 / 16.0);
        assert_eq!(g.eval(1.0), 1.0);
        assert_eq!(g.inverse(13.0 / 16.0), 5.0 / 8.0);
    }

    #[test]
    fn profile_is_increasing_and_ends_at_one() {
        for depth in 0..8 {
            let g = Cantor1d::new(CantorParams { depth, ..Default::default() }).unwrap();
            let ps = g.pieces();
            assert_eq!(ps.len(), (1 << (depth + 1)) - 1);
            assert!(ps.iter().all(|p| p.slope > 0.0 && p.x1 > p.x0));
            // the rise of each piece equals its slope times its length
            for p in ps {
                assert!((p.y1 - p.y0 - p.slope * (p.x1 - p.x0)).abs() < 1e-15);
            }
            assert_eq!(ps.last().unwrap().y1, 1.0);
            assert!((g.flat_measure() - if depth == 0 { 0.0 } else { 0.75f64.powi(depth as i32) }).abs() < 1e-14);
            for p in ps.iter().filter(|p| p.flat) {
                assert_eq!(p.slope, 0.5f64.powi(depth as i32));
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad = |rho, phi| Cantor1d::new(CantorParams { depth: 2, removal_ratio: rho, flat_slope: phi }).is_err();
        assert!(bad(0.0, 0.5));
        assert!(bad(1.0, 0.5));
        assert!(bad(0.25, 0.0));
        assert!(bad(0.25, 4.0 / 3.0));
        assert!(!bad(0.5, 1.5));
    }

    #[test]
    fn strip_pieces_cover_the_square() {
        let m = CantorMap::new(CantorParams { depth: 3, ..Default::default() }).unwrap();
        let t = m.pieces().unwrap();
        assert_eq!(t.num_triangles(), 2 * 15);
        assert!((t.area() - 1.0).abs() < 1e-15);
        assert!((m.image_pieces().unwrap().area() - 1.0).abs() < 1e-15);
    }
}
