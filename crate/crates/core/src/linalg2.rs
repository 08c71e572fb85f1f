//! 2×2 real linear algebra.
//!
//! For every invertible `M` the adjugate has the same singular values as `M`,
//! so `|M| = |det M| · |M⁻¹|` holds for both the Frobenius and the operator
//! norm. That identity is what makes the per-triangle energy bookkeeping in
//! [`crate::pamap`] exact.

use crate::geom::Point;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("singular matrix (det = {det:e}, scale = {scale:e})")]
    SingularMatrix { det: f64, scale: f64 },
}

/// Matrix norm used for gradient energies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    #[default]
    Frobenius,
    Operator,
}

impl NormKind {
    pub const ALL: [NormKind; 2] = [NormKind::Frobenius, NormKind::Operator];

    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::Frobenius => "frobenius",
            NormKind::Operator => "operator",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "frobenius" | "fro" | "f" => Ok(NormKind::Frobenius),
            "operator" | "op" | "spectral" => Ok(NormKind::Operator),
            other => Err(format!("unknown norm kind `{other}`")),
        }
    }
}

/// Row-major 2×2 matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);
    pub const ZERO: Mat2 = Mat2::new(0.0, 0.0, 0.0, 0.0);

    #[inline]
    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub const fn diag(d1: f64, d2: f64) -> Self {
        Self::new(d1, 0.0, 0.0, d2)
    }

    /// Matrix whose columns are `c1` and `c2`.
    #[inline]
    pub fn from_cols(c1: Point, c2: Point) -> Self {
        Self::new(c1.x, c2.x, c1.y, c2.y)
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, -s, s, c)
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    #[inline]
    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.a11, self.a21, self.a12, self.a22)
    }

    /// `adj(M)`, with `M · adj(M) = det(M) · I`.
    #[inline]
    pub fn adjugate(&self) -> Mat2 {
        Mat2::new(self.a22, -self.a12, -self.a21, self.a11)
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    #[inline]
    pub fn mul_vec(&self, v: Point) -> Point {
        Point::new(
            self.a11 * v.x + self.a12 * v.y,
            self.a21 * v.x + self.a22 * v.y,
        )
    }

    #[inline]
    pub fn frobenius(&self) -> f64 {
        let s = self.a11 * self.a11 + self.a12 * self.a12 + self.a21 * self.a21 + self.a22 * self.a22;
        s.sqrt()
    }

    /// Closed-form singular values `(σ₁, σ₂)`, `σ₁ ≥ σ₂ ≥ 0`.
    ///
    /// Uses `σ₁ ± σ₂ = √(|M|_F² ± 2 det M)`, with both radicands written as
    /// sums of squares so neither side cancels. `σ₂` is then recovered as
    /// `|det| / σ₁`, which keeps `σ₁σ₂ = |det|` to the last bit or two.
    pub fn singular_values(&self) -> (f64, f64) {
        // |M|_F² + 2 det = (a11 + a22)² + (a21 - a12)²
        // |M|_F² - 2 det = (a11 - a22)² + (a21 + a12)²
        let sum = (self.a11 + self.a22).hypot(self.a21 - self.a12);
        let diff = (self.a11 - self.a22).hypot(self.a21 + self.a12);
        let s1 = 0.5 * (sum + diff);
        if s1 == 0.0 {
            return (0.0, 0.0);
        }
        let s2 = (self.det().abs() / s1).min(s1);
        (s1, s2)
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::Frobenius => self.frobenius(),
            NormKind::Operator => self.singular_values().0,
        }
    }

    /// `adj(M) / det(M)`; fails when `|det| ≤ 1e-14 · |M|_F²`.
    pub fn inverse(&self) -> Result<Mat2, LinalgError> {
        let det = self.det();
        let scale = self.frobenius();
        if !(det.abs() > 1e-14 * scale * scale) {
            return Err(LinalgError::SingularMatrix { det, scale });
        }
        let adj = self.adjugate();
        Ok(Mat2::new(adj.a11 / det, adj.a12 / det, adj.a21 / det, adj.a22 / det))
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a21.is_finite() && self.a22.is_finite()
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 + o.a11, self.a12 + o.a12, self.a21 + o.a21, self.a22 + o.a22)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 - o.a11, self.a12 - o.a12, self.a21 - o.a21, self.a22 - o.a22)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }
}

impl Mul<Point> for Mat2 {
    type Output = Point;
    fn mul(self, v: Point) -> Point {
        self.mul_vec(v)
    }
}

/// Free-function forms, mirroring the operation names used elsewhere.
pub fn det(m: &Mat2) -> f64 {
    m.det()
}

pub fn singular_values(m: &Mat2) -> (f64, f64) {
    m.singular_values()
}

pub fn norm(m: &Mat2, kind: NormKind) -> f64 {
    m.norm(kind)
}

pub fn inverse(m: &Mat2) -> Result<Mat2, LinalgError> {
    m.inverse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn det_examples() {
        assert_eq!(Mat2::IDENTITY.det(), 1.0);
        assert_eq!(Mat2::diag(2.0, 1.0).det(), 2.0);
        assert_eq!(Mat2::new(1.0, 2.0, 3.0, 4.0).det(), -2.0);
    }

    #[test]
    fn singular_value_examples() {
        assert_eq!(Mat2::diag(2.0, 1.0).singular_values(), (2.0, 1.0));
        assert_eq!(Mat2::ZERO.singular_values(), (0.0, 0.0));
        // eigenvalues of MᵀM = [[1,1],[1,2]] are (3 ± √5)/2 = φ², φ⁻²
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let (s1, s2) = Mat2::new(1.0, 1.0, 0.0, 1.0).singular_values();
        assert_relative_eq!(s1, phi, max_relative = 1e-15);
        assert_relative_eq!(s2, 1.0 / phi, max_relative = 1e-15);
    }

    #[test]
    fn norm_examples() {
        let d = Mat2::diag(2.0, 1.0);
        assert_relative_eq!(d.norm(NormKind::Frobenius), 5f64.sqrt());
        assert_eq!(d.norm(NormKind::Operator), 2.0);
        let m = Mat2::new(1.0, 2.0, 0.0, 1.0);
        assert_relative_eq!(m.norm(NormKind::Frobenius), 6f64.sqrt());
        let inv = m.inverse().unwrap();
        assert_relative_eq!(m.det().abs() * inv.norm(NormKind::Frobenius), 6f64.sqrt());
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(Mat2::IDENTITY.inverse().unwrap(), Mat2::IDENTITY);
        assert_eq!(Mat2::diag(2.0, 1.0).inverse().unwrap(), Mat2::diag(0.5, 1.0));
        assert!(matches!(Mat2::ZERO.inverse(), Err(LinalgError::SingularMatrix { .. })));
        // rank one
        assert!(Mat2::new(1.0, 2.0, 2.0, 4.0).inverse().is_err());
    }

    #[test]
    fn singular_threshold_is_scale_relative() {
        // tiny but perfectly conditioned
        let m = Mat2::diag(1e-150, 1e-150);
        assert!(m.inverse().is_ok());
    }

    #[test]
    fn rotation_has_unit_singular_values() {
        let (s1, s2) = Mat2::rotation(0.7).singular_values();
        assert_relative_eq!(s1, 1.0, max_relative = 1e-15);
        assert_relative_eq!(s2, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn norm_kind_parses() {
        assert_eq!("Operator".parse::<NormKind>().unwrap(), NormKind::Operator);
        assert_eq!("frobenius".parse::<NormKind>().unwrap(), NormKind::Frobenius);
        assert!("max".parse::<NormKind>().is_err());
    }
}
