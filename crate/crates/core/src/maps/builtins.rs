use super::{MapError, MapOracle, MapProperties};
use crate::geom::Point;
use crate::linalg2::Mat2;
use crate::mesh::Polygon;
use std::f64::consts::PI;

fn inside(d: &Polygon, p: Point) -> Result<(), MapError> {
    if d.contains_closed(p) {
        Ok(())
    } else {
        Err(MapError::OutsideDomain { x: p.x, y: p.y })
    }
}

#[derive(Clone, Debug)]
pub struct Identity {
    domain: Polygon,
}

impl Identity {
    pub fn new(domain: Polygon) -> Self {
        Self { domain }
    }
}

impl MapOracle for Identity {
    fn name(&self) -> String {
        "identity".into()
    }
    fn domain(&self) -> &Polygon {
        &self.domain
    }
    fn eval(&self, p: Point) -> Result<Point, MapError> {
        inside(&self.domain, p)?;
        Ok(p)
    }
    fn grad(&self, _p: Point) -> Option<Mat2> {
        Some(Mat2::IDENTITY)
    }
    fn inverse_eval(&self, y: Point) -> Option<Point> {
        Some(y)
    }
    fn image_domain(&self) -> Option<Polygon> {
        Some(self.domain.clone())
    }
    fn properties(&self) -> MapProperties {
        MapProperties { injective: true, bi_lipschitz: Some(1.0), piecewise_affine: true, lusin_n: true, degenerate_set: None }
    }
}

/// `x ↦ m x + b` with `det m > 0`.
#[derive(Clone, Debug)]
pub struct Affine2 {
    m: Mat2,
    m_inv: Mat2,
    b: Point,
    domain: Polygon,
    name: String,
}

impl Affine2 {
    pub fn new(m: Mat2, b: Point, domain: Polygon) -> Result<Self, MapError> {
        let name = format!("affine:m11={},m12={},m21={},m22={},b1={},b2={}", m.a11, m.a12, m.a21, m.a22, b.x, b.y);
        Self::named(m, b, domain, name)
    }

    pub fn named(m: Mat2, b: Point, domain: Polygon, name: String) -> Result<Self, MapError> {
        if !m.is_finite() || !b.is_finite() {
            return Err(MapError::BadParams("affine coefficients must be finite".into()));
        }
        if !(m.det() > 0.0) {
            return Err(MapError::BadParams(format!("affine map must preserve orientation (det = {})", m.det())));
        }
        let m_inv = m.inverse().map_err(|e| MapError::BadParams(e.to_string()))?;
        Ok(Self { m, m_inv, b, domain, name })
    }

    pub fn matrix(&self) -> Mat2 {
        self.m
    }
}

impl MapOracle for Affine2 {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn domain(&self) -> &Polygon {
        &self.domain
    }
    fn eval(&self, p: Point) -> Result<Point, MapError> {
        inside(&self.domain, p)?;
        Ok(self.m.mul_vec(p) + self.b)
    }
    fn grad(&self, _p: Point) -> Option<Mat2> {
        Some(self.m)
    }
    fn inverse_eval(&self, y: Point) -> Option<Point> {
        Some(self.m_inv.mul_vec(y - self.b))
    }
    fn inverse_grad(&self, _y: Point) -> Option<Mat2> {
        Some(self.m_inv)
    }
    fn image_domain(&self) -> Option<Polygon> {
        let f = |p: &Point| self.m.mul_vec(*p) + self.b;
        Polygon::new(
            self.domain.outer().iter().map(f).collect(),
            self.domain.holes().iter().map(|h| h.iter().map(f).collect()).collect(),
        )
        .ok()
    }
    fn properties(&self) -> MapProperties {
        let (s1, s2) = self.m.singular_values();
        MapProperties {
            injective: true,
            bi_lipschitz: Some(s1.max(1.0 / s2)),
            piecewise_affine: true,
            lusin_n: true,
            degenerate_set: None,
        }
    }
}

/// `x ↦ |x|^(α−1) x`; its Jacobian is `α |x|^(2(α−1))`.
#[derive(Clone, Debug)]
pub struct Radial {
    alpha: f64,
    domain: Polygon,
}

impl Radial {
    pub fn new(alpha: f64, domain: Polygon) -> Result<Self, MapError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(MapError::BadParams(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { alpha, domain })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl MapOracle for Radial {
    fn name(&self) -> String {
        format!("radial:alpha={}", self.alpha)
    }
    fn domain(&self) -> &Polygon {
        &self.domain
    }
    fn eval(&self, p: Point) -> Result<Point, MapError> {
        inside(&self.domain, p)?;
        let r = p.norm();
        if r == 0.0 {
            return Ok(p);
        }
        Ok(p * r.powf(self.alpha - 1.0))
    }
    fn grad(&self, p: Point) -> Option<Mat2> {
        let r = p.norm();
        if r == 0.0 {
            return Some(if self.alpha > 1.0 {
                Mat2::ZERO
            } else if self.alpha == 1.0 {
                Mat2::IDENTITY
            } else {
                Mat2::diag(f64::INFINITY, f64::INFINITY)
            });
        }
        let (ux, uy) = (p.x / r, p.y / r);
        let s = r.powf(self.alpha - 1.0);
        let k = self.alpha - 1.0;
        Some(Mat2::new(1.0 + k * ux * ux, k * ux * uy, k * ux * uy, 1.0 + k * uy * uy).scale(s))
    }
    fn inverse_eval(&self, y: Point) -> Option<Point> {
        let r = y.norm();
        if r == 0.0 {
            return Some(y);
        }
        Some(y * r.powf(1.0 / self.alpha - 1.0))
    }
    fn properties(&self) -> MapProperties {
        MapProperties {
            injective: true,
            bi_lipschitz: (self.alpha == 1.0).then_some(1.0),
            piecewise_affine: self.alpha == 1.0,
            lusin_n: true,
            degenerate_set: (self.alpha > 1.0).then(|| "origin (J = 0)".to_string()),
        }
    }
}

/// `(x, y) ↦ (x + a sin πx sin πy, y)`, injective for `|a| < 1/π`.
#[derive(Clone, Debug)]
pub struct SineWarp {
    a: f64,
    domain: Polygon,
}

impl SineWarp {
    pub fn new(a: f64, domain: Polygon) -> Result<Self, MapError> {
        if !(a.abs() * PI < 1.0) {
            return Err(MapError::BadParams(format!("|a| must be below 1/π for injectivity, got {a}")));
        }
        Ok(Self { a, domain })
    }

    fn forward_x(&self, x: f64, sy: f64) -> f64 {
        x + self.a * (PI * x).sin() * sy
    }
}

impl MapOracle for SineWarp {
    fn name(&self) -> String {
        format!("sine_warp:a={}", self.a)
    }
    fn domain(&self) -> &Polygon {
        &self.domain
    }
    fn eval(&self, p: Point) -> Result<Point, MapError> {
        inside(&self.domain, p)?;
        Ok(Point::new(self.forward_x(p.x, (PI * p.y).sin()), p.y))
    }
    fn grad(&self, p: Point) -> Option<Mat2> {
        let (sx, cx) = (PI * p.x).sin_cos();
        let (sy, cy) = (PI * p.y).sin_cos();
        Some(Mat2::new(1.0 + self.a * PI * cx * sy, self.a * PI * sx * cy, 0.0, 1.0))
    }
    fn inverse_eval(&self, y: Point) -> Option<Point> {
        // x ↦ x + a sin(πx) sin(πY) is increasing; bracket and polish with Newton
        let sy = (PI * y.y).sin();
        let f = |x: f64| self.forward_x(x, sy) - y.x;
        let (mut lo, mut hi) = (y.x - self.a.abs() - 1e-12, y.x + self.a.abs() + 1e-12);
        let mut x = y.x;
        for _ in 0..200 {
            let fx = f(x);
            if fx == 0.0 {
                break;
            }
            if fx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = 1.0 + self.a * PI * (PI * x).cos() * sy;
            let mut next = x - fx / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-17 * (1.0 + x.abs()) || hi - lo <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
                x = next;
                break;
            }
            x = next;
        }
        Some(Point::new(x, y.y))
    }
    fn image_domain(&self) -> Option<Polygon> {
        (self.domain == Polygon::unit_square()).then(Polygon::unit_square)
    }
    fn properties(&self) -> MapProperties {
        let l = 1.0 + self.a.abs() * PI;
        MapProperties {
            injective: true,
            bi_lipschitz: Some(l.max(1.0 / (1.0 - self.a.abs() * PI))),
            piecewise_affine: false,
            lusin_n: true,
            degenerate_set: None,
        }
    }
}

/// `(x, y) ↦ (|x − 1/2|, y)`: folds the domain along `x = 1/2`. Not injective.
#[derive(Clone, Debug)]
pub struct Fold {
    domain: Polygon,
}

impl Fold {
    pub fn new(domain: Polygon) -> Self {
        Self { domain }
    }
}

impl MapOracle for Fold {
    fn name(&self) -> String {
        "fold".into()
    }
    fn domain(&self) -> &Polygon {
        &self.domain
    }
    fn eval(&self, p: Point) -> Result<Point, MapError> {
        inside(&self.domain, p)?;
        Ok(Point::new((p.x - 0.5).abs(), p.y))
    }
    fn grad(&self, p: Point) -> Option<Mat2> {
        Some(Mat2::diag(if p.x >= 0.5 { 1.0 } else { -1.0 }, 1.0))
    }
    fn properties(&self) -> MapProperties {
        MapProperties { injective: false, piecewise_affine: true, lusin_n: true, ..Default::default() }
    }
}
