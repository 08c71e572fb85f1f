//! Planar map oracles: evaluation, gradients, inverses and known structure.

mod builtins;
mod cantor;
mod pa_oracle;

pub use builtins::{Affine2, Fold, Identity, Radial, SineWarp};
pub use cantor::{CantorMap, CantorParams, Cantor1d};
pub use pa_oracle::PaOracle;

use crate::geom::Point;
use crate::linalg2::{Mat2, NormKind};
use crate::mesh::{triangulate_domain, MeshError, Polygon, Triangulation};
use crate::numeric::Estimate;
use crate::quadrature::{integrate_tagged, mesh_cells, QuadratureError, QuadratureParams};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapError {
    #[error("unknown map `{0}`")]
    UnknownMap(String),
    #[error("bad map parameters: {0}")]
    BadParams(String),
    #[error("point ({x}, {y}) is outside the map domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("inverse is not available for `{0}`")]
    InverseUnavailable(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Declared facts about a map.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MapProperties {
    pub injective: bool,
    pub bi_lipschitz: Option<f64>,
    pub degenerate_set: Option<String>,
    pub piecewise_affine: bool,
    pub lusin_n: bool,
}

/// An evaluatable planar map. Implementations must be pure and deterministic.
pub trait MapOracle: Send + Sync {
    /// Canonical spec string, e.g. `radial:alpha=2`.
    fn name(&self) -> String;

    fn domain(&self) -> &Polygon;

    fn eval(&self, p: Point) -> Result<Point, MapError>;

    /// Analytic gradient; `None` means "use finite differences".
    fn grad(&self, _p: Point) -> Option<Mat2> {
        None
    }

    fn inverse_eval(&self, _y: Point) -> Option<Point> {
        None
    }

    fn inverse_grad(&self, y: Point) -> Option<Mat2> {
        let x = self.inverse_eval(y)?;
        self.grad(x)?.inverse().ok()
    }

    /// The image domain when it is a polygon.
    fn image_domain(&self) -> Option<Polygon> {
        None
    }

    /// A triangulation of the domain on whose triangles the map is smooth.
    fn pieces(&self) -> Option<Triangulation> {
        None
    }

    /// A triangulation of the image on whose triangles the inverse is smooth.
    fn image_pieces(&self) -> Option<Triangulation> {
        None
    }

    fn properties(&self) -> MapProperties {
        MapProperties { injective: true, lusin_n: true, ..Default::default() }
    }
}

/// Gradient from the oracle, or by finite differences with step `1e-6 · diam`
/// (central, one-sided where a central stencil would leave the domain).
pub fn gradient(o: &dyn MapOracle, p: Point) -> Result<Mat2, MapError> {
    if let Some(g) = o.grad(p) {
        return Ok(g);
    }
    finite_difference_gradient(o, p)
}

pub fn finite_difference_gradient(o: &dyn MapOracle, p: Point) -> Result<Mat2, MapError> {
    let d = o.domain();
    let h = 1e-6 * d.diameter();
    let mut cols = [Point::new(0.0, 0.0); 2];
    for (k, e) in [Point::new(h, 0.0), Point::new(0.0, h)].into_iter().enumerate() {
        let (fwd, bwd) = (p + e, p - e);
        let (fin, bin) = (d.contains_closed(fwd), d.contains_closed(bwd));
        cols[k] = match (fin, bin) {
            (true, true) => (o.eval(fwd)? - o.eval(bwd)?) * (0.5 / h),
            (true, false) => (o.eval(fwd)? - o.eval(p)?) * (1.0 / h),
            (false, true) => (o.eval(p)? - o.eval(bwd)?) * (1.0 / h),
            (false, false) => return Err(MapError::OutsideDomain { x: p.x, y: p.y }),
        };
    }
    Ok(Mat2::from_cols(cols[0], cols[1]))
}

pub fn jacobian(o: &dyn MapOracle, p: Point) -> Result<f64, MapError> {
    Ok(gradient(o, p)?.det())
}

/// `u⁻¹(y)` from the oracle, or by damped Newton started at `guess`.
pub fn inverse_point(o: &dyn MapOracle, y: Point, guess: Point) -> Option<Point> {
    if let Some(x) = o.inverse_eval(y) {
        return Some(x);
    }
    let scale = o.domain().diameter();
    let mut x = guess;
    for _ in 0..60 {
        let fx = o.eval(x).ok()?;
        let res = fx - y;
        if res.norm() <= 1e-14 * scale {
            return Some(x);
        }
        let step = gradient(o, x).ok()?.inverse().ok()?.mul_vec(res);
        let mut t = 1.0;
        loop {
            let cand = x - step * t;
            if let Ok(fc) = o.eval(cand) {
                if (fc - y).norm() < res.norm() {
                    x = cand;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-6 {
                return ((fx - y).norm() <= 1e-10 * scale).then_some(x);
            }
        }
    }
    o.eval(x).ok().filter(|fx| (*fx - y).norm() <= 1e-10 * scale).map(|_| x)
}

/// Quadrature cells for integrals over the oracle's domain.
pub fn domain_cells(o: &dyn MapOracle, quad: &QuadratureParams) -> Result<Vec<([Point; 3], usize)>, MapError> {
    let t = match o.pieces() {
        Some(t) => t,
        None => {
            let d = o.domain();
            triangulate_domain(d, d.diameter() / quad.base_resolution as f64)?
        }
    };
    Ok(mesh_cells(&t, None))
}

/// `∫_Ω |Du|` by composite quadrature.
pub fn numeric_w11_energy(o: &dyn MapOracle, kind: NormKind, quad: &QuadratureParams) -> Result<Estimate, MapError> {
    let cells = domain_cells(o, quad)?;
    Ok(integrate_tagged(&cells, quad, |p, _| gradient(o, p).map(|g| g.norm(kind)).unwrap_or(f64::NAN))?)
}

/// `∫_Δ |Du⁻¹|`: directly over the image pieces when the oracle knows them,
/// otherwise through `∫_Ω |Du⁻¹(u(x))| |J(x)| dx`.
pub fn numeric_inverse_w11_energy(
    o: &dyn MapOracle,
    kind: NormKind,
    quad: &QuadratureParams,
) -> Result<Estimate, MapError> {
    if let Some(img) = o.image_pieces() {
        let cells = mesh_cells(&img, None);
        return Ok(integrate_tagged(&cells, quad, |y, _| {
            o.inverse_grad(y).map(|g| g.norm(kind)).unwrap_or(f64::NAN)
        })?);
    }
    let cells = domain_cells(o, quad)?;
    Ok(integrate_tagged(&cells, quad, |p, _| match gradient(o, p) {
        Ok(g) => match g.inverse() {
            Ok(inv) => inv.norm(kind) * g.det().abs(),
            // |M⁻¹| |det M| = |adj M| extends continuously to singular M
            Err(_) => g.adjugate().norm(kind),
        },
        Err(_) => f64::NAN,
    })?)
}

/// `∫ |Du₁ − Du₂|` over the common domain, integrating over both piece sets.
pub fn numeric_l1_gradient_distance(
    o1: &dyn MapOracle,
    o2: &dyn MapOracle,
    kind: NormKind,
    quad: &QuadratureParams,
) -> Result<Estimate, MapError> {
    let base = |o: &dyn MapOracle| -> Result<Triangulation, MapError> {
        match o.pieces() {
            Some(t) => Ok(t),
            None => Ok(triangulate_domain(o.domain(), o.domain().diameter() / quad.base_resolution as f64)?),
        }
    };
    let (t1, t2) = (base(o1)?, base(o2)?);
    let cells = mesh_cells(&t1, Some(&t2));
    Ok(integrate_tagged(&cells, quad, |p, _| match (gradient(o1, p), gradient(o2, p)) {
        (Ok(a), Ok(b)) => (a - b).norm(kind),
        _ => f64::NAN,
    })?)
}

/// Polygon through the images of `n` points per boundary edge.
pub fn image_boundary_polygon(o: &dyn MapOracle, n: usize) -> Result<Polygon, MapError> {
    let mut loops = Vec::new();
    for l in o.domain().loops() {
        let mut out = Vec::with_capacity(l.len() * n);
        for k in 0..l.len() {
            let (a, b) = (l[k], l[(k + 1) % l.len()]);
            for i in 0..n {
                out.push(o.eval(a.lerp(b, i as f64 / n as f64))?);
            }
        }
        loops.push(out);
    }
    let outer = loops.remove(0);
    Ok(Polygon::new_normalized(outer, loops)?)
}

/// Parameters parsed from `key=value` pairs; values may be rationals `p/q`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MapParams(BTreeMap<String, f64>);

impl MapParams {
    pub fn parse(s: &str) -> Result<Self, MapError> {
        let mut m = BTreeMap::new();
        for kv in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| MapError::BadParams(format!("expected key=value, got `{kv}`")))?;
            m.insert(k.trim().to_string(), parse_number(v.trim())?);
        }
        Ok(Self(m))
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.0.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied()
    }

    pub fn get_or(&self, key: &str, default: f64) -> f64 {
        self.get(key).unwrap_or(default)
    }

    /// Rejects keys outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<(), MapError> {
        match self.0.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(MapError::BadParams(format!("unknown parameter `{k}` (expected one of {allowed:?})"))),
            None => Ok(()),
        }
    }
}

pub fn parse_number(s: &str) -> Result<f64, MapError> {
    let bad = || MapError::BadParams(format!("bad number `{s}`"));
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            p / q
        }
        None => s.parse().map_err(|_| bad())?,
    };
    if v.is_finite() { Ok(v) } else { Err(bad()) }
}

/// Builds a builtin map. `domain` overrides the map's default domain where the
/// map allows it.
pub fn builtin(name: &str, params: &MapParams, domain: Option<Polygon>) -> Result<Box<dyn MapOracle>, MapError> {
    let dom = |default: Polygon| domain.clone().unwrap_or(default);
    Ok(match name {
        "identity" => {
            params.only(&[])?;
            Box::new(Identity::new(dom(Polygon::unit_square())))
        }
        "affine" => {
            params.only(&["m11", "m12", "m21", "m22", "b1", "b2"])?;
            let m = Mat2::new(
                params.get_or("m11", 1.0),
                params.get_or("m12", 0.0),
                params.get_or("m21", 0.0),
                params.get_or("m22", 1.0),
            );
            let b = Point::new(params.get_or("b1", 0.0), params.get_or("b2", 0.0));
            Box::new(Affine2::new(m, b, dom(Polygon::unit_square()))?)
        }
        "shear" => {
            params.only(&["s"])?;
            let s = params.get_or("s", 1.0);
            Box::new(Affine2::named(Mat2::new(1.0, s, 0.0, 1.0), Point::new(0.0, 0.0), dom(Polygon::unit_square()), format!("shear:s={s}"))?)
        }
        "radial" => {
            params.only(&["alpha"])?;
            Box::new(Radial::new(params.get_or("alpha", 2.0), dom(Polygon::centered_square()))?)
        }
        "sine_warp" | "sine-warp" => {
            params.only(&["a"])?;
            Box::new(SineWarp::new(params.get_or("a", 0.1), dom(Polygon::unit_square()))?)
        }
        "cantor" | "cantor_product" | "cantor-product" => {
            params.only(&["depth", "ratio", "slope"])?;
            let depth = params.get_or("depth", 3.0);
            if depth < 0.0 || depth.fract() != 0.0 || depth > 12.0 {
                return Err(MapError::BadParams(format!("depth must be an integer in 0..=12, got {depth}")));
            }
            if let Some(d) = &domain {
                if *d != Polygon::unit_square() {
                    return Err(MapError::BadParams("the Cantor map lives on the unit square".into()));
                }
            }
            let cp = CantorParams {
                depth: depth as u32,
                removal_ratio: params.get_or("ratio", 0.25),
                flat_slope: params.get_or("slope", 0.5),
            };
            Box::new(CantorMap::new(cp)?)
        }
        "fold" => {
            params.only(&[])?;
            Box::new(Fold::new(dom(Polygon::unit_square())))
        }
        other => return Err(MapError::UnknownMap(other.to_string())),
    })
}

/// Parses `name` or `name:key=value,...`.
pub fn from_spec(spec: &str, domain: Option<Polygon>) -> Result<Box<dyn MapOracle>, MapError> {
    let spec = spec.trim();
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    builtin(name.trim(), &MapParams::parse(rest)?, domain)
}
