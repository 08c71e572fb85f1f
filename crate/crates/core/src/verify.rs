//! Numerical checks of the identities and inequalities behind the
//! approximation pipeline, each reported as a [`CheckResult`] row.

use crate::geom::Point;
use crate::linalg2::{Mat2, NormKind};
use crate::maps::{domain_cells, gradient, inverse_point, CantorMap, CantorParams, MapError, MapOracle};
use crate::mesh::{r_tiling, MeshError, Square, Triangulation};
use crate::numeric::{compensated_sum, Estimate};
use crate::pipeline::{
    build_approximant, classify_squares, interpolate_square, ApproxParams, Label, PipelineError,
};
use crate::quadrature::{integrate_tagged, mesh_cells, QuadratureError, QuadratureParams};
use serde::Serialize;

/// Ratio between successive halvings that counts as convergence.
pub const MONOTONE_RATIO: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("Jacobian {jacobian:e} at ({x}, {y}) is below the degeneracy threshold")]
    DegenerateJacobian { x: f64, y: f64, jacobian: f64 },
    #[error("inverse gradient is not available for `{0}`")]
    InverseUnavailable(String),
    #[error("square centred at ({x}, {y}) with side {side} leaves the domain")]
    SquareOutsideDomain { x: f64, y: f64, side: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|lhs − rhs| ≤ uncertainty`
    Equal,
    /// `lhs ≤ rhs + uncertainty`
    LessEqual,
    /// `lhs < rhs` beyond the uncertainty
    Less,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub check_name: String,
    pub map_name: String,
    pub r: Option<f64>,
    pub eps: Option<f64>,
    pub square_id: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub uncertainty: f64,
    pub relation: Relation,
    pub satisfied: bool,
    /// Satisfied only thanks to an uncertainty of at least 10% of the
    /// smaller side.
    pub inconclusive: bool,
}

impl CheckResult {
    pub fn new(check_name: &str, map_name: &str, relation: Relation, lhs: f64, rhs: f64, uncertainty: f64) -> Self {
        let uncertainty = uncertainty.abs();
        let satisfied = match relation {
            Relation::Equal => (lhs - rhs).abs() <= uncertainty,
            Relation::LessEqual => lhs <= rhs + uncertainty,
            Relation::Less => lhs + uncertainty < rhs,
        };
        let inconclusive =
            relation == Relation::LessEqual && satisfied && lhs > rhs && uncertainty >= 0.1 * lhs.abs().min(rhs.abs());
        Self {
            check_name: check_name.into(),
            map_name: map_name.into(),
            r: None,
            eps: None,
            square_id: None,
            lhs,
            rhs,
            uncertainty,
            relation,
            satisfied: satisfied && lhs.is_finite() && rhs.is_finite(),
            inconclusive,
        }
    }

    pub fn with_r(mut self, r: f64) -> Self {
        self.r = Some(r);
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn with_square(mut self, id: usize) -> Self {
        self.square_id = Some(id);
        self
    }
}

/// `Du⁻¹` at `u(z)`: from the oracle's inverse when it has one, otherwise
/// the inverse of `Du(z)`.
fn inverse_gradient_at(o: &dyn MapOracle, z: Point) -> Option<Mat2> {
    let y = o.eval(z).ok()?;
    o.inverse_grad(y).or_else(|| gradient(o, z).ok()?.inverse().ok())
}

/// Quadrature cells covering `q`, cut along the oracle's pieces.
fn square_cells(q: &Square, pieces: Option<&Triangulation>) -> Vec<([Point; 3], usize)> {
    let (lo, hi) = (q.min(), q.max());
    let g = Triangulation::grid(lo.x, lo.y, hi.x, hi.y, 2, 2);
    mesh_cells(&g, pieces)
}

fn square_inside(o: &dyn MapOracle, q: &Square) -> Result<(), VerifyError> {
    if q.corners().iter().all(|&c| o.domain().contains_closed(c)) {
        Ok(())
    } else {
        Err(VerifyError::SquareOutsideDomain { x: q.center.x, y: q.center.y, side: q.side })
    }
}

/// Triangulation of the image, from the oracle's image pieces or image domain.
fn image_mesh(o: &dyn MapOracle, quad: &QuadratureParams) -> Result<Triangulation, VerifyError> {
    if let Some(t) = o.image_pieces() {
        return Ok(t);
    }
    let img = match o.image_domain() {
        Some(p) => p,
        None => crate::maps::image_boundary_polygon(o, 64 * quad.base_resolution)?,
    };
    let h = img.diameter() / quad.base_resolution as f64;
    Ok(crate::mesh::triangulate_domain(&img, h)?)
}

/// `∫_Ω φ(u(x)) |J(x)| dx` against `∫_Δ φ(y) dy`. Piecewise affine maps
/// have the Lusin N property, so for them the two must agree; otherwise
/// only `lhs ≤ rhs` is claimed.
pub fn check_change_of_variables(
    o: &dyn MapOracle,
    phi: &(dyn Fn(Point) -> f64 + Sync),
    quad: &QuadratureParams,
) -> Result<CheckResult, VerifyError> {
    let cells = domain_cells(o, quad)?;
    let lhs = integrate_tagged(&cells, quad, |p, _| match (o.eval(p), gradient(o, p)) {
        (Ok(y), Ok(g)) => phi(y) * g.det().abs(),
        _ => f64::NAN,
    })?;
    let img = image_mesh(o, quad)?;
    let rhs = integrate_tagged(&mesh_cells(&img, None), quad, |y, _| phi(y))?;
    let props = o.properties();
    let relation = if props.piecewise_affine && props.lusin_n { Relation::Equal } else { Relation::LessEqual };
    let unc = lhs.error + rhs.error + 1e-10 * lhs.value.abs().max(rhs.value.abs());
    Ok(CheckResult::new("change_of_variables", &o.name(), relation, lhs.value, rhs.value, unc))
}

/// Indicator of the image of the region where the sampled `|J|` is below `tau_j`.
pub fn degenerate_image_indicator(o: &dyn MapOracle, tau_j: f64) -> impl Fn(Point) -> f64 + Sync + '_ {
    move |y| {
        let x = match o.inverse_eval(y) {
            Some(x) => x,
            None => return 0.0,
        };
        match gradient(o, x) {
            Ok(g) if g.det().abs() < tau_j => 1.0,
            _ => 0.0,
        }
    }
}

/// The three normalized residuals of the first-order expansion at `x` on
/// the square of side `3r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LebesgueResiduals {
    pub r: f64,
    /// `sup |u − v| / r`, sampled.
    pub eps1: f64,
    /// `∫ |Du − Du(x)| / r²`.
    pub eps2: Estimate,
    /// `∫_{u(Q)} |Du⁻¹ − Du⁻¹(u(x))| / r²`; absent when `J(x)` is degenerate.
    pub eps3: Option<Estimate>,
}

impl LebesgueResiduals {
    pub fn max(&self) -> f64 {
        let e3 = self.eps3.map_or(0.0, |e| e.value);
        self.eps1.max(self.eps2.value).max(e3)
    }
}

pub fn lebesgue_residuals(
    o: &dyn MapOracle,
    x: Point,
    r: f64,
    kind: NormKind,
    quad: &QuadratureParams,
    tau_j: f64,
) -> Result<LebesgueResiduals, VerifyError> {
    lebesgue_residuals_on(o, x, r, kind, quad, tau_j, o.pieces().as_ref())
}

fn lebesgue_residuals_on(
    o: &dyn MapOracle,
    x: Point,
    r: f64,
    kind: NormKind,
    quad: &QuadratureParams,
    tau_j: f64,
    pieces: Option<&Triangulation>,
) -> Result<LebesgueResiduals, VerifyError> {
    if !(r > 0.0) {
        return Err(VerifyError::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    let q = Square::new(x, 3.0 * r);
    square_inside(o, &q)?;
    let ux = o.eval(x)?;
    let m = gradient(o, x)?;
    let v = |z: Point| ux + m.mul_vec(z - x);

    let mut sup: f64 = 0.0;
    for z in q.sample_grid(4 * quad.base_resolution).into_iter().chain(q.corners()) {
        sup = sup.max((o.eval(z)? - v(z)).norm());
    }
    let cells = square_cells(&q, pieces);
    let e2 = integrate_tagged(&cells, quad, |z, _| gradient(o, z).map(|g| (g - m).norm(kind)).unwrap_or(f64::NAN))?;
    let r2 = r * r;
    let eps3 = if m.det().abs() < tau_j {
        None
    } else {
        let m_inv = o.inverse_grad(ux).unwrap_or(m.inverse().map_err(|_| VerifyError::DegenerateJacobian {
            x: x.x,
            y: x.y,
            jacobian: m.det(),
        })?);
        // change of variables w = u(z)
        let e3 = integrate_tagged(&cells, quad, |z, _| {
            let (Ok(g), Some(gi)) = (gradient(o, z), inverse_gradient_at(o, z)) else { return f64::NAN };
            (gi - m_inv).norm(kind) * g.det().abs()
        })?;
        Some(Estimate { value: e3.value / r2, error: e3.error / r2 })
    };
    Ok(LebesgueResiduals {
        r,
        eps1: sup / r,
        eps2: Estimate { value: e2.value / r2, error: e2.error / r2 },
        eps3,
    })
}

/// One row per consecutive pair: `later ≤ 0.7 · earlier`, for values along a
/// halving schedule. `floor` absorbs rounding around zero.
pub fn monotone_rows(name: &str, map: &str, rs: &[f64], values: &[Estimate], floor: f64) -> Vec<CheckResult> {
    rs.windows(2)
        .zip(values.windows(2))
        .map(|(r, v)| {
            let steps = (r[0] / r[1]).log2().max(1.0);
            let factor = MONOTONE_RATIO.powf(steps);
            let unc = v[1].error + factor * v[0].error + floor;
            CheckResult::new(name, map, Relation::LessEqual, v[1].value, factor * v[0].value, unc).with_r(r[1])
        })
        .collect()
}

fn sorted_schedule(r_list: &[f64]) -> Result<Vec<f64>, VerifyError> {
    if r_list.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(VerifyError::InvalidParameter("radii must be positive".into()));
    }
    let mut rs = r_list.to_vec();
    rs.sort_by(|a, b| b.total_cmp(a));
    rs.dedup();
    Ok(rs)
}

/// Residuals at `x` along a shrinking schedule, checked for convergence.
pub fn check_lebesgue_estimates(
    o: &dyn MapOracle,
    x: Point,
    r_list: &[f64],
    kind: NormKind,
    quad: &QuadratureParams,
    tau_j: f64,
) -> Result<Vec<CheckResult>, VerifyError> {
    let j = gradient(o, x)?.det();
    if j.abs() < tau_j {
        return Err(VerifyError::DegenerateJacobian { x: x.x, y: x.y, jacobian: j });
    }
    lebesgue_rows(o, x, r_list, kind, quad, tau_j)
}

fn lebesgue_rows(
    o: &dyn MapOracle,
    x: Point,
    r_list: &[f64],
    kind: NormKind,
    quad: &QuadratureParams,
    tau_j: f64,
) -> Result<Vec<CheckResult>, VerifyError> {
    let rs = sorted_schedule(r_list)?;
    let pieces = o.pieces();
    let res = rs
        .iter()
        .map(|&r| lebesgue_residuals_on(o, x, r, kind, quad, tau_j, pieces.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let name = o.name();
    let floor = 1e-10;
    let mut rows = monotone_rows("lebesgue_eps1", &name, &rs, &res.iter().map(|e| Estimate::exact(e.eps1)).collect::<Vec<_>>(), floor);
    rows.extend(monotone_rows("lebesgue_eps2", &name, &rs, &res.iter().map(|e| e.eps2).collect::<Vec<_>>(), floor));
    if res.iter().all(|e| e.eps3.is_some()) {
        let e3: Vec<Estimate> = res.iter().map(|e| e.eps3.expect("checked")).collect();
        rows.extend(monotone_rows("lebesgue_eps3", &name, &rs, &e3, floor));
    }
    Ok(rows)
}

/// Integrals over one square used by the degenerate-square inequalities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SquareIntegrals {
    /// `|u(Q)|`
    pub image_area: Estimate,
    /// `∫_{u(Q)} |Du⁻¹|`
    pub inverse_energy: Estimate,
    /// `∫_Q |Du|`
    pub forward_energy: Estimate,
}

pub fn square_integrals(
    o: &dyn MapOracle,
    q: &Square,
    kind: NormKind,
    quad: &QuadratureParams,
) -> Result<SquareIntegrals, VerifyError> {
    square_integrals_on(o, q, kind, quad, o.pieces().as_ref())
}

fn square_integrals_on(
    o: &dyn MapOracle,
    q: &Square,
    kind: NormKind,
    quad: &QuadratureParams,
    pieces: Option<&Triangulation>,
) -> Result<SquareIntegrals, VerifyError> {
    square_inside(o, q)?;
    if o.inverse_grad(o.eval(q.center)?).is_none() {
        return Err(VerifyError::InverseUnavailable(o.name()));
    }
    let cells = square_cells(q, pieces);
    let forward_energy = integrate_tagged(&cells, quad, |z, _| gradient(o, z).map(|g| g.norm(kind)).unwrap_or(f64::NAN))?;
    let inverse_energy = integrate_tagged(&cells, quad, |z, _| {
        let (Ok(g), Ok(y)) = (gradient(o, z), o.eval(z)) else { return f64::NAN };
        match o.inverse_grad(y) {
            Some(gi) => gi.norm(kind) * g.det().abs(),
            None => f64::NAN,
        }
    })?;
    let image_area = if o.properties().lusin_n {
        integrate_tagged(&cells, quad, |z, _| gradient(o, z).map(|g| g.det().abs()).unwrap_or(f64::NAN))?
    } else {
        // area enclosed by the image of the boundary
        let n = 64 * quad.base_resolution;
        let c = q.corners();
        let mut pts = Vec::with_capacity(4 * n);
        for k in 0..4 {
            for i in 0..n {
                pts.push(o.eval(c[k].lerp(c[(k + 1) % 4], i as f64 / n as f64))?);
            }
        }
        Estimate::exact(crate::geom::loop_signed_area(&pts).abs())
    };
    Ok(SquareIntegrals { image_area, inverse_energy, forward_energy })
}

/// For a degenerate square: `|u(Q)| ≤ ε ∫_{u(Q)} |Du⁻¹|` and
/// `∫_{u(Q)} |Du⁻¹| ≥ (1 − ε) ∫_Q |Du|`. For a good square only the second.
pub fn check_degenerate_square(
    o: &dyn MapOracle,
    q: &Square,
    label: Label,
    eps: f64,
    kind: NormKind,
    quad: &QuadratureParams,
) -> Result<Vec<CheckResult>, VerifyError> {
    let s = square_integrals(o, q, kind, quad)?;
    Ok(degenerate_rows(&o.name(), &s, label, eps))
}

fn degenerate_rows(name: &str, s: &SquareIntegrals, label: Label, eps: f64) -> Vec<CheckResult> {
    let mut rows = Vec::with_capacity(2);
    if label == Label::Bad {
        rows.push(
            CheckResult::new(
                "degenerate_image_area",
                name,
                Relation::LessEqual,
                s.image_area.value,
                eps * s.inverse_energy.value,
                s.image_area.error + eps * s.inverse_energy.error,
            )
            .with_eps(eps),
        );
    }
    if label != Label::Negligible {
        let check = if label == Label::Bad { "degenerate_energy_transfer" } else { "good_energy_transfer" };
        rows.push(
            CheckResult::new(
                check,
                name,
                Relation::LessEqual,
                (1.0 - eps) * s.forward_energy.value,
                s.inverse_energy.value,
                (1.0 - eps) * s.forward_energy.error + s.inverse_energy.error,
            )
            .with_eps(eps),
        );
    }
    rows
}

/// Classifies the `r`-tiling and runs [`check_degenerate_square`] on every
/// good and bad square.
pub fn check_degenerate_squares(
    o: &dyn MapOracle,
    r: f64,
    eps: f64,
    params: &ApproxParams,
) -> Result<Vec<CheckResult>, VerifyError> {
    let tiling = r_tiling(o.domain(), r)?;
    let classes = classify_squares(o, &tiling, &params.classify)?;
    let pieces = o.pieces();
    let name = o.name();
    let mut rows = Vec::new();
    for (k, c) in classes.iter().enumerate() {
        if c.label == Label::Negligible {
            continue;
        }
        let s = square_integrals_on(o, &c.square, params.norm, &params.quad, pieces.as_ref())?;
        rows.extend(degenerate_rows(&name, &s, c.label, eps).into_iter().map(|row| row.with_r(r).with_square(k)));
    }
    Ok(rows)
}

/// `∫_Q |Du − Du_Q| + ∫_{u_Q(Q)} |Du⁻¹ − Du_Q⁻¹|` for the two-triangle
/// interpolation `u_Q` with the square's chosen diagonal.
pub fn interpolation_error(
    o: &dyn MapOracle,
    q: &Square,
    diagonal: crate::mesh::Diagonal,
    kind: NormKind,
    quad: &QuadratureParams,
    pieces: Option<&Triangulation>,
) -> Result<Estimate, VerifyError> {
    let affine = interpolate_square(o, q, diagonal)?;
    let tris = diagonal.split(q);
    let mut total = Estimate::default();
    for (k, t) in tris.iter().enumerate() {
        let a = affine[k].a;
        let a_inv = a
            .inverse()
            .map_err(|_| VerifyError::DegenerateJacobian { x: q.center.x, y: q.center.y, jacobian: a.det() })?;
        let ja = a.det().abs();
        let base = Triangulation::new(t.to_vec(), vec![[0, 1, 2]])?;
        let cells = mesh_cells(&base, pieces);
        let fwd = integrate_tagged(&cells, quad, |z, _| gradient(o, z).map(|g| (g - a).norm(kind)).unwrap_or(f64::NAN))?;
        // w = u_Q(z), dw = |det A| dz
        let inv = integrate_tagged(&cells, quad, |z, _| {
            let w = affine[k].apply(z);
            let gi = o
                .inverse_grad(w)
                .or_else(|| inverse_point(o, w, z).and_then(|x| gradient(o, x).ok()?.inverse().ok()));
            match gi {
                Some(gi) => (gi - a_inv).norm(kind) * ja,
                None => f64::NAN,
            }
        })?;
        total = total + fwd + inv;
    }
    Ok(total)
}

/// Interpolation error on every good square of the `r`-tiling against
/// `5 ε r²`, with `ε` the largest Lebesgue residual measured at the square's
/// centre.
pub fn check_interpolation_bound(o: &dyn MapOracle, r: f64, params: &ApproxParams) -> Result<Vec<CheckResult>, VerifyError> {
    let tiling = r_tiling(o.domain(), r)?;
    let classes = classify_squares(o, &tiling, &params.classify)?;
    let pieces = o.pieces();
    let name = o.name();
    let mut rows = Vec::new();
    for (k, c) in classes.iter().enumerate() {
        if c.label != Label::Good {
            continue;
        }
        let q = &c.square;
        let res = lebesgue_residuals_on(o, q.center, q.side, params.norm, &params.quad, params.classify.tau_j, pieces.as_ref())?;
        let eps = res.max();
        let lhs = interpolation_error(o, q, c.chosen_diagonal, params.norm, &params.quad, pieces.as_ref())?;
        let rhs = 5.0 * eps * q.side * q.side;
        let unc = lhs.error + 5.0 * q.side * q.side * (res.eps2.error + res.eps3.map_or(0.0, |e| e.error));
        rows.push(
            CheckResult::new("interpolation_bound", &name, Relation::LessEqual, lhs.value, rhs, unc)
                .with_r(r)
                .with_eps(eps)
                .with_square(k),
        );
    }
    Ok(rows)
}

/// Per-scale energies of the approximants of `o`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyRow {
    pub r: f64,
    pub pa_forward: f64,
    pub pa_inverse: f64,
    pub oracle_forward: Estimate,
    pub valid: bool,
}

pub fn energy_sequence(o: &dyn MapOracle, r_list: &[f64], params: &ApproxParams) -> Result<Vec<EnergyRow>, VerifyError> {
    let oracle_forward = crate::maps::numeric_w11_energy(o, params.norm, &params.quad)?;
    sorted_schedule(r_list)?
        .into_iter()
        .map(|r| {
            let a = build_approximant(o, r, params)?;
            Ok(EnergyRow {
                r,
                pa_forward: a.report.pa_forward_energy,
                pa_inverse: a.report.pa_inverse_energy,
                oracle_forward,
                valid: a.report.valid,
            })
        })
        .collect()
}

/// Exact energy identity for every approximant, and convergence of the
/// approximant energy to the oracle energy.
pub fn check_energy_identity_sequence(
    o: &dyn MapOracle,
    r_list: &[f64],
    params: &ApproxParams,
) -> Result<Vec<CheckResult>, VerifyError> {
    let rows = energy_sequence(o, r_list, params)?;
    let name = o.name();
    let mut out: Vec<CheckResult> = rows
        .iter()
        .map(|e| {
            CheckResult::new("energy_identity", &name, Relation::Equal, e.pa_forward, e.pa_inverse, 1e-9 * e.pa_forward.abs())
                .with_r(e.r)
        })
        .collect();
    let gaps: Vec<Estimate> = rows
        .iter()
        .map(|e| Estimate { value: (e.pa_forward - e.oracle_forward.value).abs(), error: e.oracle_forward.error })
        .collect();
    let rs: Vec<f64> = rows.iter().map(|e| e.r).collect();
    let floor = 1e-9 * rows.first().map_or(0.0, |e| e.oracle_forward.value.abs());
    out.extend(monotone_rows("energy_convergence", &name, &rs, &gaps, floor));
    Ok(out)
}

/// Energies of the Cantor-type map at one depth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CantorEnergyRow {
    pub depth: u32,
    /// `∫ |Du|`, summed exactly over the profile pieces.
    pub forward: f64,
    /// `∫ |Du⁻¹|`, summed exactly over the image pieces.
    pub inverse: f64,
    pub forward_quadrature: Estimate,
    pub inverse_quadrature: Estimate,
    /// Measure of the set where the profile slope is `φ^depth`.
    pub flat_measure: f64,
}

pub fn cantor_energy_family(
    depths: &[u32],
    base: CantorParams,
    kind: NormKind,
    quad: &QuadratureParams,
) -> Result<Vec<CantorEnergyRow>, VerifyError> {
    depths
        .iter()
        .map(|&depth| {
            let m = CantorMap::new(CantorParams { depth, ..base })?;
            let g = m.profile();
            let forward = compensated_sum(g.pieces().iter().map(|p| (p.x1 - p.x0) * Mat2::diag(p.slope, 1.0).norm(kind)));
            let inverse =
                compensated_sum(g.pieces().iter().map(|p| (p.y1 - p.y0) * Mat2::diag(1.0 / p.slope, 1.0).norm(kind)));
            Ok(CantorEnergyRow {
                depth,
                forward,
                inverse,
                forward_quadrature: crate::maps::numeric_w11_energy(&m, kind, quad)?,
                inverse_quadrature: crate::maps::numeric_inverse_w11_energy(&m, kind, quad)?,
                flat_measure: g.flat_measure(),
            })
        })
        .collect()
}

/// Forward energies below `bound`, inverse energies strictly increasing.
pub fn check_cantor_family(rows: &[CantorEnergyRow], bound: f64) -> Vec<CheckResult> {
    let name = |d: u32| format!("cantor:depth={d}");
    let mut out: Vec<CheckResult> = rows
        .iter()
        .map(|e| CheckResult::new("cantor_forward_bounded", &name(e.depth), Relation::LessEqual, e.forward, bound, 0.0))
        .collect();
    out.extend(rows.windows(2).map(|w| {
        CheckResult::new("cantor_inverse_increasing", &name(w[1].depth), Relation::Less, w[0].inverse, w[1].inverse, 0.0)
    }));
    out
}

/// Checks run by the command-line `verify` command.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteParams {
    pub r_list: Vec<f64>,
    pub eps: f64,
    pub approx: ApproxParams,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self { r_list: vec![0.125, 0.0625, 0.03125], eps: 0.1, approx: ApproxParams::default() }
    }
}

/// Every applicable check on one oracle.
pub fn run_suite(o: &dyn MapOracle, params: &SuiteParams) -> Result<Vec<CheckResult>, VerifyError> {
    let quad = &params.approx.quad;
    let kind = params.approx.norm;
    let tau = params.approx.classify.tau_j;
    let mut rows = vec![check_change_of_variables(o, &|_| 1.0, quad)?];
    if o.inverse_eval(o.eval(o.domain().outer()[0])?).is_some() {
        let ind = degenerate_image_indicator(o, params.eps);
        let mut row = check_change_of_variables(o, &ind, quad)?;
        row.check_name = "change_of_variables_degenerate".into();
        row.relation = Relation::LessEqual;
        row.satisfied = row.lhs <= row.rhs + row.uncertainty;
        row.eps = Some(params.eps);
        rows.push(row);
    }
    rows.extend(check_energy_identity_sequence(o, &params.r_list, &params.approx)?);

    let c = o.domain().bbox().center();
    let fits: Vec<f64> = params
        .r_list
        .iter()
        .copied()
        .filter(|&r| square_inside(o, &Square::new(c, 3.0 * r)).is_ok())
        .collect();
    if o.domain().contains(c) && fits.len() >= 2 {
        rows.extend(lebesgue_rows(o, c, &fits, kind, quad, tau)?);
    }
    if let Some(&r) = params.r_list.iter().max_by(|a, b| a.total_cmp(b)) {
        match check_degenerate_squares(o, r, params.eps, &params.approx) {
            Ok(v) => rows.extend(v),
            Err(VerifyError::InverseUnavailable(_)) => {}
            Err(VerifyError::Mesh(MeshError::EmptyTiling { .. })) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{from_spec, PaOracle};
    use crate::pamap::PAMap;

    fn quad() -> QuadratureParams {
        ApproxParams::default().quad
    }

    #[test]
    fn change_of_variables_identity() {
        let o = from_spec("identity", None).unwrap();
        let c = check_change_of_variables(o.as_ref(), &|_| 1.0, &quad()).unwrap();
        assert!(c.satisfied);
        assert!((c.lhs - 1.0).abs() < 1e-12 && (c.rhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn change_of_variables_pa_equality() {
        let t = Triangulation::grid(0.0, 0.0, 1.0, 1.0, 5, 5);
        let m = PAMap::from_fn(t, |p| Point::new(p.x + 0.2 * p.x * p.y, p.y + 0.1 * p.x * p.x));
        let area = m.image_triangulation().unwrap().area();
        let o = PaOracle::new(m, "pa").unwrap();
        let c = check_change_of_variables(&o, &|_| 1.0, &quad()).unwrap();
        assert_eq!(c.relation, Relation::Equal);
        assert!(c.satisfied);
        assert!((c.lhs - area).abs() <= 1e-9 * area && (c.rhs - area).abs() <= 1e-9 * area);
    }

    #[test]
    fn change_of_variables_with_weight() {
        // u(x, y) = (2x, y) on the unit square, φ(y) = y₁: ∫ 2x · 2 = 2 = ∫_{[0,2]×[0,1]} y₁
        let o = from_spec("affine:m11=2", None).unwrap();
        let c = check_change_of_variables(o.as_ref(), &|y| y.x, &quad()).unwrap();
        assert!((c.lhs - 2.0).abs() < 1e-10 && (c.rhs - 2.0).abs() < 1e-10, "{c:?}");
    }

    #[test]
    fn lebesgue_affine_is_zero() {
        let o = from_spec("affine:m11=1.5,m12=0.2,m21=0.1,m22=0.9", None).unwrap();
        let rows = check_lebesgue_estimates(o.as_ref(), Point::new(0.5, 0.5), &[0.1, 0.05, 0.025], NormKind::Frobenius, &quad(), 1e-8).unwrap();
        assert_eq!(rows.len(), 6);
        for r in &rows {
            assert!(r.satisfied && r.lhs < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn lebesgue_sine_warp_halves() {
        let o = from_spec("sine_warp:a=0.1", None).unwrap();
        let x = Point::new(0.3, 0.3);
        let rs = [0.1, 0.05, 0.025];
        let rows = check_lebesgue_estimates(o.as_ref(), x, &rs, NormKind::Frobenius, &quad(), 1e-8).unwrap();
        assert_eq!(rows.len(), 6);
        for r in &rows {
            assert!(r.satisfied, "{r:?}");
            assert!(r.lhs > 0.0);
        }
    }

    #[test]
    fn lebesgue_radial_origin_is_degenerate() {
        let o = from_spec("radial:alpha=2", None).unwrap();
        let e = check_lebesgue_estimates(o.as_ref(), Point::new(0.0, 0.0), &[0.1, 0.05], NormKind::Frobenius, &quad(), 1e-8);
        assert!(matches!(e, Err(VerifyError::DegenerateJacobian { .. })));
    }

    #[test]
    fn good_identity_square_transfers_energy_exactly() {
        let o = from_spec("identity", None).unwrap();
        let r = 0.1;
        let q = Square::new(Point::new(0.5, 0.5), r);
        let s = square_integrals(o.as_ref(), &q, NormKind::Frobenius, &quad()).unwrap();
        let want = 2f64.sqrt() * r * r;
        assert!((s.forward_energy.value - want).abs() < 1e-14);
        assert!((s.inverse_energy.value - want).abs() < 1e-14);
        let rows = check_degenerate_square(o.as_ref(), &q, Label::Good, 0.0, NormKind::Frobenius, &quad()).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].satisfied);
    }

    #[test]
    fn stretched_square_energies_agree() {
        let o = from_spec("affine:m11=2", None).unwrap();
        let q = Square::new(Point::new(0.5, 0.5), 0.2);
        let s = square_integrals(o.as_ref(), &q, NormKind::Frobenius, &quad()).unwrap();
        assert!((s.forward_energy.value - s.inverse_energy.value).abs() < 1e-14);
        assert!((s.image_area.value - 2.0 * 0.04).abs() < 1e-14);
    }

    #[test]
    fn cantor_flat_square_inequalities() {
        let o = from_spec("cantor:depth=4", None).unwrap();
        let m = CantorMap::new(CantorParams { depth: 4, ..Default::default() }).unwrap();
        let flat = *m.profile().pieces().iter().find(|p| p.flat).unwrap();
        let side = 0.5 * (flat.x1 - flat.x0);
        let q = Square::new(Point::new(0.5 * (flat.x0 + flat.x1), 0.5), side);
        let s = square_integrals(o.as_ref(), &q, NormKind::Frobenius, &quad()).unwrap();
        // slope 1/16 on the square: |Du| = |adj Du| = √(1 + 1/256)
        let density = (1.0 + 1.0 / 256.0f64).sqrt();
        assert!((s.forward_energy.value - density * side * side).abs() < 1e-14);
        assert!((s.inverse_energy.value - density * side * side).abs() < 1e-14);
        assert!((s.image_area.value - side * side / 16.0).abs() < 1e-15);
        let rows = check_degenerate_square(o.as_ref(), &q, Label::Bad, 0.1, NormKind::Frobenius, &quad()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.satisfied), "{rows:?}");
    }

    #[test]
    fn interpolation_error_vanishes_for_affine() {
        let o = from_spec("affine:m11=1.2,m12=0.3,m22=0.7", None).unwrap();
        let q = Square::new(Point::new(0.5, 0.5), 0.125);
        let e = interpolation_error(o.as_ref(), &q, crate::mesh::Diagonal::default(), NormKind::Frobenius, &quad(), None).unwrap();
        assert!(e.value < 1e-13);
    }

    #[test]
    fn cantor_family_energies() {
        let rows = cantor_energy_family(&[0, 1, 2, 3], CantorParams::default(), NormKind::Frobenius, &quad()).unwrap();
        assert!((rows[0].forward - 2f64.sqrt()).abs() < 1e-15);
        for e in &rows {
            assert!((e.forward_quadrature.value - e.forward).abs() <= 1e-12);
            assert!((e.inverse_quadrature.value - e.inverse).abs() <= 1e-12);
        }
        // depth 1, ρ = 1/4, φ = 1/2: kept pieces of length 3/8 with slope 1/2,
        // middle of length 1/4 with slope 5/2
        let want = 0.75 * (1.25f64).sqrt() + 0.25 * (7.25f64).sqrt();
        assert!((rows[1].forward - want).abs() < 1e-14);
        assert!(check_cantor_family(&rows, 2.0 * 2f64.sqrt()).iter().all(|c| c.satisfied));
    }

    #[test]
    fn suite_on_identity_is_clean() {
        let o = from_spec("identity", None).unwrap();
        let rows = run_suite(o.as_ref(), &SuiteParams::default()).unwrap();
        assert!(rows.len() > 5);
        for r in &rows {
            assert!(r.satisfied, "{r:?}");
        }
    }

    #[test]
    fn inconclusive_flag() {
        let c = CheckResult::new("x", "m", Relation::LessEqual, 1.05, 1.0, 0.2);
        assert!(c.satisfied && c.inconclusive);
        let c = CheckResult::new("x", "m", Relation::LessEqual, 0.5, 1.0, 0.01);
        assert!(c.satisfied && !c.inconclusive);
    }
}
