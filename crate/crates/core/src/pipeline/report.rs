//! The four error terms between an oracle and a piecewise affine approximant.

use super::PipelineError;
use crate::geom::Point;
use crate::linalg2::NormKind;
use crate::maps::{gradient, inverse_point, MapOracle};
use crate::numeric::Estimate;
use crate::pamap::PAMap;
use crate::quadrature::{integrate_tagged, mesh_cells, sample_nodes, QuadratureParams};
use rayon::prelude::*;
use serde::Serialize;

/// How the inverse terms were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InverseMethod {
    /// The oracle's own inverse.
    Oracle,
    /// Per-point Newton iteration on the forward map.
    Newton,
    /// Some points had no inverse; those were measured through `u_η⁻¹ ∘ u`
    /// and the gradient term through a change of variables.
    Sampled,
    /// The approximant is not a homeomorphism; inverse terms are undefined.
    Unavailable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorTerms {
    /// Sampled lower bound for `sup |u − u_η|`.
    pub linf_forward: f64,
    /// Sampled lower bound for `sup |u⁻¹ − u_η⁻¹|`.
    pub linf_inverse: f64,
    pub l1_grad_forward: Estimate,
    pub l1_grad_inverse: Estimate,
    pub total_eta: f64,
    /// Points used for each sup estimate.
    pub linf_samples: usize,
    pub inverse_method: InverseMethod,
    pub inverse_warning: bool,
}

/// Sample points of `m`'s source triangles: quadrature nodes plus corners.
fn triangle_samples(m: &PAMap, t: usize, quad: &QuadratureParams) -> Vec<Point> {
    let tri = m.source().triangle_points(t);
    let mut pts = sample_nodes(&tri, quad);
    pts.extend(tri);
    pts
}

pub fn error_report(
    o: &dyn MapOracle,
    m: &PAMap,
    quad: &QuadratureParams,
    kind: NormKind,
) -> Result<ErrorTerms, PipelineError> {
    let valid = m.validate_homeomorphism().is_homeomorphism;
    let has_oracle_inverse = m
        .source()
        .vertices()
        .first()
        .map(|&p| o.inverse_eval(o.eval(p).unwrap_or(p)).is_some())
        .unwrap_or(false);
    let inverse = if valid { Some(m.invert_unchecked()) } else { None };

    // sup terms, per triangle then a max (order independent)
    let per_tri: Vec<Result<(f64, f64, usize, bool), PipelineError>> = (0..m.num_triangles())
        .into_par_iter()
        .map(|t| {
            let (mut fwd, mut inv, mut n, mut fallback) = (0.0f64, 0.0f64, 0usize, false);
            for x in triangle_samples(m, t, quad) {
                let ux = o.eval(x)?;
                let vx = m.eval_in(t, x);
                fwd = fwd.max((ux - vx).norm());
                n += 1;
                if inverse.is_none() {
                    continue;
                }
                // y = u_η(x): compare u⁻¹(y) with u_η⁻¹(y) = x
                match inverse_point(o, vx, x) {
                    Some(back) => inv = inv.max((back - x).norm()),
                    None => {
                        fallback = true;
                        if let Ok(z) = inverse.as_ref().expect("valid").eval(ux) {
                            inv = inv.max((z - x).norm());
                        }
                    }
                }
            }
            Ok((fwd, inv, n, fallback))
        })
        .collect();
    let (mut linf_forward, mut linf_inverse, mut samples, mut fallback) = (0.0f64, 0.0f64, 0usize, false);
    for r in per_tri {
        let (f, i, n, fb) = r?;
        linf_forward = linf_forward.max(f);
        linf_inverse = linf_inverse.max(i);
        samples += n;
        fallback |= fb;
    }

    let pieces = o.pieces();
    let fwd_cells = mesh_cells(m.source(), pieces.as_ref());
    let l1_grad_forward = integrate_tagged(&fwd_cells, quad, |p, t| match gradient(o, p) {
        Ok(g) => (g - m.gradient(t)).norm(kind),
        Err(_) => f64::NAN,
    })?;

    let (l1_grad_inverse, method) = match &inverse {
        None => (Estimate { value: f64::NAN, error: f64::NAN }, InverseMethod::Unavailable),
        Some(inv) => {
            let img_pieces = o.image_pieces();
            let cells = mesh_cells(inv.source(), img_pieces.as_ref());
            let direct = integrate_tagged(&cells, quad, |y, t| {
                let x = inv.eval_in(t, y);
                let g = match o.inverse_grad(y) {
                    Some(g) => Some(g),
                    None => inverse_point(o, y, x).and_then(|z| gradient(o, z).ok()).and_then(|g| g.inverse().ok()),
                };
                match g {
                    Some(g) => (g - inv.gradient(t)).norm(kind),
                    None => f64::NAN,
                }
            });
            match direct {
                Ok(e) if !fallback => (e, if has_oracle_inverse { InverseMethod::Oracle } else { InverseMethod::Newton }),
                _ => {
                    // ∫_Δ |Du⁻¹ − Dv⁻¹| = ∫_Ω |Du(x)⁻¹ − Dv⁻¹(u(x))| |J(x)| dx
                    let e = integrate_tagged(&fwd_cells, quad, |p, _| {
                        let (Ok(g), Ok(y)) = (gradient(o, p), o.eval(p)) else { return f64::NAN };
                        let Some(t) = inv.source().locate(y) else { return 0.0 };
                        match g.inverse() {
                            Ok(gi) => (gi - inv.gradient(t)).norm(kind) * g.det().abs(),
                            Err(_) => 0.0,
                        }
                    })?;
                    (e, InverseMethod::Sampled)
                }
            }
        }
    };

    let total_eta = linf_forward + linf_inverse + l1_grad_forward.value + l1_grad_inverse.value;
    Ok(ErrorTerms {
        linf_forward,
        linf_inverse: if inverse.is_some() { linf_inverse } else { f64::NAN },
        l1_grad_forward,
        l1_grad_inverse,
        total_eta,
        linf_samples: samples,
        inverse_method: method,
        inverse_warning: matches!(method, InverseMethod::Sampled | InverseMethod::Unavailable),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{from_spec, PaOracle};
    use crate::mesh::Triangulation;

    #[test]
    fn self_comparison_is_zero() {
        let t = Triangulation::grid(0.0, 0.0, 1.0, 1.0, 4, 4);
        let m = PAMap::from_fn(t, |p| Point::new(p.x + 0.1 * p.x * p.y, p.y + 0.05 * p.x * p.x));
        let o = PaOracle::new(m.clone(), "pa").unwrap();
        let e = error_report(&o, &m, &QuadratureParams::default(), NormKind::Frobenius).unwrap();
        assert!(e.linf_forward <= 1e-9 && e.linf_inverse <= 1e-9, "{e:?}");
        assert!(e.l1_grad_forward.value <= 1e-9 && e.l1_grad_inverse.value <= 1e-9, "{e:?}");
        assert_eq!(e.inverse_method, InverseMethod::Oracle);
    }

    #[test]
    fn identity_against_small_stretch() {
        let e = 0.01;
        let o = from_spec(&format!("affine:m11={}", 1.0 + e), None).unwrap();
        let m = PAMap::identity(Triangulation::grid(0.0, 0.0, 1.0, 1.0, 3, 3));
        let rep = error_report(o.as_ref(), &m, &QuadratureParams::default(), NormKind::Frobenius).unwrap();
        assert!((rep.l1_grad_forward.value - e).abs() < 1e-12);
        // inverse gradients differ by 1 − 1/(1+e) over the image of area 1
        assert!((rep.l1_grad_inverse.value - (1.0 - 1.0 / (1.0 + e))).abs() < 1e-12);
        assert!((rep.linf_forward - e).abs() < 1e-12);
    }
}
