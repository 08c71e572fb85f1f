use super::PipelineError;
use crate::geom::Point;
use crate::maps::{gradient, MapError, MapOracle};
use crate::mesh::predicates::in_triangle_closed;
use crate::mesh::{Diagonal, Square, Tiling};
use crate::pamap::Affine;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyParams {
    /// Threshold on sampled `|J|` below which a square counts as degenerate.
    pub tau_j: f64,
    /// Allowed interpolation residual, relative to the tile side.
    pub eps_res: f64,
    /// Samples per side of each square.
    pub samples: usize,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        Self { tau_j: 1e-8, eps_res: 0.05, samples: 5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Good,
    Bad,
    Negligible,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SquareClassification {
    pub square: Square,
    pub label: Label,
    pub sampled_min_abs_jacobian: f64,
    /// Largest sampled `|u − u_Q|`, in length units.
    pub interpolation_residual: f64,
    pub chosen_diagonal: Diagonal,
    /// Smallest signed determinant of the two interpolation pieces.
    pub min_piece_det: f64,
}

/// The two affine pieces of the interpolation of `o` on `q`, ordered as
/// [`Diagonal::split`].
pub fn interpolate_square(o: &dyn MapOracle, q: &Square, diagonal: Diagonal) -> Result<[Affine; 2], MapError> {
    let tris = diagonal.split(q);
    let mut out = [Affine::IDENTITY; 2];
    for (k, t) in tris.iter().enumerate() {
        let img = [o.eval(t[0])?, o.eval(t[1])?, o.eval(t[2])?];
        out[k] = Affine::from_triangles(t, &img);
    }
    Ok(out)
}

/// Diagonal whose two pieces have the larger minimum signed determinant;
/// ties keep the default.
pub fn choose_diagonal(o: &dyn MapOracle, q: &Square) -> Result<(Diagonal, f64), MapError> {
    let mut best = (Diagonal::LowerLeftUpperRight, f64::NEG_INFINITY);
    for d in [Diagonal::LowerLeftUpperRight, Diagonal::UpperLeftLowerRight] {
        let p = interpolate_square(o, q, d)?;
        let m = p[0].a.det().min(p[1].a.det());
        if m > best.1 {
            best = (d, m);
        }
    }
    Ok(best)
}

/// Evaluates the interpolation at `p` through the piece containing it.
pub fn eval_interpolation(q: &Square, diagonal: Diagonal, pieces: &[Affine; 2], p: Point) -> Point {
    let tris = diagonal.split(q);
    let k = if in_triangle_closed(p, &tris[0]) { 0 } else { 1 };
    pieces[k].apply(p)
}

pub fn classify_square(o: &dyn MapOracle, q: &Square, params: &ClassifyParams, r: f64) -> Result<SquareClassification, MapError> {
    let (diagonal, min_piece_det) = choose_diagonal(o, q)?;
    let pieces = interpolate_square(o, q, diagonal)?;
    let mut min_j = f64::INFINITY;
    let mut residual: f64 = 0.0;
    for p in q.sample_grid(params.samples) {
        min_j = min_j.min(gradient(o, p)?.det().abs());
        residual = residual.max((o.eval(p)? - eval_interpolation(q, diagonal, &pieces, p)).norm());
    }
    let small = residual <= params.eps_res * r;
    let label = match (min_j >= params.tau_j, small) {
        (true, true) => Label::Good,
        (false, true) => Label::Bad,
        _ => Label::Negligible,
    };
    Ok(SquareClassification {
        square: *q,
        label,
        sampled_min_abs_jacobian: min_j,
        interpolation_residual: residual,
        chosen_diagonal: diagonal,
        min_piece_det,
    })
}

pub fn classify_squares(
    o: &dyn MapOracle,
    tiling: &Tiling,
    params: &ClassifyParams,
) -> Result<Vec<SquareClassification>, PipelineError> {
    if params.samples == 0 {
        return Err(PipelineError::InvalidParameter("at least one sample per side is required".into()));
    }
    tiling
        .squares
        .par_iter()
        .enumerate()
        .map(|(k, q)| {
            classify_square(o, q, params, tiling.r).map_err(|source| PipelineError::OracleFailure { square: k, source })
        })
        .collect()
}
