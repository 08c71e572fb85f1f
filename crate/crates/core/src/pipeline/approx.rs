//! Tile, classify, interpolate everywhere, validate and repair.

use super::classify::{choose_diagonal, classify_squares, ClassifyParams, Label, SquareClassification};
use super::report::{error_report, ErrorTerms};
use super::PipelineError;
use crate::geom::{BBox, Point};
use crate::linalg2::NormKind;
use crate::maps::{gradient, MapOracle};
use crate::mesh::{r_tiling, GradingParams, MeshError, MeshLayout, Tiling};
use crate::numeric::CompensatedSum;
use crate::pamap::PAMap;
use crate::quadrature::{integrate_tagged, mesh_cells, QuadratureParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxParams {
    pub classify: ClassifyParams,
    pub grading: GradingParams,
    pub quad: QuadratureParams,
    pub norm: NormKind,
    /// Seed for the injectivity spot check.
    pub seed: u64,
    /// Number of random points in the injectivity spot check.
    pub injectivity_samples: usize,
}

impl Default for ApproxParams {
    fn default() -> Self {
        Self {
            classify: ClassifyParams::default(),
            grading: GradingParams::default(),
            // |Du − Dv| has a kink wherever it vanishes
            quad: QuadratureParams { level: 1, tol: 1e-3, ..QuadratureParams::default() },
            norm: NormKind::Frobenius,
            seed: 0,
            injectivity_samples: 1024,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LabelCounts {
    pub good: usize,
    pub bad: usize,
    pub negligible: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproxReport {
    pub map: String,
    pub r: f64,
    pub norm: NormKind,
    pub counts: LabelCounts,
    pub num_triangles: usize,
    pub refinement_rounds: usize,
    #[serde(flatten)]
    pub errors: ErrorTerms,
    /// `∫|Dv| / ∫|Du|` outside the good squares (measured, not bounded).
    pub gluing_ratio_k: f64,
    pub pa_forward_energy: f64,
    pub pa_inverse_energy: f64,
    pub valid: bool,
}

#[derive(Clone, Debug)]
pub struct Approximant {
    pub map: PAMap,
    pub report: ApproxReport,
    pub classification: Vec<SquareClassification>,
    pub tiling: Tiling,
    /// Tiling square owning each triangle, if any.
    pub tile_of_triangle: Vec<Option<usize>>,
}

impl Approximant {
    pub fn ensure_valid(self) -> Result<Self, PipelineError> {
        if self.report.valid {
            Ok(self)
        } else {
            Err(PipelineError::GluingFailed { rounds: self.report.refinement_rounds })
        }
    }

    /// Triangles lying in squares with the given label.
    pub fn triangles_with_label(&self, label: Label) -> Vec<usize> {
        self.tile_of_triangle
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_some_and(|s| self.classification[s].label == label))
            .map(|(t, _)| t)
            .collect()
    }
}

/// Seeded spot check: inverse round trips where an inverse exists, Jacobian
/// sign consistency, and coincident images of distinct samples.
pub fn check_injective(o: &dyn MapOracle, seed: u64, samples: usize) -> Result<(), PipelineError> {
    if !o.properties().injective {
        return Err(PipelineError::NonInjectiveOracle(format!("{} is declared non-injective", o.name())));
    }
    let d = o.domain();
    let bb = d.bbox();
    let diam = d.diameter();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(samples);
    let mut guard = 0;
    while pts.len() < samples && guard < 100 * samples.max(1) {
        guard += 1;
        let p = Point::new(rng.gen_range(bb.min.x..=bb.max.x), rng.gen_range(bb.min.y..=bb.max.y));
        if d.contains(p) {
            pts.push(p);
        }
    }
    let (mut pos, mut neg) = (0usize, 0usize);
    let mut images = Vec::with_capacity(pts.len());
    for &p in &pts {
        let y = o.eval(p)?;
        if let Some(x) = o.inverse_eval(y) {
            if (x - p).norm() > 1e-6 * diam {
                return Err(PipelineError::NonInjectiveOracle(format!(
                    "inverse round trip at ({}, {}) misses by {}",
                    p.x,
                    p.y,
                    (x - p).norm()
                )));
            }
        }
        let j = gradient(o, p)?.det();
        if j > 0.0 {
            pos += 1;
        } else if j < 0.0 {
            neg += 1;
        }
        images.push(y);
    }
    if pos > 0 && neg > 0 {
        return Err(PipelineError::NonInjectiveOracle(format!(
            "Jacobian changes sign ({pos} positive, {neg} negative samples)"
        )));
    }
    if neg > 0 {
        return Err(PipelineError::NonInjectiveOracle("map reverses orientation".into()));
    }
    // distinct samples landing on (almost) the same image
    let mut order: Vec<usize> = (0..images.len()).collect();
    order.sort_by(|&a, &b| images[a].x.total_cmp(&images[b].x));
    let tol = 1e-12 * diam;
    for (k, &a) in order.iter().enumerate() {
        for &b in &order[k + 1..] {
            if images[b].x - images[a].x > tol {
                break;
            }
            if (images[b] - images[a]).norm() <= tol && (pts[a] - pts[b]).norm() > 1e-9 * diam {
                return Err(PipelineError::NonInjectiveOracle("two samples share an image".into()));
            }
        }
    }
    Ok(())
}

pub fn build_approximant(o: &dyn MapOracle, r: f64, params: &ApproxParams) -> Result<Approximant, PipelineError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(PipelineError::InvalidParameter(format!("tile size must be positive, got {r}")));
    }
    check_injective(o, params.seed, params.injectivity_samples)?;
    let domain = o.domain();
    let tiling = match r_tiling(domain, r) {
        Ok(t) => t,
        Err(MeshError::EmptyTiling { .. }) => Tiling::empty(domain, r),
        Err(e) => return Err(e.into()),
    };
    let classification = classify_squares(o, &tiling, &params.classify)?;
    let mut layout = MeshLayout::new(domain, &tiling, params.grading);
    for (k, c) in classification.iter().enumerate() {
        layout.set_diagonal(k, c.chosen_diagonal);
    }

    let mut rounds = 0;
    let (map, tile_of_triangle) = loop {
        let mesh = layout.mesh()?;
        let image = mesh
            .triangulation
            .vertices()
            .iter()
            .map(|&p| o.eval(p))
            .collect::<Result<Vec<_>, _>>()?;
        let map = PAMap::new(mesh.triangulation, image)?;
        let tiles: Vec<Option<usize>> =
            mesh.square_of_triangle.iter().map(|s| s.map(|s| layout.squares()[s].tile)).collect();
        let rep = map.validate_homeomorphism();
        if rep.is_homeomorphism {
            break (map, tiles);
        }
        let mut changed = false;
        let mut offending: Vec<usize> = rep.orientation_violations.clone();
        if offending.is_empty() {
            // boundary image is not simple: refine along the whole boundary strip
            offending = (0..map.num_triangles()).filter(|t| mesh.square_of_triangle[*t].is_none()).collect();
        }
        let mut squares: Vec<usize> = offending.iter().filter_map(|&t| mesh.square_of_triangle[t]).collect();
        squares.sort_unstable();
        squares.dedup();
        // refine from the highest index so earlier indices stay put
        for &s in squares.iter().rev() {
            if let Some(kids) = layout.refine_square(s) {
                changed = true;
                for k in kids {
                    let q = layout.square_geometry(&layout.squares()[k]);
                    let (d, _) = choose_diagonal(o, &q)?;
                    layout.set_diagonal(k, d);
                }
            }
        }
        for &t in offending.iter().filter(|&&t| mesh.square_of_triangle[t].is_none()) {
            let tri = map.source().triangle_points(t);
            changed |= layout.refine_strip_near(&BBox::of_points(tri.iter()));
        }
        rounds += 1;
        if !changed {
            break (map, tiles);
        }
    };

    let errors = error_report(o, &map, &params.quad, params.norm)?;
    let valid = map.validate_homeomorphism().is_homeomorphism;

    // energies outside the good squares
    let outside: Vec<usize> = (0..map.num_triangles())
        .filter(|&t| !tile_of_triangle[t].is_some_and(|s| classification[s].label == Label::Good))
        .collect();
    let pa_outside = map.w11_energy_on(params.norm, outside.iter().copied());
    let gluing_ratio_k = if outside.is_empty() {
        f64::NAN
    } else {
        let pieces = o.pieces();
        let cells: Vec<_> = mesh_cells(map.source(), pieces.as_ref())
            .into_iter()
            .filter(|(_, t)| outside.binary_search(t).is_ok())
            .collect();
        let oracle_outside = integrate_tagged(&cells, &params.quad, |p, _| {
            gradient(o, p).map(|g| g.norm(params.norm)).unwrap_or(f64::NAN)
        })?;
        pa_outside / oracle_outside.value
    };
    let pa_forward_energy = map.w11_energy(params.norm);
    let pa_inverse_energy = if valid {
        map.invert_unchecked().w11_energy(params.norm)
    } else {
        f64::NAN
    };

    let mut counts = LabelCounts::default();
    for c in &classification {
        match c.label {
            Label::Good => counts.good += 1,
            Label::Bad => counts.bad += 1,
            Label::Negligible => counts.negligible += 1,
        }
    }
    let report = ApproxReport {
        map: o.name(),
        r,
        norm: params.norm,
        counts,
        num_triangles: map.num_triangles(),
        refinement_rounds: rounds,
        errors,
        gluing_ratio_k,
        pa_forward_energy,
        pa_inverse_energy,
        valid,
    };
    Ok(Approximant { map, report, classification, tiling, tile_of_triangle })
}

/// Fraction of the domain area covered by squares of each label.
pub fn label_area_fractions(a: &Approximant) -> [f64; 3] {
    let total = a.map.source().area();
    let mut s = [CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new()];
    for c in &a.classification {
        let k = match c.label {
            Label::Good => 0,
            Label::Bad => 1,
            Label::Negligible => 2,
        };
        s[k].add(c.square.area());
    }
    s.map(|x| x.value() / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::from_spec;

    #[test]
    fn identity_is_reproduced_exactly() {
        let o = from_spec("identity", None).unwrap();
        for r in [0.1, 0.05, 0.5] {
            let a = build_approximant(o.as_ref(), r, &ApproxParams::default()).unwrap();
            assert!(a.report.valid);
            assert_eq!(a.report.errors.total_eta, 0.0, "r = {r}");
            for (p, q) in a.map.source().vertices().iter().zip(a.map.image_vertices()) {
                assert_eq!(p, q);
            }
        }
    }

    #[test]
    fn affine_is_reproduced() {
        let o = from_spec("affine:m11=1.5,m12=0.3,m21=-0.2,m22=0.8,b1=0.1,b2=-1", None).unwrap();
        let a = build_approximant(o.as_ref(), 0.125, &ApproxParams::default()).unwrap();
        assert!(a.report.valid);
        assert!(a.report.errors.total_eta <= 1e-9, "{:?}", a.report);
    }

    #[test]
    fn boundary_vertices_match_the_oracle() {
        let o = from_spec("sine_warp:a=0.1", None).unwrap();
        let a = build_approximant(o.as_ref(), 1.0 / 16.0, &ApproxParams::default()).unwrap();
        assert!(a.report.valid);
        let t = a.map.source();
        for l in t.boundary() {
            for &v in l {
                assert_eq!(a.map.image_vertices()[v], o.eval(t.vertices()[v]).unwrap());
            }
        }
        assert!(a.report.pa_forward_energy > 0.0);
        let gap = (a.report.pa_forward_energy - a.report.pa_inverse_energy).abs();
        assert!(gap <= 1e-9 * a.report.pa_forward_energy);
    }

    #[test]
    fn folding_oracle_is_rejected() {
        let o = from_spec("fold", None).unwrap();
        assert!(matches!(
            build_approximant(o.as_ref(), 0.1, &ApproxParams::default()),
            Err(PipelineError::NonInjectiveOracle(_))
        ));
    }

    #[test]
    fn non_injective_without_declaration_is_caught() {
        struct Hidden;
        impl MapOracle for Hidden {
            fn name(&self) -> String {
                "hidden-fold".into()
            }
            fn domain(&self) -> &crate::mesh::Polygon {
                static D: std::sync::OnceLock<crate::mesh::Polygon> = std::sync::OnceLock::new();
                D.get_or_init(crate::mesh::Polygon::unit_square)
            }
            fn eval(&self, p: Point) -> Result<Point, crate::maps::MapError> {
                Ok(Point::new((p.x - 0.5).abs(), p.y))
            }
        }
        assert!(matches!(check_injective(&Hidden, 0, 256), Err(PipelineError::NonInjectiveOracle(_))));
    }

    #[test]
    fn empty_tiling_still_meshes() {
        let o = from_spec("sine_warp:a=0.05", None).unwrap();
        let a = build_approximant(o.as_ref(), 0.5, &ApproxParams::default()).unwrap();
        assert!(a.classification.is_empty());
        assert!(a.report.valid);
    }
}
