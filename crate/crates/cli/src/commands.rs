use crate::config::{ConfigError, ExperimentConfig};
use bisobolev::geom::{BBox, Point};
use bisobolev::maps::{from_spec, MapError, MapOracle};
use bisobolev::mesh::svg::{tiling_svg, triangulation_svg, SvgCanvas};
use bisobolev::mesh::{r_tiling, MeshError};
use bisobolev::pamap::PaMapError;
use bisobolev::pipeline::{build_approximant, Label, PipelineError};
use bisobolev::verify::{run_suite, CheckResult, VerifyError};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    PaMap(#[from] PaMapError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Output(String),
}

impl CliError {
    /// Stable identifier for scripts.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "InvalidConfig",
            CliError::Mesh(e) => mesh_code(e),
            CliError::Map(e) => map_code(e),
            CliError::PaMap(e) => match e {
                PaMapError::Mesh(m) => mesh_code(m),
                PaMapError::OutsideDomain { .. } => "OutsideDomain",
                PaMapError::NotHomeomorphism(_) => "NotHomeomorphism",
                _ => "InvalidMap",
            },
            CliError::Pipeline(e) => match e {
                PipelineError::NonInjectiveOracle(_) => "NonInjectiveOracle",
                PipelineError::GluingFailed { .. } => "GluingFailed",
                PipelineError::OracleFailure { .. } => "OracleFailure",
                PipelineError::InvalidParameter(_) => "InvalidParameter",
                PipelineError::Map(m) => map_code(m),
                PipelineError::Mesh(m) => mesh_code(m),
                PipelineError::PaMap(_) => "InvalidMap",
                PipelineError::Quadrature(_) => "QuadratureUnstable",
            },
            CliError::Verify(e) => match e {
                VerifyError::DegenerateJacobian { .. } => "DegenerateJacobian",
                VerifyError::InverseUnavailable(_) => "InverseUnavailable",
                VerifyError::SquareOutsideDomain { .. } => "OutsideDomain",
                VerifyError::InvalidParameter(_) => "InvalidParameter",
                VerifyError::Map(m) => map_code(m),
                VerifyError::Mesh(m) => mesh_code(m),
                VerifyError::Quadrature(_) => "QuadratureUnstable",
                VerifyError::Pipeline(_) => "PipelineFailure",
            },
            CliError::Io { .. } => "Io",
            CliError::Output(_) => "Output",
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Inner<'a> {
            code: &'a str,
            message: String,
        }
        #[derive(Serialize)]
        struct Outer<'a> {
            error: Inner<'a>,
        }
        serde_json::to_string(&Outer { error: Inner { code: self.code(), message: self.to_string() } })
            .expect("error json")
    }
}

fn mesh_code(e: &MeshError) -> &'static str {
    match e {
        MeshError::InvalidPolygon(_) => "InvalidPolygon",
        MeshError::InvalidParameter(_) => "InvalidParameter",
        MeshError::EmptyTiling { .. } => "EmptyTiling",
        MeshError::InvalidTriangulation(_) => "InvalidTriangulation",
        MeshError::TriangulationFailed(_) => "TriangulationFailed",
        MeshError::OverlayDegenerate { .. } => "OverlayDegenerate",
        MeshError::Parse { .. } => "Parse",
    }
}

fn map_code(e: &MapError) -> &'static str {
    match e {
        MapError::UnknownMap(_) => "UnknownMap",
        MapError::BadParams(_) => "BadParams",
        MapError::OutsideDomain { .. } => "OutsideDomain",
        MapError::InverseUnavailable(_) => "InverseUnavailable",
        MapError::Quadrature(_) => "QuadratureUnstable",
        MapError::Mesh(m) => mesh_code(m),
    }
}

/// What a command printed and how it ended.
pub struct Outcome {
    pub stdout: String,
    /// A result-level failure (unsatisfied check, invalid map, …) reported as
    /// JSON on stderr with exit status 1.
    pub failure: Option<(&'static str, String)>,
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.display().to_string(), message: e.to_string() })?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn out_path(cfg: &ExperimentConfig, name: &str) -> Option<PathBuf> {
    cfg.out_dir.as_ref().map(|d| d.join(name))
}

/// Decimal with at most 12 fractional digits, trailing zeros removed.
pub fn fmt_num(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn oracle(cfg: &ExperimentConfig) -> Result<Box<dyn MapOracle>, CliError> {
    Ok(from_spec(&cfg.map, cfg.domain_polygon()?)?)
}

pub fn tile(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let domain = match cfg.domain_polygon()? {
        Some(d) => d,
        None => oracle(cfg)?.domain().clone(),
    };
    let (tiling, failure) = match r_tiling(&domain, cfg.r) {
        Ok(t) => (t, None),
        Err(e @ MeshError::EmptyTiling { .. }) => {
            (bisobolev::mesh::Tiling::empty(&domain, cfg.r), Some(("EmptyTiling", e.to_string())))
        }
        Err(e) => return Err(e.into()),
    };
    let stdout = format!("{} squares, uncovered {}\n", tiling.len(), fmt_num(tiling.uncovered_area));
    if let Some(p) = &cfg.svg {
        write_file(p, &tiling_svg(&domain, &tiling))?;
    }
    if let Some(p) = out_path(cfg, "tiling.json") {
        write_file(&p, &(serde_json::to_string_pretty(&tiling).map_err(|e| CliError::Output(e.to_string()))? + "\n"))?;
    }
    Ok(Outcome { stdout, failure })
}

#[derive(Serialize)]
struct ApproxOutput<'a, R: Serialize> {
    config: &'a ExperimentConfig,
    report: R,
}

pub fn approx(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let o = oracle(cfg)?;
    let a = build_approximant(o.as_ref(), cfg.r, &cfg.approx_params())?;
    let json = serde_json::to_string_pretty(&ApproxOutput { config: cfg, report: &a.report })
        .map_err(|e| CliError::Output(e.to_string()))?
        + "\n";
    if let Some(p) = out_path(cfg, "report.json") {
        write_file(&p, &json)?;
    }
    if let Some(p) = out_path(cfg, "map.pamap") {
        write_file(&p, &a.map.to_text())?;
        let mut highlight = a.triangles_with_label(Label::Bad);
        highlight.extend((0..a.map.num_triangles()).filter(|t| a.tile_of_triangle[*t].is_none()));
        highlight.sort_unstable();
        write_file(&out_path(cfg, "source.svg").expect("out dir"), &triangulation_svg(a.map.source(), &highlight))?;
        if a.report.valid {
            let inv = a.map.invert()?;
            write_file(&out_path(cfg, "inverse.pamap").expect("out dir"), &inv.to_text())?;
            write_file(&out_path(cfg, "image.svg").expect("out dir"), &triangulation_svg(inv.source(), &highlight))?;
        }
    }
    let failure = if !a.report.valid {
        Some(("GluingFailed", format!("approximant is not a homeomorphism after {} rounds", a.report.refinement_rounds)))
    } else {
        match cfg.eta {
            Some(eta) if !(a.report.errors.total_eta <= eta) => Some((
                "EtaNotReached",
                format!("total error {} exceeds the requested {}", a.report.errors.total_eta, eta),
            )),
            _ => None,
        }
    };
    Ok(Outcome { stdout: json, failure })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn checks_csv(rows: &[CheckResult]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record([
        "check_name",
        "map",
        "r",
        "eps",
        "square_id",
        "lhs",
        "rhs",
        "uncertainty",
        "relation",
        "satisfied",
        "inconclusive",
    ])
    .map_err(err)?;
    for c in rows {
        let relation = serde_json::to_value(c.relation).map_err(|e| CliError::Output(e.to_string()))?;
        w.write_record([
            c.check_name.clone(),
            c.map_name.clone(),
            opt(c.r),
            opt(c.eps),
            c.square_id.map(|s| s.to_string()).unwrap_or_default(),
            c.lhs.to_string(),
            c.rhs.to_string(),
            c.uncertainty.to_string(),
            relation.as_str().unwrap_or_default().to_string(),
            c.satisfied.to_string(),
            c.inconclusive.to_string(),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}

pub fn verify(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let o = oracle(cfg)?;
    let rows = run_suite(o.as_ref(), &cfg.suite_params())?;
    let csv = checks_csv(&rows)?;
    if let Some(p) = out_path(cfg, "checks.csv") {
        write_file(&p, &csv)?;
    }
    let failed = rows.iter().filter(|r| !r.satisfied).count();
    let failure = (failed > 0).then(|| ("CheckFailed", format!("{failed} of {} checks not satisfied", rows.len())));
    Ok(Outcome { stdout: csv, failure })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConvergenceRow {
    pub r: f64,
    pub triangles: usize,
    pub valid: bool,
    pub good: usize,
    pub bad: usize,
    pub negligible: usize,
    pub linf_forward: f64,
    pub linf_inverse: f64,
    pub l1_grad_forward: f64,
    pub l1_grad_inverse: f64,
    pub total_eta: f64,
    /// `total_eta` over the previous row's.
    pub ratio: Option<f64>,
    pub gluing_ratio_k: f64,
}

pub fn convergence_rows(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow>, CliError> {
    let o = oracle(cfg)?;
    let params = cfg.approx_params();
    let mut rs = cfg.r_schedule.clone();
    rs.sort_by(|a, b| b.total_cmp(a));
    rs.dedup();
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(rs.len());
    for r in rs {
        let a = build_approximant(o.as_ref(), r, &params)?;
        let e = &a.report.errors;
        let ratio = rows.last().filter(|p| p.total_eta > 0.0).map(|p| e.total_eta / p.total_eta);
        rows.push(ConvergenceRow {
            r,
            triangles: a.report.num_triangles,
            valid: a.report.valid,
            good: a.report.counts.good,
            bad: a.report.counts.bad,
            negligible: a.report.counts.negligible,
            linf_forward: e.linf_forward,
            linf_inverse: e.linf_inverse,
            l1_grad_forward: e.l1_grad_forward.value,
            l1_grad_inverse: e.l1_grad_inverse.value,
            total_eta: e.total_eta,
            ratio,
            gluing_ratio_k: a.report.gluing_ratio_k,
        });
    }
    Ok(rows)
}

fn convergence_csv(rows: &[ConvergenceRow]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Output(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}

/// Log-log plot of `total_eta` against `r`; zeros sit on a floor line.
pub fn convergence_svg(title: &str, rows: &[ConvergenceRow]) -> String {
    const FLOOR: f64 = 1e-16;
    let pts: Vec<Point> = rows.iter().map(|r| Point::new(r.r.log10(), r.total_eta.max(FLOOR).log10())).collect();
    let mut bb = BBox::of_points(pts.iter());
    if pts.is_empty() {
        bb = BBox { min: Point::new(-2.0, -2.0), max: Point::new(0.0, 0.0) };
    }
    let (x0, x1) = ((bb.min.x - 0.1).floor(), (bb.max.x + 0.1).ceil());
    let (y0, y1) = ((bb.min.y - 0.1).floor(), (bb.max.y + 0.1).ceil());
    let bb = BBox { min: Point::new(x0, y0), max: Point::new(x1, y1) };
    let mut c = SvgCanvas::with_size(bb, 520.0, 360.0);
    let frame = [bb.min, Point::new(x1, y0), bb.max, Point::new(x0, y1), bb.min];
    c.polyline(&frame, "#000000", 1.0);
    let mut x = x0;
    while x <= x1 {
        c.polyline(&[Point::new(x, y0), Point::new(x, y1)], "#dddddd", 0.5);
        let (px, py) = c.map(Point::new(x, y0));
        c.text_px(px, py + 16.0, 11.0, "middle", &format!("1e{x}"));
        x += 1.0;
    }
    let step = ((y1 - y0) / 8.0).ceil().max(1.0);
    let mut y = y0;
    while y <= y1 {
        c.polyline(&[Point::new(x0, y), Point::new(x1, y)], "#dddddd", 0.5);
        let (px, py) = c.map(Point::new(x0, y));
        c.text_px(px - 6.0, py + 4.0, 11.0, "end", &format!("1e{y}"));
        y += step;
    }
    if pts.len() > 1 {
        c.polyline(&pts, "#1f4e79", 1.5);
    }
    for p in &pts {
        c.circle(*p, 3.0, "#c0392b");
    }
    let (w, h) = c.pixel_size();
    c.text_px(w / 2.0, 20.0, 13.0, "middle", &format!("total error vs tile size: {title}"));
    c.text_px(w / 2.0, h - 4.0, 11.0, "middle", "r");
    c.finish()
}

pub fn convergence(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let rows = convergence_rows(cfg)?;
    let csv = convergence_csv(&rows)?;
    let svg = convergence_svg(&cfg.map, &rows);
    if let Some(p) = out_path(cfg, "convergence.csv") {
        write_file(&p, &csv)?;
    }
    if let Some(p) = cfg.svg.clone().or_else(|| out_path(cfg, "convergence.svg")) {
        write_file(&p, &svg)?;
    }
    let invalid = rows.iter().filter(|r| !r.valid).count();
    let failure = (invalid > 0).then(|| ("GluingFailed", format!("{invalid} approximants are not homeomorphisms")));
    let mut stdout = csv;
    if stdout.is_empty() {
        let _ = writeln!(stdout);
    }
    Ok(Outcome { stdout, failure })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(1.0 - 49.0 * 0.01), "0.51");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-0.0), "0");
    }

    #[test]
    fn error_json_is_stable() {
        let e = CliError::Pipeline(PipelineError::NonInjectiveOracle("x".into()));
        assert_eq!(e.to_json(), r#"{"error":{"code":"NonInjectiveOracle","message":"oracle is not injective: x"}}"#);
    }
}
