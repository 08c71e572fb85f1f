//! Polygonal domains, r-tilings, triangulations and overlays.

pub mod io;
pub mod mesher;
pub mod overlay;
pub mod polygon;
pub mod predicates;
pub mod svg;
pub mod tiling;
pub mod triangulation;

pub use mesher::{triangulate, triangulate_domain, Diagonal, GradingParams, LayoutSquare, MeshLayout, MeshOutput};
pub use overlay::{overlay, Overlay, OverlayCell};
pub use polygon::Polygon;
pub use predicates::{orientation, Orientation};
pub use tiling::{r_tiling, Square, Tiling};
pub use triangulation::Triangulation;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeshError {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("r-tiling with r = {r} is empty (uncovered area {uncovered_area})")]
    EmptyTiling { r: f64, uncovered_area: f64 },
    #[error("invalid triangulation: {0}")]
    InvalidTriangulation(String),
    #[error("triangulation failed: {0}")]
    TriangulationFailed(String),
    #[error("overlay discarded {count} sliver cells of total area {discarded_area}")]
    OverlayDegenerate { count: usize, discarded_area: f64 },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}
