//! Tiling, classification, interpolation and error reporting.

mod approx;
mod classify;
mod report;

pub use approx::{build_approximant, check_injective, label_area_fractions, ApproxParams, ApproxReport, Approximant, LabelCounts};
pub use classify::{
    choose_diagonal, classify_square, classify_squares, eval_interpolation, interpolate_square, ClassifyParams, Label,
    SquareClassification,
};
pub use report::{error_report, ErrorTerms, InverseMethod};

use crate::maps::MapError;
use crate::mesh::MeshError;
use crate::pamap::PaMapError;
use crate::quadrature::QuadratureError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("oracle is not injective: {0}")]
    NonInjectiveOracle(String),
    #[error("approximant is still not a homeomorphism after {rounds} refinement rounds")]
    GluingFailed { rounds: usize },
    #[error("oracle failed on square {square}: {source}")]
    OracleFailure { square: usize, source: MapError },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    PaMap(#[from] PaMapError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}
