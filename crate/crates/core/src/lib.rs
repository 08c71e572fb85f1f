//! Piecewise affine approximation of planar homeomorphisms, with exact
//! energies for the approximants and numerical checks of the estimates
//! that control them.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geom;
pub mod linalg2;
pub mod mesh;
pub mod numeric;
pub mod pamap;
pub mod quadrature;
pub mod maps;
pub mod pipeline;
pub mod verify;
