//! Shared domain types: parametric problems, contours, and quadrature.

mod contour;
mod problem;

pub use contour::{Contour, QuadratureRule};
pub use problem::ParametricProblem;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("contour radius must be positive, got {0}")]
    NonPositiveRadius(String),
    #[error("quadrature needs at least 4 nodes, got {0}")]
    TooFewNodes(usize),
}
