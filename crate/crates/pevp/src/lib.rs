//! Non-intrusive approximation of eigenvalue curves of parametric
//! nonlinear eigenvalue problems `L(lambda, p) x = 0`.
//!
//! The pipeline solves non-parametric problems at collocation points by
//! contour integration ([`beyn`]), pairs eigenvalues across neighboring
//! points by optimal assignment ([`matching`]), chains the pairs into
//! global tracks with migration handling ([`curves`]), represents groups
//! of bifurcating eigenvalues implicitly through interpolated monic
//! polynomials ([`bifurcation`]), and refines the collocation grid with a
//! predictor-corrector loop until a user tolerance holds ([`adaptive`]).
//!
//! All numerics are generic over the complex scalar ([`ComplexScalar`]:
//! `c32` or `c64`); the CLI and the built-in benchmark problems use the
//! double-precision aliases below.

pub mod adaptive;
pub mod beyn;
pub mod bifurcation;
pub mod core;
pub mod curves;
pub mod matching;
pub mod problems;
pub mod scalar;

pub use adaptive::{
    model_error_at, run_adaptive, run_adaptive_with, AdaptiveConfig, AdaptiveError,
    MismatchPolicy, RunReport, SnapshotCache,
};
pub use crate::core::{Contour, CoreError, ParametricProblem, QuadratureRule};
pub use beyn::{solve_nonparametric, BeynConfig, BeynError, EigenSnapshot};
pub use bifurcation::{build_surrogate, detect_groups, BifurcationGroup, ImplicitSurrogate};
pub use curves::{
    harmonic_mean_segment, stitch, CurveModel, CurveSample, CurvesError, InterpolationConfig,
    MigrationMode, Scheme, SegmentKind, Track,
};
pub use matching::{build_cost, flag_bifurcation_pairs, solve_assignment, CostMatrix, MatchPlan};
pub use scalar::{ComplexScalar, RealOf};

/// Default real scalar used by the CLI and built-in problems.
pub type Real64 = f64;
/// Default complex scalar used by the CLI and built-in problems.
pub type Complex64 = num_complex::Complex64;
