use crate::scalar::{ComplexScalar, RealOf};
use ndarray::Array2;

/// Black-box parametric nonlinear eigenvalue problem L(lambda, p).
///
/// This is the only interface between user problems and the solver stack.
/// Implementations must be pure: identical `(lambda, p)` yield identical
/// matrices, and `eval` may be called concurrently from many threads.
pub trait ParametricProblem<C: ComplexScalar>: Send + Sync {
    /// Matrix size at parameter `p` (may depend on `p`).
    fn dim(&self, p: RealOf<C>) -> usize;

    /// Dense evaluation of L(lambda, p), square of size `dim(p)`.
    fn eval(&self, lambda: C, p: RealOf<C>) -> Array2<C>;

    /// Closed parameter interval `[p_min, p_max]`.
    fn param_range(&self) -> (RealOf<C>, RealOf<C>);
}

impl<C: ComplexScalar, T: ParametricProblem<C> + ?Sized> ParametricProblem<C> for &T {
    fn dim(&self, p: RealOf<C>) -> usize {
        (**self).dim(p)
    }
    fn eval(&self, lambda: C, p: RealOf<C>) -> Array2<C> {
        (**self).eval(lambda, p)
    }
    fn param_range(&self) -> (RealOf<C>, RealOf<C>) {
        (**self).param_range()
    }
}
