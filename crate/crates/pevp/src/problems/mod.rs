//! Built-in benchmark problems and a split-form loader for user matrices.

mod matrix_market;
mod split_form;

pub use matrix_market::{read_matrix_market, MatrixMarketError};
pub use split_form::{load_split_form, parse_scalar_expr, ScalarExpr, SplitFormError, SplitFormProblem};

use crate::core::ParametricProblem;
use crate::scalar::{ComplexScalar, RealOf};
use ndarray::Array2;
use num_traits::Float;

/// 2x2 toy problem `[[lambda, p], [1, lambda]]` with spectrum `{+-sqrt(p)}`:
/// real branches for p > 0, imaginary for p < 0, and a defective double
/// eigenvalue 0 at the order-2 bifurcation p = 0.
#[derive(Debug, Clone)]
pub struct ToyBifurcation<R> {
    range: (R, R),
}

pub fn toy_bifurcation<C: ComplexScalar>() -> ToyBifurcation<RealOf<C>> {
    ToyBifurcation {
        range: (C::real(-1.0), C::real(1.0)),
    }
}

impl<R: Copy> ToyBifurcation<R> {
    pub fn with_range(range: (R, R)) -> Self {
        Self { range }
    }
}

impl<C: ComplexScalar> ParametricProblem<C> for ToyBifurcation<RealOf<C>> {
    fn dim(&self, _p: RealOf<C>) -> usize {
        2
    }

    fn eval(&self, lambda: C, p: RealOf<C>) -> Array2<C> {
        let mut out = Array2::zeros((2, 2));
        out[(0, 0)] = lambda;
        out[(0, 1)] = C::from_real(p);
        out[(1, 0)] = C::one();
        out[(1, 1)] = lambda;
        out
    }

    fn param_range(&self) -> (RealOf<C>, RealOf<C>) {
        self.range
    }
}

/// Companion-matrix linear problem whose eigenvalues are the roots of
/// `lambda^3 + (p - 2) lambda + (2p - 1)`, for p in [-50, 50].
#[derive(Debug, Clone, Default)]
pub struct CubicCompanion;

pub fn cubic_companion() -> CubicCompanion {
    CubicCompanion
}

impl<C: ComplexScalar> ParametricProblem<C> for CubicCompanion {
    fn dim(&self, _p: RealOf<C>) -> usize {
        3
    }

    fn eval(&self, lambda: C, p: RealOf<C>) -> Array2<C> {
        let mut out = Array2::zeros((3, 3));
        let one = C::one();
        // companion of the cubic, minus lambda * identity
        out[(0, 0)] = -lambda;
        out[(0, 2)] = C::from_real(C::real(1.0) - (p + p));
        out[(1, 0)] = one;
        out[(1, 1)] = -lambda;
        out[(1, 2)] = C::from_real(C::real(2.0) - p);
        out[(2, 1)] = one;
        out[(2, 2)] = -lambda;
        out
    }

    fn param_range(&self) -> (RealOf<C>, RealOf<C>) {
        (C::real(-50.0), C::real(50.0))
    }
}

/// Roots of the defining cubic via Cardano's formula, branch-checked
/// against the polynomial residual. Independent of the eigensolver path;
/// intended as a validation oracle.
pub fn cubic_roots<C: ComplexScalar>(p: RealOf<C>) -> [C; 3] {
    let pc = C::from_real(p);
    let half = C::real(0.5);
    let _one = C::one();
    let three = C::real(3.0);
    // discriminant-bearing term 4p^3 + 84p^2 - 60p - 5 under the square root
    let disc = C::from_real(
        C::real(4.0) * p * p * p + C::real(84.0) * p * p - C::real(60.0) * p - C::real(5.0),
    );
    let sqrt_disc = disc.sqrt();
    let scale = C::from_real(C::real(6.0) * Float::sqrt(three));
    // pick the branch that avoids cancellation in alpha^3
    let base = -pc + C::from_real(half);
    let cand_plus = sqrt_disc / scale + base;
    let cand_minus = -sqrt_disc / scale + base;
    let alpha_cubed = if cand_plus.abs() >= cand_minus.abs() {
        cand_plus
    } else {
        cand_minus
    };
    let alpha = alpha_cubed.powf(C::real(1.0) / three);
    let beta = (pc - C::from_real(C::real(2.0))) / (alpha.mul_real(three));
    let rot = C::complex(-0.5_f64, 3f64.sqrt() / 2.0); // exp(2 pi i / 3)
    let roots = [
        alpha - beta,
        rot * alpha - rot.conj() * beta,
        rot.conj() * alpha - rot * beta,
    ];
    for r in roots {
        debug_assert!(
            cubic_residual(r, p) < C::real(1e-7),
            "cubic oracle branch failure"
        );
    }
    roots
}

/// Relative residual `|pi(lambda, p)| / (1 + |lambda|^3)` of the cubic.
pub fn cubic_residual<C: ComplexScalar>(lambda: C, p: RealOf<C>) -> RealOf<C> {
    let value = lambda * lambda * lambda
        + lambda.mul_real(p - C::real(2.0))
        + C::from_real(C::real(2.0) * p - C::real(1.0));
    value.abs() / (C::real(1.0) + Float::powi(lambda.abs(), 3))
}

/// Delayed feedback heat problem: central finite differences on (0, pi)
/// with M+1 grid points give the size-(M-1) problem
/// `kappa (M/pi)^2 T + (lambda + 0.1 + 0.05 e^{-lambda} + p e^{-2 lambda}) I`
/// with `T = tridiag(-1, 2, -1)`, for p in [-0.1, 0.1].
#[derive(Debug, Clone)]
pub struct DelayedHeat<C: ComplexScalar> {
    grid_intervals: usize,
    laplacian: Array2<C>,
}

pub const DELAYED_HEAT_DIFFUSIVITY: f64 = 0.02;

pub fn delayed_heat<C: ComplexScalar>(grid_intervals: usize) -> DelayedHeat<C> {
    assert!(grid_intervals >= 3, "need at least 3 grid intervals");
    let n = grid_intervals - 1;
    let scale = C::real(DELAYED_HEAT_DIFFUSIVITY)
        * Float::powi(C::real(grid_intervals as f64 / std::f64::consts::PI), 2);
    let mut laplacian = Array2::zeros((n, n));
    for i in 0..n {
        laplacian[(i, i)] = C::from_real(scale + scale);
        if i + 1 < n {
            laplacian[(i, i + 1)] = C::from_real(-scale);
            laplacian[(i + 1, i)] = C::from_real(-scale);
        }
    }
    DelayedHeat {
        grid_intervals,
        laplacian,
    }
}

impl<C: ComplexScalar> DelayedHeat<C> {
    pub fn grid_intervals(&self) -> usize {
        self.grid_intervals
    }

    /// The lambda-dependent scalar shift `lambda + 0.1 + 0.05 e^{-lambda} + p e^{-2 lambda}`.
    pub fn feedback_scalar(lambda: C, p: RealOf<C>) -> C {
        let decay = (-lambda).exp();
        lambda
            + C::from_real(C::real(0.1))
            + decay.mul_real(C::real(0.05))
            + (decay * decay).mul_real(p)
    }

    /// Eigenvalues of the scaled discrete Laplacian part,
    /// `kappa (M/pi)^2 (2 - 2 cos(k pi / M))` for k = 1..M-1.
    pub fn laplacian_modes(&self) -> Vec<RealOf<C>> {
        let m = self.grid_intervals;
        let scale = C::real(DELAYED_HEAT_DIFFUSIVITY)
            * Float::powi(C::real(m as f64 / std::f64::consts::PI), 2);
        (1..m)
            .map(|k| {
                let angle = C::real(k as f64 * std::f64::consts::PI / m as f64);
                scale * (C::real(2.0) - C::real(2.0) * Float::cos(angle))
            })
            .collect()
    }
}

/// Reference spectrum of the delayed-heat problem inside a contour, by
/// per-mode scalar root finding (multi-start Newton), independent of any
/// contour-integration machinery.
///
/// The matrix is a scalar shift of a normal matrix, so its eigenvalues
/// are exactly the solutions of `mu_k + s(lambda, p) = 0` per scaled
/// Laplacian mode `mu_k`. Double roots (where the mode's two branches
/// meet) are detected through the derivative and counted twice.
pub fn delayed_heat_mode_roots<C: ComplexScalar>(
    problem: &DelayedHeat<C>,
    contour: &crate::core::Contour<C>,
    p: RealOf<C>,
) -> Vec<C> {
    let center = contour.center();
    let radius = contour.radius();
    let p_c = C::from_real(p);
    let c01 = C::from_real(C::real(0.1));
    let c005 = C::from_real(C::real(0.05));
    let two = C::from_real(C::real(2.0));

    // crude magnitude bound of the non-mode terms over the disk
    let max_abs_lambda = center.abs() + radius;
    let max_exp = Float::exp(-center.re() + radius);
    let term_bound = max_abs_lambda
        + C::real(0.1)
        + C::real(0.05) * max_exp
        + Float::abs(p) * max_exp * max_exp
        + C::real(1.0);

    let mut roots: Vec<C> = Vec::new();
    for mu in problem.laplacian_modes() {
        if mu > C::real(2.0) * term_bound {
            break; // larger modes cannot vanish on the disk
        }
        let g = |lambda: C| -> C {
            let decay = (-lambda).exp();
            C::from_real(mu) + lambda + c01 + c005 * decay + p_c * decay * decay
        };
        let dg = |lambda: C| -> C {
            let decay = (-lambda).exp();
            C::one() - c005 * decay - two * p_c * decay * decay
        };
        let mut mode_roots: Vec<C> = Vec::new();
        let steps = 16;
        for a in 0..=steps {
            for b in 0..=steps {
                let fa = C::real(a as f64 / steps as f64) * C::real(2.0) - C::real(1.0);
                let fb = C::real(b as f64 / steps as f64) * C::real(2.0) - C::real(1.0);
                let mut lambda = center + C::complex(0.0, 0.0) + C::from_real(fa * radius)
                    + C::complex(0.0, 1.0).mul_real(fb * radius);
                let mut ok = false;
                for _ in 0..60 {
                    let step = g(lambda) / dg(lambda);
                    lambda -= step;
                    if step.abs() < C::real(1e-14) * (C::real(1.0) + lambda.abs()) {
                        ok = true;
                        break;
                    }
                    if lambda.abs() > C::real(1e3) {
                        break;
                    }
                }
                if !ok || g(lambda).abs() > C::real(1e-10) {
                    continue;
                }
                if !contour.contains(lambda, C::real(0.0)) {
                    continue;
                }
                if mode_roots.iter().any(|r| (*r - lambda).abs() < C::real(1e-9)) {
                    continue;
                }
                mode_roots.push(lambda);
            }
        }
        for r in mode_roots {
            roots.push(r);
            if dg(r).abs() < C::real(1e-5) {
                roots.push(r); // double root of this mode
            }
        }
    }
    roots.sort_by(crate::scalar::cmp_complex);
    roots
}

impl<C: ComplexScalar> ParametricProblem<C> for DelayedHeat<C> {
    fn dim(&self, _p: RealOf<C>) -> usize {
        self.grid_intervals - 1
    }

    fn eval(&self, lambda: C, p: RealOf<C>) -> Array2<C> {
        let shift = Self::feedback_scalar(lambda, p);
        let mut out = self.laplacian.clone();
        for i in 0..out.nrows() {
            out[(i, i)] += shift;
        }
        out
    }

    fn param_range(&self) -> (RealOf<C>, RealOf<C>) {
        (C::real(-0.1), C::real(0.1))
    }
}

/// Linear eigenvalue problem `A - lambda I` with constant matrix; useful
/// for planted-spectrum setups and as a split-form building block.
#[derive(Debug, Clone)]
pub struct LinearProblem<C: ComplexScalar> {
    matrix: Array2<C>,
    range: (RealOf<C>, RealOf<C>),
}

impl<C: ComplexScalar> LinearProblem<C> {
    pub fn new(matrix: Array2<C>) -> Self {
        assert!(matrix.is_square());
        Self {
            matrix,
            range: (C::real(0.0), C::real(1.0)),
        }
    }

    pub fn with_range(mut self, range: (RealOf<C>, RealOf<C>)) -> Self {
        self.range = range;
        self
    }
}

impl<C: ComplexScalar> ParametricProblem<C> for LinearProblem<C> {
    fn dim(&self, _p: RealOf<C>) -> usize {
        self.matrix.nrows()
    }

    fn eval(&self, lambda: C, _p: RealOf<C>) -> Array2<C> {
        let mut out = self.matrix.clone();
        for i in 0..out.nrows() {
            out[(i, i)] -= lambda;
        }
        out
    }

    fn param_range(&self) -> (RealOf<C>, RealOf<C>) {
        self.range
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    type C = Complex64;

    #[test]
    fn toy_eval_at_origin() {
        let problem = toy_bifurcation::<C>();
        let m = ParametricProblem::<C>::eval(&problem, C::new(0.0, 0.0), 0.0);
        assert_eq!(m[(0, 0)], C::new(0.0, 0.0));
        assert_eq!(m[(0, 1)], C::new(0.0, 0.0));
        assert_eq!(m[(1, 0)], C::new(1.0, 0.0));
        assert_eq!(m[(1, 1)], C::new(0.0, 0.0));
    }

    #[test]
    fn cubic_companion_realizes_polynomial() {
        // det(L(lambda, p)) = -pi(lambda, p) up to sign: check via residual
        // of the characteristic roots instead of determinants
        for &p in &[0.5, -3.0, 17.25] {
            for root in cubic_roots::<C>(p) {
                assert!(cubic_residual(root, p) < 1e-10, "p={p} root={root}");
            }
        }
    }

    #[test]
    fn cubic_roots_at_half() {
        // pi(lambda, 1/2) = lambda^3 - (3/2) lambda with roots 0, +-sqrt(3/2)
        let mut roots = cubic_roots::<C>(0.5).to_vec();
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        let s = (1.5f64).sqrt();
        assert!((roots[0] - C::new(-s, 0.0)).norm() < 1e-12);
        assert!(roots[1].norm() < 1e-12);
        assert!((roots[2] - C::new(s, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn delayed_heat_feedback_scalar_at_origin() {
        // 0 + 0.1 + 0.05 + 0 = 0.15
        let s = DelayedHeat::<C>::feedback_scalar(C::new(0.0, 0.0), 0.0);
        assert!((s - C::new(0.15, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn delayed_heat_smallest_mode_approaches_diffusivity() {
        // kappa (M/pi)^2 2(1 - cos(pi/M)) -> kappa as M grows
        let problem = delayed_heat::<C>(2000);
        let modes = problem.laplacian_modes();
        assert!((modes[0] - DELAYED_HEAT_DIFFUSIVITY).abs() < 1e-5 * DELAYED_HEAT_DIFFUSIVITY);
        // and the matrix diagonal carries 2 kappa (M/pi)^2
        let m = ParametricProblem::<C>::eval(&problem, C::new(0.0, 0.0), 0.0);
        let expect = 2.0 * DELAYED_HEAT_DIFFUSIVITY * (2000.0 / std::f64::consts::PI).powi(2) + 0.15;
        assert!((m[(0, 0)].re - expect).abs() < 1e-9 * expect);
    }
}
