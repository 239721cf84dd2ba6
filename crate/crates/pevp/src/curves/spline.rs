//! Interpolating B-splines on strictly increasing sites.
//!
//! The knot vector drops the first and last `(k+1)/2` interior sites
//! (the not-a-knot family), making the collocation system square. Values
//! outside the site range continue the boundary polynomial piece, which is
//! what curve extrapolation across migrations relies on.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Lapack, Solve};
use num_traits::Float;

#[derive(Debug, Clone)]
pub struct Spline1D<R> {
    degree: usize,
    knots: Vec<R>,
    coeffs: Vec<R>,
}

/// Values of the `k + 1` B-splines that are nonzero on the knot interval
/// containing `t` (interval index `i`), per the Cox-de Boor recursion.
fn basis_nonzero<R: Float>(knots: &[R], k: usize, i: usize, t: R) -> Vec<R> {
    let mut values = vec![R::zero(); k + 1];
    values[0] = R::one();
    let mut left = vec![R::zero(); k + 1];
    let mut right = vec![R::zero(); k + 1];
    for j in 1..=k {
        left[j] = t - knots[i + 1 - j];
        right[j] = knots[i + j] - t;
        let mut saved = R::zero();
        for r in 0..j {
            let temp = values[r] / (right[r + 1] + left[j - r]);
            values[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        values[j] = saved;
    }
    values
}

impl<R: Float + Lapack> Spline1D<R> {
    /// Interpolating spline of odd degree `k` through `(x_i, y_i)`.
    /// Requires strictly increasing sites and `x.len() >= k + 1`.
    pub fn interpolate(x: &[R], y: &[R], degree: usize) -> Self {
        let s = x.len();
        let k = degree;
        assert!(k >= 1 && k % 2 == 1, "degree must be odd and positive");
        assert_eq!(s, y.len());
        assert!(s >= k + 1, "need at least degree + 1 sites");
        debug_assert!(x.windows(2).all(|w| w[0] < w[1]));

        let skip = (k + 1) / 2;
        let mut knots = Vec::with_capacity(s + k + 1);
        knots.extend(std::iter::repeat(x[0]).take(k + 1));
        knots.extend_from_slice(&x[skip..s - skip]);
        knots.extend(std::iter::repeat(x[s - 1]).take(k + 1));
        debug_assert_eq!(knots.len(), s + k + 1);

        let mut system = Array2::<R>::zeros((s, s));
        for (row, &site) in x.iter().enumerate() {
            let interval = find_interval(&knots, k, s, site);
            let values = basis_nonzero(&knots, k, interval, site);
            for (j, v) in values.into_iter().enumerate() {
                system[(row, interval - k + j)] = v;
            }
        }
        let rhs = Array1::from_vec(y.to_vec());
        let coeffs = system
            .solve_into(rhs)
            .expect("spline collocation system is nonsingular for increasing sites")
            .to_vec();

        Self { degree: k, knots, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Evaluate at `t`; outside the site range this continues the first or
    /// last polynomial piece.
    pub fn eval(&self, t: R) -> R {
        let k = self.degree;
        let i = find_interval(&self.knots, k, self.coeffs.len(), t);
        let mut d: Vec<R> = self.coeffs[i - k..=i].to_vec();
        for r in 1..=k {
            for j in (r..=k).rev() {
                let denom = self.knots[i + 1 + j - r] - self.knots[i - k + j];
                let alpha = (t - self.knots[i - k + j]) / denom;
                d[j] = (R::one() - alpha) * d[j - 1] + alpha * d[j];
            }
        }
        d[k]
    }
}

/// Index of the knot interval containing `t`, clamped to the valid range
/// so that out-of-range evaluation extends the boundary pieces.
fn find_interval<R: Float>(knots: &[R], k: usize, n_basis: usize, t: R) -> usize {
    let lo = k;
    let hi = n_basis - 1; // last valid interval start
    let mut i = lo;
    while i < hi && !(t < knots[i + 1]) {
        i += 1;
    }
    i
}
