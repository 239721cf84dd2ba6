//! Shared helpers for the integration suites.
#![allow(dead_code)]

use ndarray::Array2;
use ndarray_linalg::{Inverse, Scalar};
use num_complex::Complex64;
use pevp::problems::LinearProblem;
use pevp::scalar::SampleReal;
use pevp::{Contour, EigenSnapshot, ParametricProblem};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Random complex Gaussian matrix with a fixed seed.
pub fn random_matrix(seed: u64, rows: usize, cols: usize) -> Array2<C> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = Array2::zeros((rows, cols));
    for i in 0..rows {
        for j in 0..cols {
            let re = f64::standard_normal(&mut rng);
            let im = f64::standard_normal(&mut rng);
            out[(i, j)] = c(re, im);
        }
    }
    out
}

/// Linear problem `A - lambda I` with `A = V diag(eigs) V^{-1}` for a
/// seeded random `V`: the spectrum is planted exactly.
pub fn planted_linear(seed: u64, eigs: &[C]) -> LinearProblem<C> {
    let n = eigs.len();
    let v = random_matrix(seed, n, n);
    let mut scaled = v.clone();
    for (j, lambda) in eigs.iter().enumerate() {
        scaled.column_mut(j).mapv_inplace(|x| x * lambda);
    }
    LinearProblem::new(scaled.dot(&v.inv().unwrap()))
}

/// Diagonal problem with prescribed eigenvalue curves: eigenvalues are
/// exactly `curves[i](p)`; Beyn sees whichever lie inside the contour.
pub struct PrescribedCurves {
    pub curves: Vec<Box<dyn Fn(f64) -> C + Send + Sync>>,
    pub range: (f64, f64),
}

impl ParametricProblem<C> for PrescribedCurves {
    fn dim(&self, _p: f64) -> usize {
        self.curves.len()
    }

    fn eval(&self, lambda: C, p: f64) -> Array2<C> {
        let n = self.curves.len();
        let mut out = Array2::zeros((n, n));
        for (i, f) in self.curves.iter().enumerate() {
            out[(i, i)] = f(p) - lambda;
        }
        out
    }

    fn param_range(&self) -> (f64, f64) {
        self.range
    }
}

/// Snapshot with exactly the given values (zero residuals, not flagged).
pub fn snapshot_of(p: f64, contour: Contour<C>, values: &[C]) -> EigenSnapshot<C> {
    EigenSnapshot::from_parts(p, contour, values.iter().map(|&v| (v, 0.0, false)).collect())
}

/// Largest pairwise-matched distance between two eigenvalue multisets,
/// or None when the counts differ.
pub fn matched_distance(a: &[C], b: &[C]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    if a.is_empty() {
        return Some(0.0);
    }
    let plan = pevp::solve_assignment(&pevp::CostMatrix::between(a, b)).unwrap();
    Some(plan.pair_costs.iter().cloned().fold(0.0, f64::max))
}
