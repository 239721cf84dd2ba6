use super::CoreError;
use crate::scalar::{ComplexScalar, RealOf};
use ndarray_linalg::Scalar;

/// Circular integration region in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contour<C: ComplexScalar> {
    center: C,
    radius: RealOf<C>,
}

impl<C: ComplexScalar> Contour<C> {
    pub fn new(center: C, radius: RealOf<C>) -> Result<Self, CoreError> {
        if !(radius > C::real(0.0)) || !num_traits::Float::is_finite(radius) {
            return Err(CoreError::NonPositiveRadius(format!("{}", radius)));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> C {
        self.center
    }

    pub fn radius(&self) -> RealOf<C> {
        self.radius
    }

    /// Strict membership test with a relative safety margin:
    /// true iff |z - center| < radius * (1 - margin), for margin in [0, 1).
    pub fn contains(&self, z: C, margin: RealOf<C>) -> bool {
        debug_assert!(margin >= C::real(0.0) && margin < C::real(1.0));
        (z - self.center).abs() < self.radius * (C::real(1.0) - margin)
    }

    /// Signed distance from the circle: negative inside, positive outside.
    pub fn boundary_distance(&self, z: C) -> RealOf<C> {
        (z - self.center).abs() - self.radius
    }

    /// Uniformly spaced trapezoidal quadrature nodes on the circle,
    /// z_j = center + radius * exp(2 pi i j / count) for j = 1..count.
    pub fn nodes(&self, count: usize) -> Result<QuadratureRule<C>, CoreError> {
        if count < 4 {
            return Err(CoreError::TooFewNodes(count));
        }
        let tau = C::real(std::f64::consts::TAU);
        let n = C::real(count as f64);
        let mut nodes = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for j in 1..=count {
            let angle = tau * C::real(j as f64) / n;
            let dir = C::complex(angle.cos(), angle.sin());
            let offset = dir.mul_real(self.radius);
            nodes.push(self.center + offset);
            weights.push(offset.div_real(n));
        }
        Ok(QuadratureRule { nodes, weights })
    }
}

/// Trapezoidal rule on a circular contour.
///
/// Applying the rule to f approximates the Cauchy-style integral
/// (2 pi i)^{-1} \oint f(z) dz expressed with weights (z_j - center)/count,
/// so that f(z) = 1/(z - center) integrates to exactly 1.
#[derive(Debug, Clone)]
pub struct QuadratureRule<C: ComplexScalar> {
    nodes: Vec<C>,
    weights: Vec<C>,
}

impl<C: ComplexScalar> QuadratureRule<C> {
    pub fn count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[C] {
        &self.nodes
    }

    pub fn weights(&self) -> &[C] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (C, C)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Apply the rule to a scalar integrand.
    pub fn apply<F: FnMut(C) -> C>(&self, mut f: F) -> C {
        let mut acc = C::zero();
        for (z, w) in self.iter() {
            acc += w * f(z);
        }
        acc
    }
}
