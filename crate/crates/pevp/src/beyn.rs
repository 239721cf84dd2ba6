//! Non-parametric nonlinear eigensolver by contour integration.
//!
//! Computes all eigenvalues of `lambda -> L(lambda, p)` inside a circular
//! contour from trapezoidal moments of the resolvent applied to a random
//! probe block: the moments fill two block-Hankel matrices whose truncated
//! SVD reduces the problem to a small dense eigenvalue computation. Every
//! candidate is certified by an inside test and a relative residual.

use crate::core::{Contour, CoreError, ParametricProblem};
use crate::scalar::{cmp_complex, ensure_serial_blas, ComplexScalar, LuKernel, RealOf, SampleReal};
use ndarray::{s, Array1, Array2};
use ndarray_linalg::error::LinalgError;
use ndarray_linalg::{EigVals, JobSvd, SVDDC};
use num_traits::{Float, ToPrimitive};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Nodes handled per parallel work unit; fixed so that the accumulation
/// order (and therefore the result, bit for bit) does not depend on the
/// number of worker threads.
const NODE_CHUNK: usize = 64;

/// Candidates this close to the contour (relative to the radius) are kept
/// but flagged: quadrature accuracy degrades near the boundary.
const NEAR_CONTOUR_REL: f64 = 1e-3;

/// Relative pivot-collapse ratio below which a node factorization is
/// treated as numerically singular (an eigenvalue sits on or very near
/// the contour).
const PIVOT_BREAKDOWN: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum BeynError<C: ComplexScalar> {
    #[error("quadrature breakdown at node {index} (z = {node}): matrix is singular there")]
    QuadratureBreakdown { index: usize, node: C },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("dense linear algebra failed: {0}")]
    Linalg(#[from] LinalgError),
    #[error("problem returned a {rows}x{cols} matrix, expected {dim}x{dim}")]
    DimensionMismatch { dim: usize, rows: usize, cols: usize },
    #[error("LAPACK kernel rejected its arguments (info = {info})")]
    Kernel { info: i32 },
}

/// Settings of the contour eigensolver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeynConfig<R> {
    /// Moment block count K; the Hankel matrices have K x K blocks.
    pub moment_blocks: usize,
    /// Columns of the random probe block.
    pub probe_columns: usize,
    /// Trapezoidal nodes on the contour.
    pub quadrature_nodes: usize,
    /// Relative singular-value cutoff for the rank truncation.
    pub rank_rtol: R,
    /// Largest accepted relative residual (smallest over largest singular
    /// value of the matrix at a candidate eigenvalue).
    pub residual_tol: R,
    /// Relative margin of the inside test applied to candidates.
    pub inside_margin: R,
    /// Seed of the probe block; mixed with the parameter value so distinct
    /// collocation points get independent probes reproducibly.
    pub seed: u64,
}

impl<R: Float> Default for BeynConfig<R> {
    fn default() -> Self {
        Self {
            moment_blocks: 2,
            probe_columns: 8,
            quadrature_nodes: 64,
            rank_rtol: R::from(1e-10).unwrap(),
            residual_tol: R::from(1e-6).unwrap(),
            inside_margin: R::zero(),
            seed: 0x5eed,
        }
    }
}

/// Certified eigenvalue list at one parameter value.
///
/// Eigenvalues are repeated per algebraic multiplicity and sorted
/// lexicographically by (re, im); each passed the inside test and the
/// residual bound when produced by [`solve_nonparametric`].
#[derive(Debug, Clone)]
pub struct EigenSnapshot<C: ComplexScalar> {
    p: RealOf<C>,
    eigenvalues: Vec<C>,
    residuals: Vec<RealOf<C>>,
    near_contour: Vec<bool>,
    contour: Contour<C>,
    rank_saturated: bool,
}

impl<C: ComplexScalar> EigenSnapshot<C> {
    /// Assemble a snapshot from raw values (sorted on construction).
    /// Intended for tests and for loaders that bypass the solver.
    pub fn from_parts(
        p: RealOf<C>,
        contour: Contour<C>,
        mut entries: Vec<(C, RealOf<C>, bool)>,
    ) -> Self {
        entries.sort_by(|a, b| cmp_complex(&a.0, &b.0));
        Self {
            p,
            eigenvalues: entries.iter().map(|e| e.0).collect(),
            residuals: entries.iter().map(|e| e.1).collect(),
            near_contour: entries.iter().map(|e| e.2).collect(),
            contour,
            rank_saturated: false,
        }
    }

    pub fn p(&self) -> RealOf<C> {
        self.p
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[C] {
        &self.eigenvalues
    }

    pub fn residuals(&self) -> &[RealOf<C>] {
        &self.residuals
    }

    /// Per-eigenvalue flag: the value lies within `1e-3 * radius` of the
    /// contour, where quadrature noise is largest.
    pub fn near_contour(&self) -> &[bool] {
        &self.near_contour
    }

    pub fn contour(&self) -> &Contour<C> {
        &self.contour
    }

    /// True when the truncated rank saturated the probe capacity `K * m`,
    /// i.e. the moment blocks were possibly too small to separate the
    /// spectrum inside the contour.
    pub fn rank_saturated(&self) -> bool {
        self.rank_saturated
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Probe seed for one collocation point: the run seed mixed with the bits
/// of the parameter value.
fn probe_seed<R: Float + ToPrimitive>(seed: u64, p: R) -> u64 {
    let bits = p.to_f64().unwrap_or(f64::NAN).to_bits();
    splitmix64(seed ^ splitmix64(bits))
}

/// Seeded standard complex Gaussian probe block (n x m), stored by columns.
fn gaussian_probe<C: ComplexScalar>(n: usize, m: usize, seed: u64) -> Vec<Array1<C>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let half = Float::sqrt(C::real(0.5));
    let mut cols = vec![Array1::<C>::zeros(n); m];
    // row-major draw order, fixed independent of storage
    for i in 0..n {
        for col in cols.iter_mut() {
            let re = RealOf::<C>::standard_normal(&mut rng);
            let im = RealOf::<C>::standard_normal(&mut rng);
            col[i] = C::complex(re * half, im * half);
        }
    }
    cols
}

/// Trapezoidal moments of the resolvent against a given probe block:
/// `A_k ~= (1/N) sum_j (z_j - z0) z_j^k L(z_j, p)^{-1} R` for `k < count`.
///
/// Each node is factored once and the factorization is reused across all
/// probe columns and all moment orders.
pub fn moments_with_probe<C, P>(
    problem: &P,
    p: RealOf<C>,
    contour: &Contour<C>,
    quadrature_nodes: usize,
    probe_cols: &[Array1<C>],
    count: usize,
) -> Result<Vec<Array2<C>>, BeynError<C>>
where
    C: ComplexScalar,
    P: ParametricProblem<C> + ?Sized,
{
    let rule = contour.nodes(quadrature_nodes)?;
    let dim = problem.dim(p);
    let m = probe_cols.len();
    assert!(m > 0 && count > 0);
    for col in probe_cols {
        assert_eq!(col.len(), dim, "probe column length must match problem dim");
    }
    ensure_serial_blas();
    let pivot_floor = C::real(PIVOT_BREAKDOWN);

    let nodes = rule.nodes();
    let weights = rule.weights();
    let ranges: Vec<std::ops::Range<usize>> = (0..nodes.len())
        .step_by(NODE_CHUNK)
        .map(|lo| lo..(lo + NODE_CHUNK).min(nodes.len()))
        .collect();

    // flat column-major probe block, reused as the RHS template
    let mut probe_flat: Vec<C> = Vec::with_capacity(dim * m);
    for col in probe_cols {
        probe_flat.extend(col.iter().copied());
    }

    let partials: Vec<Result<Vec<Array2<C>>, BeynError<C>>> = ranges
        .into_par_iter()
        .map(|range| {
            let mut acc = vec![Array2::<C>::zeros((dim, m)); count];
            let mut ipiv = vec![0i32; dim];
            for j in range {
                let z = nodes[j];
                let w = weights[j];
                let mut matrix = problem.eval(z, p);
                if matrix.nrows() != dim || matrix.ncols() != dim {
                    return Err(BeynError::DimensionMismatch {
                        dim,
                        rows: matrix.nrows(),
                        cols: matrix.ncols(),
                    });
                }
                let breakdown = || BeynError::QuadratureBreakdown {
                    index: j + 1,
                    node: z,
                };
                // the row-major buffer viewed column-major holds the
                // transpose; factor it and solve with trans = 'T'
                let buffer = matrix
                    .as_slice_mut()
                    .expect("freshly evaluated matrices are contiguous");
                let info = C::lu_factor(dim, buffer, &mut ipiv);
                if info > 0 {
                    return Err(breakdown());
                }
                if info < 0 {
                    return Err(BeynError::Kernel { info });
                }
                // a collapsing pivot marks an eigenvalue on or near the node
                let mut dmin = Float::infinity();
                let mut dmax = C::real(0.0);
                for i in 0..dim {
                    let d = buffer[i * (dim + 1)].abs();
                    if d < dmin {
                        dmin = d;
                    }
                    if d > dmax {
                        dmax = d;
                    }
                }
                if dmin <= pivot_floor * dmax {
                    return Err(breakdown());
                }
                let mut rhs = probe_flat.clone();
                let info = C::lu_solve_transposed(dim, m, buffer, &ipiv, &mut rhs);
                if info != 0 {
                    return Err(BeynError::Kernel { info });
                }
                let mut zk = C::one();
                for a in acc.iter_mut() {
                    let scale = w * zk;
                    for c in 0..m {
                        let column = ndarray::ArrayView1::from(&rhs[c * dim..(c + 1) * dim]);
                        a.column_mut(c).scaled_add(scale, &column);
                    }
                    zk *= z;
                }
            }
            Ok(acc)
        })
        .collect();

    // fold chunk partials in node order: fixed summation grouping
    let mut total = vec![Array2::<C>::zeros((dim, m)); count];
    for partial in partials {
        let partial = partial?;
        for (t, a) in total.iter_mut().zip(partial) {
            *t += &a;
        }
    }
    Ok(total)
}

/// Moments with the seeded Gaussian probe from the configuration; returns
/// `2K` matrices of size `n x m`.
pub fn moments<C, P>(
    problem: &P,
    p: RealOf<C>,
    contour: &Contour<C>,
    config: &BeynConfig<RealOf<C>>,
) -> Result<Vec<Array2<C>>, BeynError<C>>
where
    C: ComplexScalar,
    P: ParametricProblem<C> + ?Sized,
{
    assert!(config.moment_blocks >= 1 && config.probe_columns >= 1);
    let dim = problem.dim(p);
    let probe = gaussian_probe::<C>(dim, config.probe_columns, probe_seed(config.seed, p));
    moments_with_probe(
        problem,
        p,
        contour,
        config.quadrature_nodes,
        &probe,
        2 * config.moment_blocks,
    )
}

/// Block-Hankel matrix with blocks `A_{offset + r + s}`, r, s = 0..K-1.
fn block_hankel<C: ComplexScalar>(mom: &[Array2<C>], blocks: usize, offset: usize) -> Array2<C> {
    let (n, m) = mom[0].dim();
    let mut out = Array2::<C>::zeros((blocks * n, blocks * m));
    for r in 0..blocks {
        for s in 0..blocks {
            out.slice_mut(s![r * n..(r + 1) * n, s * m..(s + 1) * m])
                .assign(&mom[offset + r + s]);
        }
    }
    out
}

/// Relative residual of a candidate eigenvalue: the smallest singular value
/// of `L(lambda, p)` divided by the largest.
///
/// A 1x1 matrix has only one singular value and the ratio degenerates to 1;
/// scalar problems are instead measured against the problem's magnitude at
/// two contour anchor points.
pub fn relative_residual<C, P>(
    problem: &P,
    lambda: C,
    p: RealOf<C>,
    contour: &Contour<C>,
) -> Result<RealOf<C>, BeynError<C>>
where
    C: ComplexScalar,
    P: ParametricProblem<C> + ?Sized,
{
    ensure_serial_blas();
    let matrix = problem.eval(lambda, p);
    if matrix.nrows() == 1 {
        let value = matrix[(0, 0)].abs();
        let offset = C::from_real(contour.radius());
        let scale = problem.eval(contour.center() + offset, p)[(0, 0)]
            .abs()
            .max(problem.eval(contour.center() - offset, p)[(0, 0)].abs())
            .max(value);
        return Ok(if scale == C::real(0.0) {
            C::real(0.0)
        } else {
            value / scale
        });
    }
    let (_, sv, _) = matrix.svddc(JobSvd::None)?;
    let largest = sv[0];
    if largest == C::real(0.0) {
        return Ok(C::real(0.0));
    }
    Ok(sv[sv.len() - 1] / largest)
}

/// All eigenvalues of `lambda -> L(lambda, p)` inside the contour, with
/// multiplicity, certified by the inside test and the residual bound.
///
/// An empty result is legitimate (no eigenvalues inside). A saturated
/// truncation rank (`== K * m`) is reported on the snapshot and logged:
/// the probe capacity may be too small for the spectrum inside.
pub fn solve_nonparametric<C, P>(
    problem: &P,
    p: RealOf<C>,
    contour: &Contour<C>,
    config: &BeynConfig<RealOf<C>>,
) -> Result<EigenSnapshot<C>, BeynError<C>>
where
    C: ComplexScalar,
    P: ParametricProblem<C> + ?Sized,
{
    let mom = moments(problem, p, contour, config)?;
    let k = config.moment_blocks;
    let hankel0 = block_hankel(&mom, k, 0);
    let hankel1 = block_hankel(&mom, k, 1);

    let empty = |saturated| EigenSnapshot {
        p,
        eigenvalues: vec![],
        residuals: vec![],
        near_contour: vec![],
        contour: *contour,
        rank_saturated: saturated,
    };

    let (u, sv, vt) = hankel0.svddc(JobSvd::Some)?;
    let (u, vt) = (u.expect("left vectors requested"), vt.expect("right vectors requested"));
    if sv.is_empty() || sv[0] <= C::real(0.0) {
        return Ok(empty(false));
    }
    let cutoff = config.rank_rtol * sv[0];
    let rank = sv.iter().take_while(|s| **s > cutoff).count();
    if rank == 0 {
        return Ok(empty(false));
    }
    let rank_saturated = rank == k * config.probe_columns;
    if rank_saturated {
        log::warn!(
            "beyn: truncation rank saturated K*m = {} at p = {}; K or m may be too small",
            rank,
            p
        );
    }

    // reduced matrix U^H B1 V Sigma^{-1}
    let u_r = u.slice(s![.., ..rank]);
    let v_r = vt.slice(s![..rank, ..]).mapv(|x| x.conj()).reversed_axes();
    let mut reduced = u_r.mapv(|x| x.conj()).reversed_axes().dot(&hankel1.dot(&v_r));
    for i in 0..rank {
        let inv = C::from_real(C::real(1.0) / sv[i]);
        reduced.column_mut(i).mapv_inplace(|x| x * inv);
    }
    let candidates = reduced.eigvals()?;

    let inside: Vec<C> = candidates
        .iter()
        .copied()
        .filter(|lambda| contour.contains(*lambda, config.inside_margin))
        .collect();
    let near_band = C::real(NEAR_CONTOUR_REL) * contour.radius();
    let certified: Vec<(C, RealOf<C>, bool)> = inside
        .par_iter()
        .map(|&lambda| {
            let residual = relative_residual(problem, lambda, p, contour)?;
            let near = Float::abs(contour.boundary_distance(lambda)) < near_band;
            Ok((lambda, residual, near))
        })
        .collect::<Result<Vec<_>, BeynError<C>>>()?;

    let mut kept: Vec<(C, RealOf<C>, bool)> = certified
        .into_iter()
        .filter(|(_, res, _)| *res <= config.residual_tol)
        .collect();
    kept.sort_by(|a, b| cmp_complex(&a.0, &b.0));

    Ok(EigenSnapshot {
        p,
        eigenvalues: kept.iter().map(|e| e.0).collect(),
        residuals: kept.iter().map(|e| e.1).collect(),
        near_contour: kept.iter().map(|e| e.2).collect(),
        contour: *contour,
        rank_saturated,
    })
}
