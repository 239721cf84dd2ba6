//! Predictor-corrector adaptive sampling.
//!
//! Each sweep builds the curve model on the current collocation grid,
//! solves reference problems at the interval midpoints, and promotes every
//! midpoint whose matched prediction error exceeds the tolerance. The loop
//! stops when a sweep promotes nothing; the already-solved test snapshots
//! are then merged into the final grid for free accuracy. Snapshots are
//! cached by parameter value and never re-solved.

use crate::beyn::{solve_nonparametric, BeynConfig, BeynError, EigenSnapshot};
use crate::core::{Contour, ParametricProblem};
use crate::curves::{CurveModel, CurvesError, InterpolationConfig};
use crate::matching::{solve_assignment, CostMatrix};
use crate::scalar::{ComplexScalar, RealOf};
use num_traits::{Float, ToPrimitive};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdaptiveError<C: ComplexScalar> {
    #[error("non-parametric solve failed at p = {p}: {source}")]
    Solve {
        p: RealOf<C>,
        source: BeynError<C>,
    },
    #[error(transparent)]
    Model(#[from] CurvesError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Whether a predicted-versus-reference eigenvalue count mismatch fails a
/// test point outright (strict) or is ignored in the error (lenient).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MismatchPolicy {
    #[default]
    Lenient,
    Strict,
}

#[derive(Debug, Clone)]
pub struct AdaptiveConfig<R> {
    /// Error tolerance for the matched prediction error at test points.
    pub tolerance: R,
    /// Initial collocation grid; must span the problem's parameter range.
    pub initial_grid: Vec<R>,
    pub max_iterations: usize,
    /// Smallest grid interval still eligible for refinement; defaults to
    /// `1e-6` times the parameter range.
    pub min_interval: Option<R>,
    pub mismatch_policy: MismatchPolicy,
    pub beyn: BeynConfig<R>,
    pub interp: InterpolationConfig,
    /// Relative tolerance of the second-best-match bifurcation criterion.
    pub bifurcation_delta: R,
    /// Half-width (in grid intervals) by which flagged intervals widen
    /// into implicit spans.
    pub stencil_half_width: usize,
    /// Also test at the two quarter points of every interval.
    pub quarter_point_tests: bool,
}

impl<R: Float> AdaptiveConfig<R> {
    pub fn new(tolerance: R, initial_grid: Vec<R>) -> Self {
        Self {
            tolerance,
            initial_grid,
            max_iterations: 20,
            min_interval: None,
            mismatch_policy: MismatchPolicy::default(),
            beyn: BeynConfig::default(),
            interp: InterpolationConfig::default(),
            bifurcation_delta: R::from(0.1).unwrap(),
            stencil_half_width: 4,
            quarter_point_tests: false,
        }
    }
}

/// Wall-clock seconds of one sweep's phases.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseSeconds {
    /// Solves at new collocation points.
    pub solve: f64,
    /// Model assembly (matching, stitching, grouping, fitting).
    pub model: f64,
    /// Test-point solves and error evaluation.
    pub test: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport<R> {
    /// Sweeps performed, including the final all-pass sweep.
    pub iterations: usize,
    pub final_grid: Vec<R>,
    /// Distinct parameter values solved (collocation plus test points).
    pub snapshots_computed: usize,
    /// Parameter spans covered by implicit bifurcation groups.
    pub flagged_spans: Vec<(R, R)>,
    /// Largest matched test error per sweep.
    pub max_test_errors: Vec<R>,
    pub phase_seconds: Vec<PhaseSeconds>,
    pub converged: bool,
}

/// Cache of non-parametric solves keyed by parameter value; shareable
/// across runs of the same problem, contour, and solver settings.
#[derive(Debug, Default)]
pub struct SnapshotCache<C: ComplexScalar> {
    map: BTreeMap<u64, EigenSnapshot<C>>,
}

fn cache_key<R: Float + ToPrimitive>(p: R) -> u64 {
    p.to_f64().unwrap_or(f64::NAN).to_bits()
}

impl<C: ComplexScalar> SnapshotCache<C> {
    pub fn new() -> Self {
        Self {
            map: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, p: RealOf<C>) -> Option<&EigenSnapshot<C>> {
        self.map.get(&cache_key(p))
    }

    /// Solve (in parallel) every listed point not yet in the cache.
    pub fn ensure<P>(
        &mut self,
        problem: &P,
        contour: &Contour<C>,
        config: &BeynConfig<RealOf<C>>,
        points: &[RealOf<C>],
    ) -> Result<(), AdaptiveError<C>>
    where
        P: ParametricProblem<C> + ?Sized,
    {
        let mut missing: Vec<RealOf<C>> = points
            .iter()
            .copied()
            .filter(|p| !self.map.contains_key(&cache_key(*p)))
            .collect();
        missing.sort_by(|a, b| a.partial_cmp(b).unwrap());
        missing.dedup_by_key(|p| cache_key(*p));
        let solved: Vec<(u64, EigenSnapshot<C>)> = missing
            .par_iter()
            .map(|&p| {
                solve_nonparametric(problem, p, contour, config)
                    .map(|snap| (cache_key(p), snap))
                    .map_err(|source| AdaptiveError::Solve { p, source })
            })
            .collect::<Result<_, _>>()?;
        self.map.extend(solved);
        Ok(())
    }
}

/// Matched prediction error of the model against a reference snapshot:
/// the maximum distance over optimally matched pairs, plus whether the
/// predicted and reference counts differ. Unmatched values do not enter
/// the maximum; the strict policy is the caller's to apply.
pub fn model_error_at<C: ComplexScalar>(
    model: &CurveModel<C>,
    reference: &EigenSnapshot<C>,
) -> Result<(RealOf<C>, bool), CurvesError> {
    let predicted = model.evaluate(reference.p())?;
    let predicted_values: Vec<C> = predicted.iter().map(|s| s.value).collect();
    let reference_values = reference.eigenvalues();
    let mismatch = predicted_values.len() != reference_values.len();
    if predicted_values.is_empty() || reference_values.is_empty() {
        return Ok((C::real(0.0), mismatch));
    }
    let plan = solve_assignment(&CostMatrix::between(&predicted_values, reference_values))?;
    let max_error = plan
        .pair_costs
        .iter()
        .fold(C::real(0.0), |acc, &c| if c > acc { c } else { acc });
    Ok((max_error, mismatch))
}

/// Progress hook: `(iteration, grid_size, max_test_error)` per sweep.
pub type ProgressFn<'a, R> = dyn FnMut(usize, usize, R) + 'a;

/// Run the adaptive loop with a fresh snapshot cache.
pub fn run_adaptive<C, P>(
    problem: &P,
    contour: &Contour<C>,
    config: &AdaptiveConfig<RealOf<C>>,
) -> Result<(CurveModel<C>, RunReport<RealOf<C>>), AdaptiveError<C>>
where
    C: ComplexScalar,
    P: ParametricProblem<C> + ?Sized,
{
    let mut cache = SnapshotCache::new();
    run_adaptive_with(problem, contour, config, &mut cache, None)
}

/// Run the adaptive loop against a caller-owned snapshot cache (so that
/// parameter sweeps over solver-identical configurations reuse solves).
pub fn run_adaptive_with<C, P>(
    problem: &P,
    contour: &Contour<C>,
    config: &AdaptiveConfig<RealOf<C>>,
    cache: &mut SnapshotCache<C>,
    mut progress: Option<&mut ProgressFn<'_, RealOf<C>>>,
) -> Result<(CurveModel<C>, RunReport<RealOf<C>>), AdaptiveError<C>>
where
    C: ComplexScalar,
    P: ParametricProblem<C> + ?Sized,
{
    let (p_min, p_max) = problem.param_range();
    let grid0 = &config.initial_grid;
    if grid0.len() < 2 {
        return Err(AdaptiveError::Config(
            "initial grid needs at least 2 points".into(),
        ));
    }
    if !grid0.windows(2).all(|w| w[0] < w[1]) {
        return Err(AdaptiveError::Config(
            "initial grid must be strictly increasing".into(),
        ));
    }
    let span = p_max - p_min;
    let slack = span * C::real(1e-12);
    if Float::abs(grid0[0] - p_min) > slack || Float::abs(grid0[grid0.len() - 1] - p_max) > slack {
        return Err(AdaptiveError::Config(format!(
            "initial grid must span the parameter range [{p_min}, {p_max}]"
        )));
    }
    if !(config.tolerance > C::real(0.0)) {
        return Err(AdaptiveError::Config("tolerance must be positive".into()));
    }
    if config.max_iterations == 0 {
        return Err(AdaptiveError::Config("max_iterations must be >= 1".into()));
    }
    config.interp.validate()?;
    let min_interval = config
        .min_interval
        .unwrap_or_else(|| span * C::real(1e-6));
    let half = C::real(0.5);
    let quarter = C::real(0.25);

    let mut grid = grid0.clone();
    let mut iterations = 0usize; // sweeps that changed the grid
    let mut converged = false;
    let mut certifying = false; // previous sweep passed and was merged
    let mut max_test_errors: Vec<RealOf<C>> = Vec::new();
    let mut phase_seconds: Vec<PhaseSeconds> = Vec::new();

    loop {
        let mut phases = PhaseSeconds::default();

        let t0 = Instant::now();
        cache.ensure(problem, contour, &config.beyn, &grid)?;
        phases.solve = t0.elapsed().as_secs_f64();

        let t0 = Instant::now();
        let snapshots: Vec<EigenSnapshot<C>> = grid
            .iter()
            .map(|&p| cache.get(p).expect("just ensured").clone())
            .collect();
        let model = CurveModel::build(
            &snapshots,
            config.interp,
            config.bifurcation_delta,
            config.stencil_half_width,
        )?;
        phases.model = t0.elapsed().as_secs_f64();

        // midpoints (and optional quarter points) of every interval;
        // intervals below min_interval are still tested (their snapshots
        // are cached) but never promoted
        let mut tests: Vec<(RealOf<C>, bool)> = Vec::new();
        let mut midpoints: Vec<RealOf<C>> = Vec::new();
        for w in grid.windows(2) {
            let refinable = w[1] - w[0] >= min_interval;
            let mid = (w[0] + w[1]) * half;
            tests.push((mid, refinable));
            if refinable {
                midpoints.push(mid);
            }
            if config.quarter_point_tests {
                tests.push((w[0] + (w[1] - w[0]) * quarter, refinable));
                tests.push((w[1] - (w[1] - w[0]) * quarter, refinable));
            }
        }
        let t0 = Instant::now();
        let points: Vec<RealOf<C>> = tests.iter().map(|(p, _)| *p).collect();
        cache.ensure(problem, contour, &config.beyn, &points)?;
        let mut sweep_max = C::real(0.0);
        let mut promoted: Vec<RealOf<C>> = Vec::new();
        let mut frozen_failure = false;
        for &(p, refinable) in &tests {
            let reference = cache.get(p).expect("just ensured");
            let (error, mismatch) = model_error_at(&model, reference)?;
            if error > sweep_max {
                sweep_max = error;
            }
            let failed = error > config.tolerance
                || (config.mismatch_policy == MismatchPolicy::Strict && mismatch);
            if failed && refinable {
                promoted.push(p);
            } else if failed {
                frozen_failure = true;
            }
        }
        phases.test = t0.elapsed().as_secs_f64();
        max_test_errors.push(sweep_max);
        phase_seconds.push(phases);
        if let Some(hook) = progress.as_mut() {
            hook(iterations + 1, grid.len(), sweep_max);
        }

        if !promoted.is_empty() {
            // refine at the failing test points
            certifying = false;
            grid.extend(promoted);
            grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
            iterations += 1;
            if iterations >= config.max_iterations {
                break;
            }
            continue;
        }
        if frozen_failure {
            // failures remain but nothing is refinable
            converged = false;
            break;
        }
        if certifying || midpoints.is_empty() {
            // a clean pass over a grid that already absorbed its tested
            // midpoints: the exit condition holds at the final midpoints
            converged = true;
            break;
        }
        // clean pass: keep the already-solved midpoints as collocation
        // data, then re-test the halved intervals before declaring
        // convergence
        grid.extend(midpoints);
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        certifying = true;
        iterations += 1;
        if iterations >= config.max_iterations {
            break;
        }
    }

    cache.ensure(problem, contour, &config.beyn, &grid)?;
    let snapshots: Vec<EigenSnapshot<C>> = grid
        .iter()
        .map(|&p| cache.get(p).expect("ensured").clone())
        .collect();
    let model = CurveModel::build(
        &snapshots,
        config.interp,
        config.bifurcation_delta,
        config.stencil_half_width,
    )?;

    let report = RunReport {
        iterations,
        final_grid: grid,
        snapshots_computed: cache.len(),
        flagged_spans: model.flagged_spans(),
        max_test_errors,
        phase_seconds,
        converged,
    };
    Ok((model, report))
}
