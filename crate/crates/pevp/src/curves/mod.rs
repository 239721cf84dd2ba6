//! Global eigenvalue-curve tracks assembled from per-interval matches.
//!
//! Matched pairs chain into tracks over the collocation grid; a track may
//! be absent where its eigenvalue has migrated outside the contour.
//! Explicit segments are interpolated per track (linear or spline, real
//! and imaginary parts separately); a track entering or leaving the
//! contour is predicted one interval beyond its data by extrapolation or
//! by a radial weighted harmonic mean; intervals covered by a bifurcation
//! group delegate to the group's implicit surrogate.

mod spline;

pub use spline::Spline1D;

use crate::beyn::EigenSnapshot;
use crate::bifurcation::{build_surrogate, detect_groups, BifurcationGroup, ImplicitSurrogate};
use crate::core::Contour;
use crate::matching::{build_cost, solve_assignment, MatchError, MatchPlan};
use crate::scalar::{ComplexScalar, RealOf};
use thiserror::Error;

pub type TrackId = usize;

#[derive(Debug, Error)]
pub enum CurvesError {
    #[error("need at least 2 snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error("snapshot grid values must be strictly increasing")]
    UnsortedGrid,
    #[error("snapshots were computed on different contours")]
    ContourMismatch,
    #[error("plan {interval} does not fit its snapshots")]
    PlanShapeMismatch { interval: usize },
    #[error("spline order {0} not supported (use 3, 5, or 7)")]
    InvalidSplineOrder(usize),
    #[error("harmonic-mean segment has its pole at p = p2")]
    HarmonicPole,
    #[error("p = {p} outside the model range [{lo}, {hi}]")]
    OutOfDomain { p: String, lo: String, hi: String },
    #[error("matching failed: {0}")]
    Match(#[from] MatchError),
}

/// Interpolation scheme over the collocation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    PiecewiseLinear,
    /// Interpolating spline of the given odd order (3, 5, or 7), with
    /// not-a-knot style ends; degrades to the largest feasible odd order
    /// on short runs.
    Spline(usize),
}

/// How a track is predicted across the interval where it migrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MigrationMode {
    /// Extend the run's interpolant beyond its boundary (needs at least
    /// `extrapolation_min_points` finite values; otherwise falls back to
    /// the harmonic mean).
    Extrapolate,
    /// Radial weighted harmonic mean anchored at the boundary value.
    HarmonicMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterpolationConfig {
    pub scheme: Scheme,
    pub migration_mode: MigrationMode,
    pub extrapolation_min_points: usize,
}

impl Default for InterpolationConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::PiecewiseLinear,
            migration_mode: MigrationMode::Extrapolate,
            extrapolation_min_points: 2,
        }
    }
}

impl InterpolationConfig {
    pub fn validate(&self) -> Result<(), CurvesError> {
        match self.scheme {
            Scheme::Spline(order) if !matches!(order, 3 | 5 | 7) => {
                Err(CurvesError::InvalidSplineOrder(order))
            }
            _ => Ok(()),
        }
    }
}

/// One approximate eigenvalue curve over the collocation grid; `None`
/// marks grid points where the eigenvalue is outside the contour.
#[derive(Debug, Clone)]
pub struct Track<C> {
    id: TrackId,
    values: Vec<Option<C>>,
}

impl<C: Copy> Track<C> {
    pub fn id(&self) -> TrackId {
        self.id
    }

    pub fn value(&self, grid_index: usize) -> Option<C> {
        self.values[grid_index]
    }

    pub fn values(&self) -> &[Option<C>] {
        &self.values
    }

    /// Inclusive index ranges of consecutive finite values.
    pub fn runs(&self) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start = None;
        for (i, v) in self.values.iter().enumerate() {
            match (v.is_some(), start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push((s, i - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push((s, self.values.len() - 1));
        }
        runs
    }
}

/// Tracks plus the ownership map from snapshot values to track ids.
#[derive(Debug, Clone)]
pub struct StitchResult<C> {
    tracks: Vec<Track<C>>,
    owner: Vec<Vec<TrackId>>,
}

impl<C: Copy> StitchResult<C> {
    pub fn tracks(&self) -> &[Track<C>] {
        &self.tracks
    }

    pub fn into_tracks(self) -> Vec<Track<C>> {
        self.tracks
    }

    /// Track owning the `value_index`-th eigenvalue of snapshot `grid_index`.
    pub fn owner(&self, grid_index: usize, value_index: usize) -> TrackId {
        self.owner[grid_index][value_index]
    }
}

/// Chain matched pairs into global tracks.
///
/// Unmatched left values terminate their track; unmatched right values
/// start new tracks (absent before their entry point). Exits and entries
/// cannot be linked across an empty snapshot, so re-entries always open a
/// fresh track.
pub fn stitch<C: ComplexScalar>(
    snapshots: &[EigenSnapshot<C>],
    plans: &[MatchPlan<RealOf<C>>],
) -> Result<StitchResult<C>, CurvesError> {
    let count = snapshots.len();
    if count < 2 {
        return Err(CurvesError::TooFewSnapshots(count));
    }
    if plans.len() != count - 1 {
        return Err(CurvesError::PlanShapeMismatch {
            interval: plans.len(),
        });
    }
    for (j, plan) in plans.iter().enumerate() {
        let (n1, n2) = (snapshots[j].len(), snapshots[j + 1].len());
        let shape_ok = plan.len() == n1.min(n2)
            && plan.sigma.iter().all(|&s| s < n1)
            && plan.tau.iter().all(|&t| t < n2)
            && plan.unmatched_left.len() == n1 - plan.len()
            && plan.unmatched_right.len() == n2 - plan.len();
        if !shape_ok {
            return Err(CurvesError::PlanShapeMismatch { interval: j });
        }
    }

    let mut tracks: Vec<Track<C>> = Vec::new();
    let mut owner: Vec<Vec<TrackId>> = Vec::with_capacity(count);

    let first = snapshots[0].eigenvalues();
    owner.push((0..first.len()).collect());
    for (i, &v) in first.iter().enumerate() {
        let mut values = vec![None; count];
        values[0] = Some(v);
        tracks.push(Track { id: i, values });
    }

    for (j, plan) in plans.iter().enumerate() {
        let right = snapshots[j + 1].eigenvalues();
        let mut next_owner = vec![usize::MAX; right.len()];
        for (s, t) in plan.pairs() {
            let track = owner[j][s];
            tracks[track].values[j + 1] = Some(right[t]);
            next_owner[t] = track;
        }
        for &t in &plan.unmatched_right {
            let id = tracks.len();
            let mut values = vec![None; count];
            values[j + 1] = Some(right[t]);
            tracks.push(Track { id, values });
            next_owner[t] = id;
        }
        owner.push(next_owner);
    }

    Ok(StitchResult { tracks, owner })
}

/// Radial weighted harmonic-mean prediction of a migrating eigenvalue:
/// interpolates `lambda_1` at `p1` with a fictitious infinite eigenvalue
/// at `p2`, moving along the ray from the contour center `z0`.
pub fn harmonic_mean_segment<C: ComplexScalar>(
    lambda1: C,
    p1: RealOf<C>,
    p2: RealOf<C>,
    center: C,
    p: RealOf<C>,
) -> Result<C, CurvesError> {
    if p == p2 {
        return Err(CurvesError::HarmonicPole);
    }
    let scale = (p2 - p1) / (p2 - p);
    Ok((lambda1 - center).mul_real(scale) + center)
}

/// Per-run interpolant: real and imaginary parts fitted separately.
#[derive(Debug, Clone)]
pub enum RunCurve<C: ComplexScalar> {
    Constant(C),
    Fitted {
        re: Spline1D<RealOf<C>>,
        im: Spline1D<RealOf<C>>,
    },
}

impl<C: ComplexScalar> RunCurve<C> {
    pub fn eval(&self, p: RealOf<C>) -> C {
        match self {
            RunCurve::Constant(v) => *v,
            RunCurve::Fitted { re, im } => C::complex(re.eval(p), im.eval(p)),
        }
    }
}

/// Fit one finite run. The effective degree is the largest odd degree
/// allowed by both the scheme and the run length (constant for a single
/// point); evaluation beyond the run continues the boundary piece.
pub fn fit_run_curve<C: ComplexScalar>(
    sites: &[RealOf<C>],
    values: &[C],
    config: &InterpolationConfig,
) -> RunCurve<C> {
    assert_eq!(sites.len(), values.len());
    assert!(!sites.is_empty());
    if sites.len() == 1 {
        return RunCurve::Constant(values[0]);
    }
    let requested = match config.scheme {
        Scheme::PiecewiseLinear => 1,
        Scheme::Spline(order) => order,
    };
    let mut degree = requested.min(sites.len() - 1);
    if degree % 2 == 0 {
        degree -= 1;
    }
    let re: Vec<RealOf<C>> = values.iter().map(|v| v.re()).collect();
    let im: Vec<RealOf<C>> = values.iter().map(|v| v.im()).collect();
    RunCurve::Fitted {
        re: Spline1D::interpolate(sites, &re, degree),
        im: Spline1D::interpolate(sites, &im, degree),
    }
}

/// How a track behaves on one grid interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    /// Finite at both interval ends, interpolated per track.
    Explicit,
    /// Delegated to the bifurcation group with this index.
    Implicit(usize),
    /// Finite at exactly one end: predicted, then subjected to the
    /// contour drop rule.
    Migrating,
    /// Not present on this interval.
    Absent,
}

impl SegmentKind {
    pub fn label(&self) -> &'static str {
        match self {
            SegmentKind::Explicit => "explicit",
            SegmentKind::Implicit(_) => "implicit",
            SegmentKind::Migrating => "migrating",
            SegmentKind::Absent => "absent",
        }
    }
}

/// One evaluated curve point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample<C> {
    pub track: TrackId,
    pub value: C,
    pub kind: SegmentKind,
}

/// The global surrogate: collocation grid, per-track interpolants,
/// implicit bifurcation groups, and the contour drop rule.
#[derive(Debug, Clone)]
pub struct CurveModel<C: ComplexScalar> {
    grid: Vec<RealOf<C>>,
    contour: Contour<C>,
    config: InterpolationConfig,
    tracks: Vec<Track<C>>,
    run_curves: Vec<Vec<((usize, usize), RunCurve<C>)>>,
    kinds: Vec<Vec<SegmentKind>>,
    groups: Vec<BifurcationGroup<C>>,
    surrogates: Vec<ImplicitSurrogate<C>>,
}

impl<C: ComplexScalar> CurveModel<C> {
    /// Assemble the model: match adjacent snapshots, stitch tracks,
    /// detect bifurcation groups, and fit per-run interpolants.
    pub fn build(
        snapshots: &[EigenSnapshot<C>],
        config: InterpolationConfig,
        bifurcation_delta: RealOf<C>,
        stencil_half_width: usize,
    ) -> Result<Self, CurvesError> {
        config.validate()?;
        if snapshots.len() < 2 {
            return Err(CurvesError::TooFewSnapshots(snapshots.len()));
        }
        let grid: Vec<RealOf<C>> = snapshots.iter().map(|s| s.p()).collect();
        if !grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(CurvesError::UnsortedGrid);
        }
        let contour = *snapshots[0].contour();
        if snapshots.iter().any(|s| *s.contour() != contour) {
            return Err(CurvesError::ContourMismatch);
        }

        let plans: Vec<MatchPlan<RealOf<C>>> = snapshots
            .windows(2)
            .map(|w| solve_assignment(&build_cost(&w[0], &w[1])))
            .collect::<Result<_, _>>()?;
        let stitched = stitch(snapshots, &plans)?;
        let groups = detect_groups(snapshots, &plans, &stitched, bifurcation_delta, stencil_half_width)?;
        let surrogates: Vec<ImplicitSurrogate<C>> =
            groups.iter().map(|g| build_surrogate(g, &grid)).collect();
        let tracks = stitched.into_tracks();

        let intervals = grid.len() - 1;
        let mut kinds = vec![vec![SegmentKind::Absent; intervals]; tracks.len()];
        for (t, track) in tracks.iter().enumerate() {
            for j in 0..intervals {
                let left = track.value(j).is_some();
                let right = track.value(j + 1).is_some();
                kinds[t][j] = match (left, right) {
                    (true, true) => SegmentKind::Explicit,
                    (true, false) | (false, true) => SegmentKind::Migrating,
                    (false, false) => SegmentKind::Absent,
                };
            }
        }
        for (g, group) in groups.iter().enumerate() {
            for &t in &group.member_tracks {
                for j in group.span.0..=group.span.1 {
                    kinds[t][j] = SegmentKind::Implicit(g);
                }
            }
        }

        let run_curves = tracks
            .iter()
            .map(|track| {
                track
                    .runs()
                    .into_iter()
                    .map(|(a, b)| {
                        let sites = &grid[a..=b];
                        let values: Vec<C> =
                            (a..=b).map(|g| track.value(g).unwrap()).collect();
                        ((a, b), fit_run_curve(sites, &values, &config))
                    })
                    .collect()
            })
            .collect();

        Ok(Self {
            grid,
            contour,
            config,
            tracks,
            run_curves,
            kinds,
            groups,
            surrogates,
        })
    }

    pub fn grid(&self) -> &[RealOf<C>] {
        &self.grid
    }

    pub fn contour(&self) -> &Contour<C> {
        &self.contour
    }

    pub fn tracks(&self) -> &[Track<C>] {
        &self.tracks
    }

    pub fn groups(&self) -> &[BifurcationGroup<C>] {
        &self.groups
    }

    pub fn surrogates(&self) -> &[ImplicitSurrogate<C>] {
        &self.surrogates
    }

    pub fn segment_kind(&self, track: TrackId, interval: usize) -> SegmentKind {
        self.kinds[track][interval]
    }

    /// Parameter spans of the implicit groups, as `[p_lo, p_hi]` pairs.
    pub fn flagged_spans(&self) -> Vec<(RealOf<C>, RealOf<C>)> {
        self.groups
            .iter()
            .map(|g| (self.grid[g.span.0], self.grid[g.span.1 + 1]))
            .collect()
    }

    fn interval_of(&self, p: RealOf<C>) -> usize {
        let last = self.grid.len() - 2;
        let mut j = self.grid.partition_point(|&g| g <= p);
        j = j.saturating_sub(1);
        j.min(last)
    }

    fn run_containing(&self, track: TrackId, grid_index: usize) -> Option<&((usize, usize), RunCurve<C>)> {
        self.run_curves[track]
            .iter()
            .find(|((a, b), _)| *a <= grid_index && grid_index <= *b)
    }

    /// Predict the value of a migrating track on interval `j` at `p`.
    /// Returns `None` at the formal pole (the curve has left the region).
    fn migrating_value(&self, track: TrackId, j: usize, p: RealOf<C>) -> Option<C> {
        let t = &self.tracks[track];
        let center = self.contour.center();
        let (p_left, p_right) = (self.grid[j], self.grid[j + 1]);
        if let Some(anchor) = t.value(j) {
            // run ends at j, track leaves as p increases
            let ((a, b), curve) = self.run_containing(track, j)?;
            let run_len = b - a + 1;
            if self.config.migration_mode == MigrationMode::Extrapolate
                && run_len >= self.config.extrapolation_min_points
            {
                Some(curve.eval(p))
            } else {
                harmonic_mean_segment(anchor, p_left, p_right, center, p).ok()
            }
        } else {
            let anchor = t.value(j + 1)?;
            // run starts at j + 1, mirrored in decreasing p
            let ((a, b), curve) = self.run_containing(track, j + 1)?;
            let run_len = b - a + 1;
            if self.config.migration_mode == MigrationMode::Extrapolate
                && run_len >= self.config.extrapolation_min_points
            {
                Some(curve.eval(p))
            } else if p == p_left {
                None
            } else {
                let scale = (p_right - p_left) / (p - p_left);
                Some((anchor - center).mul_real(scale) + center)
            }
        }
    }

    /// Evaluate every track at `p`; values outside the contour are
    /// dropped, and tracks on implicit intervals take the matching root
    /// of their group's surrogate.
    pub fn evaluate(&self, p: RealOf<C>) -> Result<Vec<CurveSample<C>>, CurvesError> {
        let (lo, hi) = (self.grid[0], self.grid[self.grid.len() - 1]);
        if !(p >= lo && p <= hi) {
            return Err(CurvesError::OutOfDomain {
                p: format!("{p}"),
                lo: format!("{lo}"),
                hi: format!("{hi}"),
            });
        }
        let j = self.interval_of(p);

        // roots of each group covering this interval, assigned to members
        // by optimal matching against the member values at the nearest
        // span grid point
        let mut group_values: Vec<Option<Vec<C>>> = vec![None; self.groups.len()];
        for (g, group) in self.groups.iter().enumerate() {
            if !group.covers_interval(j) {
                continue;
            }
            let roots = self.surrogates[g].roots_at(p);
            let anchor = if p - self.grid[j] <= self.grid[j + 1] - p {
                j
            } else {
                j + 1
            };
            let member_values: Vec<C> = group
                .member_tracks
                .iter()
                .map(|&t| self.tracks[t].value(anchor).unwrap())
                .collect();
            let cost = crate::matching::CostMatrix::between(&roots, &member_values);
            let plan = solve_assignment(&cost)?;
            let mut assigned = vec![C::zero(); group.member_tracks.len()];
            for (root_idx, member_idx) in plan.pairs() {
                assigned[member_idx] = roots[root_idx];
            }
            group_values[g] = Some(assigned);
        }

        let mut out = Vec::new();
        for (t, kinds) in self.kinds.iter().enumerate() {
            let kind = kinds[j];
            let value = match kind {
                SegmentKind::Absent => None,
                SegmentKind::Implicit(g) => {
                    let member_idx = self.groups[g]
                        .member_tracks
                        .iter()
                        .position(|&m| m == t)
                        .expect("implicit kind only on member tracks");
                    group_values[g].as_ref().map(|v| v[member_idx])
                }
                SegmentKind::Explicit => self
                    .run_containing(t, j)
                    .map(|(_, curve)| curve.eval(p)),
                SegmentKind::Migrating => self.migrating_value(t, j, p),
            };
            if let Some(value) = value {
                if self.contour.contains(value, C::real(0.0)) {
                    out.push(CurveSample {
                        track: t,
                        value,
                        kind,
                    });
                }
            }
        }
        Ok(out)
    }
}
