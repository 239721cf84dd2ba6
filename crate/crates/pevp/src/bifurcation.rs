//! Implicit treatment of bifurcating eigenvalue groups.
//!
//! Eigenvalues flagged by the second-best-match criterion are grouped and
//! represented through a monic polynomial `xi(lambda, p)` whose value at
//! each collocation point has the group members as roots; interpolating
//! the coefficients in `p` lets the approximate curves bifurcate the way
//! explicit per-curve interpolants cannot.

use crate::beyn::EigenSnapshot;
use crate::curves::{StitchResult, TrackId};
use crate::matching::{flag_bifurcation_pairs, CostMatrix, MatchError, MatchPlan};
use crate::scalar::{cmp_complex, ComplexScalar, RealOf};
use ndarray::Array2;
use ndarray_linalg::EigVals;
use std::collections::BTreeSet;

/// Monic polynomial coefficients (ascending, leading 1 included) from roots.
pub fn poly_from_roots<C: ComplexScalar>(roots: &[C]) -> Vec<C> {
    let mut coeffs = vec![C::zero(); roots.len() + 1];
    coeffs[0] = C::one();
    for (k, root) in roots.iter().enumerate() {
        // multiply by (lambda - root): degree grows from k to k + 1
        coeffs[k + 1] = coeffs[k];
        for i in (1..=k).rev() {
            coeffs[i] = coeffs[i - 1] - *root * coeffs[i];
        }
        coeffs[0] = -*root * coeffs[0];
    }
    // stored ascending: index i holds the lambda^i coefficient
    coeffs
}

/// All roots of a monic polynomial (ascending coefficients, last entry 1)
/// as eigenvalues of its companion matrix, sorted lexicographically.
pub fn companion_roots<C: ComplexScalar>(coeffs: &[C]) -> Vec<C> {
    let degree = coeffs.len() - 1;
    debug_assert!((coeffs[degree] - C::one()).abs() < C::real(1e-12));
    if degree == 0 {
        return vec![];
    }
    if degree == 1 {
        return vec![-coeffs[0]];
    }
    let mut companion = Array2::<C>::zeros((degree, degree));
    for i in 1..degree {
        companion[(i, i - 1)] = C::one();
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -coeffs[i];
    }
    let mut roots = companion
        .eigvals()
        .expect("companion eigendecomposition")
        .to_vec();
    roots.sort_by(cmp_complex);
    roots
}

/// Group of eigenvalue tracks suspected to bifurcate within a span of
/// grid intervals (the flagged interval widened by the stencil half-width).
#[derive(Debug, Clone)]
pub struct BifurcationGroup<C: ComplexScalar> {
    /// Sorted track ids, pairwise disjoint across groups.
    pub member_tracks: Vec<TrackId>,
    /// Inclusive range of grid-interval indices.
    pub span: (usize, usize),
    /// Member eigenvalues per grid point of the span (outer index runs
    /// over grid points `span.0 ..= span.1 + 1`, inner over members).
    pub local_data: Vec<Vec<C>>,
}

impl<C: ComplexScalar> BifurcationGroup<C> {
    pub fn order(&self) -> usize {
        self.member_tracks.len()
    }

    /// Grid points covered by the span.
    pub fn grid_points(&self) -> std::ops::RangeInclusive<usize> {
        self.span.0..=self.span.1 + 1
    }

    pub fn covers_interval(&self, interval: usize) -> bool {
        interval >= self.span.0 && interval <= self.span.1
    }
}

/// Run the second-best-match criterion on every interval and group the
/// flagged eigenvalue tracks.
///
/// Only matched (square) sub-problems are examined, so migrating
/// eigenvalues are never flagged. Groups sharing a track or overlapping
/// in span are merged transitively; members that are not finite across
/// the whole merged span are evicted, and groups reduced below order 2
/// dissolve.
pub fn detect_groups<C: ComplexScalar>(
    snapshots: &[EigenSnapshot<C>],
    plans: &[MatchPlan<RealOf<C>>],
    stitched: &StitchResult<C>,
    delta: RealOf<C>,
    stencil_half_width: usize,
) -> Result<Vec<BifurcationGroup<C>>, MatchError> {
    let interval_count = plans.len();
    let mut raw: Vec<(BTreeSet<TrackId>, (usize, usize))> = Vec::new();

    for (j, plan) in plans.iter().enumerate() {
        if plan.is_empty() {
            continue;
        }
        let left = snapshots[j].eigenvalues();
        let right = snapshots[j + 1].eigenvalues();
        let rows: Vec<usize> = plan.sigma.clone();
        let mut cols: Vec<usize> = plan.tau.clone();
        cols.sort_unstable();
        let sub = CostMatrix::from_entries(Array2::from_shape_fn(
            (rows.len(), cols.len()),
            |(a, b)| (left[rows[a]] - right[cols[b]]).abs(),
        ));
        let flagged = flag_bifurcation_pairs(&sub, delta)?;
        if flagged.is_empty() {
            continue;
        }
        let mut members = BTreeSet::new();
        for (a, b) in flagged {
            members.insert(stitched.owner(j, rows[a]));
            members.insert(stitched.owner(j + 1, cols[b]));
        }
        if members.len() < 2 {
            continue;
        }
        let lo = j.saturating_sub(stencil_half_width);
        let hi = (j + stencil_half_width).min(interval_count - 1);
        raw.push((members, (lo, hi)));
    }

    // Transitive closure: merge groups whose spans overlap while sharing
    // a track. Distant flags of the same tracks stay separate events, and
    // track-disjoint groups may coexist on overlapping spans; either way
    // no track belongs to two groups on any single interval.
    let mut merged: Vec<(BTreeSet<TrackId>, (usize, usize))> = Vec::new();
    for (members, span) in raw {
        let mut acc_members = members;
        let mut acc_span = span;
        loop {
            let mut absorbed = false;
            merged.retain(|(m, s)| {
                let overlaps = acc_span.0 <= s.1 && s.0 <= acc_span.1;
                let shares = m.intersection(&acc_members).next().is_some();
                if overlaps && shares {
                    acc_members.extend(m.iter().copied());
                    acc_span = (acc_span.0.min(s.0), acc_span.1.max(s.1));
                    absorbed = true;
                    false
                } else {
                    true
                }
            });
            if !absorbed {
                break;
            }
        }
        merged.push((acc_members, acc_span));
    }

    // evict members that are absent somewhere in the merged span
    let mut groups = Vec::new();
    for (members, span) in merged {
        let survivors: Vec<TrackId> = members
            .into_iter()
            .filter(|&t| {
                (span.0..=span.1 + 1).all(|g| stitched.tracks()[t].value(g).is_some())
            })
            .collect();
        if survivors.len() < 2 {
            continue;
        }
        let local_data: Vec<Vec<C>> = (span.0..=span.1 + 1)
            .map(|g| {
                survivors
                    .iter()
                    .map(|&t| stitched.tracks()[t].value(g).unwrap())
                    .collect()
            })
            .collect();
        groups.push(BifurcationGroup {
            member_tracks: survivors,
            span,
            local_data,
        });
    }
    groups.sort_by_key(|g| (g.span.0, g.member_tracks[0]));
    Ok(groups)
}

/// Implicit polynomial surrogate of one bifurcation group: a monic
/// degree-M polynomial in lambda whose non-leading coefficients are
/// Lagrange-interpolated over the span's grid points (barycentric form).
#[derive(Debug, Clone)]
pub struct ImplicitSurrogate<C: ComplexScalar> {
    degree: usize,
    sites: Vec<RealOf<C>>,
    weights: Vec<RealOf<C>>,
    /// Non-leading monic coefficients (ascending) at each site.
    coeffs_at_sites: Vec<Vec<C>>,
}

impl<C: ComplexScalar> ImplicitSurrogate<C> {
    /// Build from per-site root lists (all of one length M >= 1).
    pub fn from_data(sites: Vec<RealOf<C>>, roots_per_site: &[Vec<C>]) -> Self {
        assert_eq!(sites.len(), roots_per_site.len());
        assert!(!sites.is_empty());
        let degree = roots_per_site[0].len();
        assert!(roots_per_site.iter().all(|r| r.len() == degree));
        let coeffs_at_sites: Vec<Vec<C>> = roots_per_site
            .iter()
            .map(|roots| {
                let mut c = poly_from_roots(roots);
                c.pop(); // drop the leading 1: it is implied
                c
            })
            .collect();
        // barycentric weights over the sites, normalized to unit maximum
        // magnitude (the second form is scale-invariant)
        let mut weights = vec![C::real(1.0); sites.len()];
        for j in 0..sites.len() {
            for k in 0..sites.len() {
                if k != j {
                    weights[j] = weights[j] / (sites[j] - sites[k]);
                }
            }
        }
        let peak = weights
            .iter()
            .map(|w| num_traits::Float::abs(*w))
            .fold(C::real(0.0), |a, b| if b > a { b } else { a });
        if peak > C::real(0.0) {
            for w in weights.iter_mut() {
                *w = *w / peak;
            }
        }
        Self {
            degree,
            sites,
            weights,
            coeffs_at_sites,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn sites(&self) -> &[RealOf<C>] {
        &self.sites
    }

    /// Monic coefficients (ascending, leading 1 appended) at parameter `p`.
    pub fn coefficients_at(&self, p: RealOf<C>) -> Vec<C> {
        let mut coeffs = vec![C::zero(); self.degree + 1];
        coeffs[self.degree] = C::one();
        if self.sites.len() == 1 {
            coeffs[..self.degree].copy_from_slice(&self.coeffs_at_sites[0]);
            return coeffs;
        }
        // exact site hit: return stored coefficients
        if let Some(j) = self.sites.iter().position(|&s| s == p) {
            coeffs[..self.degree].copy_from_slice(&self.coeffs_at_sites[j]);
            return coeffs;
        }
        // second barycentric form
        let mut denom = C::real(0.0);
        let mut factors = Vec::with_capacity(self.sites.len());
        for (&site, &w) in self.sites.iter().zip(&self.weights) {
            let f = w / (p - site);
            denom = denom + f;
            factors.push(f);
        }
        for (f, cs) in factors.iter().zip(&self.coeffs_at_sites) {
            let scale = C::from_real(*f / denom);
            for (acc, c) in coeffs[..self.degree].iter_mut().zip(cs) {
                *acc += *c * scale;
            }
        }
        coeffs
    }

    /// The M roots of the surrogate at `p` (multiset, sorted).
    pub fn roots_at(&self, p: RealOf<C>) -> Vec<C> {
        companion_roots(&self.coefficients_at(p))
    }
}

/// Surrogate of a detected group over the collocation grid.
pub fn build_surrogate<C: ComplexScalar>(
    group: &BifurcationGroup<C>,
    grid: &[RealOf<C>],
) -> ImplicitSurrogate<C> {
    let sites: Vec<RealOf<C>> = group.grid_points().map(|g| grid[g]).collect();
    ImplicitSurrogate::from_data(sites, &group.local_data)
}
