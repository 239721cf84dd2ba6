//! Optimal 1-to-1 matching between eigenvalue snapshots.
//!
//! Solves the rectangular linear assignment problem by shortest augmenting
//! paths, with a deterministic lexicographic tie-break among equal-loss
//! optima, and enumerates near-optimal matches for bifurcation flagging.

use crate::beyn::EigenSnapshot;
use crate::scalar::{ComplexScalar, RealOf};
use ndarray::Array2;
use num_traits::Float;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("no full matching with finite loss exists")]
    Infeasible,
}

/// Dense matrix of pairwise eigenvalue distances.
///
/// Entries are non-negative; `+inf` marks forbidden pairs in the
/// perturbed copies used by bifurcation flagging.
#[derive(Debug, Clone)]
pub struct CostMatrix<R> {
    entries: Array2<R>,
}

impl<R: Float + 'static> CostMatrix<R> {
    pub fn from_entries(entries: Array2<R>) -> Self {
        assert!(
            entries.iter().all(|e| !e.is_nan() && *e >= R::zero()),
            "cost entries must be non-negative and not NaN"
        );
        Self { entries }
    }

    pub fn between<C>(a: &[C], b: &[C]) -> Self
    where
        C: ComplexScalar<Real = R>,
    {
        let entries = Array2::from_shape_fn((a.len(), b.len()), |(i, k)| (a[i] - b[k]).abs());
        Self { entries }
    }

    pub fn row_count(&self) -> usize {
        self.entries.nrows()
    }

    pub fn col_count(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entry(&self, i: usize, k: usize) -> R {
        self.entries[(i, k)]
    }

    /// Copy with one entry replaced by the forbidden sentinel.
    pub fn forbid(&self, i: usize, k: usize) -> Self {
        let mut entries = self.entries.clone();
        entries[(i, k)] = R::infinity();
        Self { entries }
    }
}

/// Distance matrix between the eigenvalue lists of two snapshots.
pub fn build_cost<C: ComplexScalar>(
    a: &EigenSnapshot<C>,
    b: &EigenSnapshot<C>,
) -> CostMatrix<RealOf<C>> {
    CostMatrix::between(a.eigenvalues(), b.eigenvalues())
}

/// Minimum-loss pairing between two index sets.
///
/// `sigma[i]` is matched to `tau[i]`; both lists are sorted by `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchPlan<R> {
    pub sigma: Vec<usize>,
    pub tau: Vec<usize>,
    pub pair_costs: Vec<R>,
    pub loss: R,
    pub unmatched_left: Vec<usize>,
    pub unmatched_right: Vec<usize>,
}

impl<R: Float> MatchPlan<R> {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.sigma.iter().copied().zip(self.tau.iter().copied())
    }

    pub fn contains_pair(&self, pair: (usize, usize)) -> bool {
        self.pairs().any(|q| q == pair)
    }
}

/// Shortest-augmenting-path solver; requires `nr <= nc`.
/// Returns the column assigned to each row, or `Infeasible` when some row
/// cannot be matched at finite cost.
fn sap<R: Float>(cost: impl Fn(usize, usize) -> R, nr: usize, nc: usize) -> Result<Vec<usize>, MatchError> {
    debug_assert!(nr <= nc);
    let inf = R::infinity();
    let none = usize::MAX;
    let virt = nc; // virtual start column
    let mut u = vec![R::zero(); nr];
    let mut v = vec![R::zero(); nc + 1];
    let mut assigned_row = vec![none; nc + 1];
    let mut way = vec![virt; nc + 1];

    for row in 0..nr {
        assigned_row[virt] = row;
        let mut j0 = virt;
        let mut minv = vec![inf; nc];
        let mut used = vec![false; nc + 1];
        loop {
            used[j0] = true;
            let i0 = assigned_row[j0];
            let mut delta = inf;
            let mut j1 = none;
            for j in 0..nc {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if j1 == none || delta == inf {
                return Err(MatchError::Infeasible);
            }
            for j in 0..=nc {
                if used[j] {
                    if assigned_row[j] != none {
                        u[assigned_row[j]] = u[assigned_row[j]] + delta;
                    }
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if assigned_row[j0] == none {
                break;
            }
        }
        // augment backwards along the alternating path
        while j0 != virt {
            let j1 = way[j0];
            assigned_row[j0] = assigned_row[j1];
            j0 = j1;
        }
    }

    let mut row_to_col = vec![none; nr];
    for j in 0..nc {
        if assigned_row[j] != none {
            row_to_col[assigned_row[j]] = j;
        }
    }
    debug_assert!(row_to_col.iter().all(|&j| j != none));
    Ok(row_to_col)
}

/// Optimal loss of the assignment restricted to the given rows and columns.
fn restricted_optimal_loss<R: Float + 'static>(
    cost: &CostMatrix<R>,
    rows: &[usize],
    cols: &[usize],
) -> Result<R, MatchError> {
    let (nr, nc) = (rows.len(), cols.len());
    if nr.min(nc) == 0 {
        return Ok(R::zero());
    }
    let assignment = if nr <= nc {
        sap(|i, j| cost.entry(rows[i], cols[j]), nr, nc)?
    } else {
        let t = sap(|i, j| cost.entry(rows[j], cols[i]), nc, nr)?;
        // invert: t maps col-side index to row-side index
        let mut inv = vec![usize::MAX; nr];
        for (c, r) in t.into_iter().enumerate() {
            inv[r] = c;
        }
        return Ok(rows
            .iter()
            .enumerate()
            .filter(|(i, _)| inv[*i] != usize::MAX)
            .fold(R::zero(), |acc, (i, &r)| acc + cost.entry(r, cols[inv[i]])));
    };
    Ok(assignment
        .iter()
        .enumerate()
        .fold(R::zero(), |acc, (i, &j)| acc + cost.entry(rows[i], cols[j])))
}

/// Minimum-loss plan; among equal-loss optima, returns the
/// lexicographically smallest `(sigma, tau)` pair.
pub fn solve_assignment<R: Float + 'static>(cost: &CostMatrix<R>) -> Result<MatchPlan<R>, MatchError> {
    let (n1, n2) = (cost.row_count(), cost.col_count());
    let need = n1.min(n2);
    if need == 0 {
        return Ok(MatchPlan {
            sigma: vec![],
            tau: vec![],
            pair_costs: vec![],
            loss: R::zero(),
            unmatched_left: (0..n1).collect(),
            unmatched_right: (0..n2).collect(),
        });
    }

    let all_rows: Vec<usize> = (0..n1).collect();
    let all_cols: Vec<usize> = (0..n2).collect();
    let optimum = restricted_optimal_loss(cost, &all_rows, &all_cols)?;
    let tol = (optimum.abs().max(R::one())) * R::epsilon() * R::from(64.0).unwrap();

    // Fix pairs one position at a time, in ascending (row, col) order,
    // keeping only choices that still complete to an optimal plan.
    let mut rows_left = all_rows;
    let mut cols_left = all_cols;
    let mut sigma = Vec::with_capacity(need);
    let mut tau = Vec::with_capacity(need);
    let mut pair_costs = Vec::with_capacity(need);
    let mut fixed_sum = R::zero();

    for position in 0..need {
        let remaining = need - position - 1;
        let mut chosen: Option<(usize, usize, R)> = None; // (row idx, col idx, entry)
        let mut fallback: Option<(usize, usize, R, R)> = None; // + total, lex-first minimum
        'rows: for ri in 0..rows_left.len() {
            if rows_left.len() - ri < remaining + 1 {
                break;
            }
            let r = rows_left[ri];
            for ci in 0..cols_left.len() {
                let c = cols_left[ci];
                let e = cost.entry(r, c);
                if !e.is_finite() {
                    continue;
                }
                let completion = if remaining == 0 {
                    Ok(R::zero())
                } else {
                    let sub_rows = &rows_left[ri + 1..];
                    let sub_cols: Vec<usize> = cols_left
                        .iter()
                        .copied()
                        .filter(|&cc| cc != c)
                        .collect();
                    if sub_rows.len().min(sub_cols.len()) < remaining {
                        continue;
                    }
                    restricted_optimal_loss(cost, sub_rows, &sub_cols)
                };
                let Ok(completion) = completion else { continue };
                let total = fixed_sum + e + completion;
                if total <= optimum + tol {
                    chosen = Some((ri, ci, e));
                    break 'rows;
                }
                if fallback.is_none_or(|(.., best)| total < best) {
                    fallback = Some((ri, ci, e, total));
                }
            }
        }
        let (ri, ci, e) = chosen
            .or(fallback.map(|(ri, ci, e, _)| (ri, ci, e)))
            .expect("a feasible optimal plan exists");
        let r = rows_left[ri];
        let c = cols_left[ci];
        sigma.push(r);
        tau.push(c);
        pair_costs.push(e);
        fixed_sum = fixed_sum + e;
        rows_left.drain(..=ri);
        cols_left.remove(ci);
    }

    let matched_rows: BTreeSet<usize> = sigma.iter().copied().collect();
    let matched_cols: BTreeSet<usize> = tau.iter().copied().collect();
    Ok(MatchPlan {
        loss: pair_costs.iter().fold(R::zero(), |a, &b| a + b),
        sigma,
        tau,
        pair_costs,
        unmatched_left: (0..n1).filter(|i| !matched_rows.contains(i)).collect(),
        unmatched_right: (0..n2).filter(|k| !matched_cols.contains(k)).collect(),
    })
}

/// Forbidden-entry enumeration of near-optimal matches.
///
/// For each optimal pair, re-solves with that entry forbidden; when the
/// perturbed loss stays within a factor `1 + delta` of the optimum, every
/// pair of the optimal plan missing from the perturbed plan is flagged as
/// potentially involved in a bifurcation. Returns the deduplicated union.
pub fn flag_bifurcation_pairs<R: Float + 'static>(
    cost: &CostMatrix<R>,
    delta: R,
) -> Result<Vec<(usize, usize)>, MatchError> {
    debug_assert!(delta > R::zero());
    let plan = solve_assignment(cost)?;
    if plan.is_empty() {
        return Ok(vec![]);
    }
    let threshold = (R::one() + delta) * plan.loss;
    let mut flagged = BTreeSet::new();
    for (s, t) in plan.pairs() {
        let perturbed = cost.forbid(s, t);
        let Ok(alt) = solve_assignment(&perturbed) else {
            continue; // forbidding broke feasibility: alternative loss is infinite
        };
        if alt.loss < threshold {
            for pair in plan.pairs() {
                if !alt.contains_pair(pair) {
                    flagged.insert(pair);
                }
            }
        }
    }
    Ok(flagged.into_iter().collect())
}
