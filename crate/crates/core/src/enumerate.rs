//! Mass-balance-feasible candidate states: binary pairs with lever-rule
//! fractions and general k-state groups on n-component grids.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{AugmentedGrid, StateSpace};

/// Default cap on the number of k-tuples examined for one group order.
pub const DEFAULT_GROUP_BUDGET: u128 = 100_000_000;

/// Tolerance on `Σφ = 1` and `Σ φ x = z`.
pub const GROUP_TOL: f64 = 1e-10;

/// Phase fractions must lie in `(δ, 1-δ)` for groups of two or more states.
pub const PHI_OPEN_MARGIN: f64 = 1e-12;

/// Relative singular-value threshold for treating a state matrix as rank
/// deficient.
pub const RANK_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CandidatePair {
    pub i: usize,
    pub j: usize,
    pub phi_i: f64,
    pub phi_j: f64,
    pub feasible: bool,
}

/// Number of unordered pairs with self-pairs over `n` points.
pub fn pair_count(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Phase fractions `(φ_i, φ_j)` for a feed `z` split into `x_i ≤ z ≤ x_j`.
/// A degenerate pair (`x_i == x_j`) is all in the first state.
#[inline]
pub fn lever_rule(x_i: f64, x_j: f64, z: f64) -> (f64, f64) {
    if x_j == x_i {
        return (1.0, 0.0);
    }
    let phi_j = (z - x_i) / (x_j - x_i);
    (1.0 - phi_j, phi_j)
}

/// The pair `(i, j)` on an augmented grid. Because the grid is sorted and
/// contains the feed, `[x_i, x_j]` contains `z` exactly when
/// `i ≤ feed_index ≤ j`.
pub fn pair_at(grid: &AugmentedGrid, i: usize, j: usize) -> CandidatePair {
    debug_assert!(i <= j);
    let f = grid.feed_index();
    let feasible = i <= f && f <= j;
    let (phi_i, phi_j) = if feasible {
        let x = grid.points();
        lever_rule(x[i], x[j], grid.feed())
    } else {
        (0.0, 0.0)
    };
    CandidatePair {
        i,
        j,
        phi_i,
        phi_j,
        feasible,
    }
}

/// All pairs `i ≤ j` in lexicographic order, infeasible ones flagged.
/// Nothing is stored; the iterator walks the upper triangle.
pub fn feasible_pairs(grid: &AugmentedGrid) -> impl Iterator<Item = CandidatePair> + '_ {
    let n = grid.len();
    (0..n).flat_map(move |i| (i..n).map(move |j| pair_at(grid, i, j)))
}

/// A k-tuple of states whose positive fractions reproduce the feed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateGroup {
    pub indices: Vec<usize>,
    pub phi: Vec<f64>,
}

impl StateGroup {
    pub fn order(&self) -> usize {
        self.indices.len()
    }
}

/// Expands a binary mole fraction `[x]` to `[x, 1-x]`; other vectors are
/// returned as is.
pub fn full_composition(coords: &[f64]) -> Vec<f64> {
    if coords.len() == 1 {
        vec![coords[0], 1.0 - coords[0]]
    } else {
        coords.to_vec()
    }
}

/// Least-squares phase fractions for `states` reproducing `z`, or `None`
/// when the states are linearly dependent or the fractions violate the
/// balance or positivity checks.
pub fn group_membership(states: &[&[f64]], z: &[f64]) -> Option<Vec<f64>> {
    let k = states.len();
    let n = z.len();
    if k == 0 || k > n || states.iter().any(|s| s.len() != n) {
        return None;
    }
    let x = DMatrix::from_fn(n, k, |r, c| states[c][r]);
    let svd = x.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if !(smax > 0.0) || smin < RANK_RTOL * smax {
        return None;
    }
    let b = DVector::from_column_slice(z);
    let phi = svd.solve(&b, 0.0).ok()?;
    let sum: f64 = phi.iter().sum();
    if (sum - 1.0).abs() > GROUP_TOL {
        return None;
    }
    let resid = &x * &phi - &b;
    if resid.amax() > GROUP_TOL {
        return None;
    }
    if k == 1 {
        if (phi[0] - 1.0).abs() > GROUP_TOL {
            return None;
        }
        return Some(vec![1.0]);
    } else if phi
        .iter()
        .any(|&p| !(p > PHI_OPEN_MARGIN && p < 1.0 - PHI_OPEN_MARGIN))
    {
        return None;
    }
    Some(phi.iter().copied().collect())
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for t in 0..k {
        // acc * (n - t) / (t + 1) stays integral at every step
        match acc.checked_mul((n - t) as u128) {
            Some(v) => acc = v / (t as u128 + 1),
            None => return u128::MAX,
        }
    }
    acc
}

/// Group classes `Γ^(1) … Γ^(max_order)` for feed `z`.
///
/// `z` is a full composition vector, or a single mole fraction for binary
/// grids. Each order is refused with [`Error::BudgetExceeded`] when
/// `C(N, k)` exceeds `budget`. Output order is lexicographic in the index
/// tuples regardless of thread count.
pub fn enumerate_groups<S>(
    space: &S,
    z: &[f64],
    max_order: usize,
    budget: u128,
) -> Result<Vec<Vec<StateGroup>>>
where
    S: StateSpace + Sync,
{
    let n_states = space.n_states();
    if n_states == 0 {
        return Err(Error::EmptyInput("state grid"));
    }
    let zfull = full_composition(z);
    let n_comp = zfull.len();
    if max_order == 0 || max_order > n_comp {
        return Err(crate::error::invalid(
            "max_order",
            format!("must be in 1..={n_comp}, got {max_order}"),
        ));
    }
    let states: Vec<Vec<f64>> = (0..n_states)
        .map(|i| full_composition(space.coords(i)))
        .collect();
    if let Some(bad) = states.iter().find(|s| s.len() != n_comp) {
        return Err(Error::LengthMismatch {
            expected: n_comp,
            actual: bad.len(),
        });
    }
    for k in 1..=max_order {
        let count = binomial(n_states, k);
        if count > budget {
            return Err(Error::BudgetExceeded {
                order: k,
                count,
                budget,
            });
        }
    }

    let mut classes = Vec::with_capacity(max_order);
    for k in 1..=max_order {
        let class: Vec<StateGroup> = (0..n_states)
            .into_par_iter()
            .flat_map_iter(|first| groups_with_first(&states, &zfull, k, first))
            .collect();
        classes.push(class);
    }
    Ok(classes)
}

/// All admissible k-groups whose smallest index is `first`, lexicographic.
fn groups_with_first(states: &[Vec<f64>], z: &[f64], k: usize, first: usize) -> Vec<StateGroup> {
    let n = states.len();
    let mut out = Vec::new();
    if first + k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).map(|t| first + t).collect();
    let mut cols: Vec<&[f64]> = Vec::with_capacity(k);
    loop {
        cols.clear();
        cols.extend(idx.iter().map(|&i| states[i].as_slice()));
        if let Some(phi) = group_membership(&cols, z) {
            out.push(StateGroup {
                indices: idx.clone(),
                phi,
            });
        }
        // advance positions 1..k, keeping idx[0] fixed
        let mut t = k;
        loop {
            if t <= 1 {
                return out;
            }
            t -= 1;
            if idx[t] < n - (k - t) {
                idx[t] += 1;
                for u in t + 1..k {
                    idx[u] = idx[u - 1] + 1;
                }
                break;
            }
        }
    }
}
