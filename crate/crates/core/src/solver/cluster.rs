//! Splitting a state distribution into phases.
//!
//! States are grouped into basins of attraction of the probability surface
//! (steepest ascent over grid neighbours). Basins whose peak is negligible,
//! whose mass is tiny, or whose valley towards a neighbour is shallow are
//! absorbed by the neighbouring basin they share the highest boundary with.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::StateSpace;

/// Peaks below this probability do not start a phase.
pub const PROB_FLOOR: f64 = 1e-12;

/// Basins holding less total probability than this are merged away.
pub const DEFAULT_MIN_AMOUNT: f64 = 1e-6;

/// A basin whose boundary with a neighbour reaches this fraction of its own
/// peak is not separated by a real valley and is merged.
pub const SADDLE_RATIO: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCluster {
    /// Probability-weighted mean composition (full vector for simplex
    /// grids, mole fraction of component 1 for binary grids).
    pub composition: Vec<f64>,
    pub amount: f64,
    /// Index of the most probable state in the cluster.
    pub peak: usize,
}

/// Total order used for ascent: higher probability first, then lower index.
fn higher(p: &[f64], a: usize, b: usize) -> bool {
    match p[a].partial_cmp(&p[b]).unwrap_or(Ordering::Equal) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => a < b,
    }
}

pub fn cluster_phases<S: StateSpace>(
    probs: &[f64],
    space: &S,
    min_amount: f64,
) -> Result<Vec<PhaseCluster>> {
    let n = space.n_states();
    if n == 0 {
        return Err(Error::EmptyInput("state grid"));
    }
    if probs.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: probs.len(),
        });
    }
    let mut nb = Vec::new();
    let adjacency: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            space.neighbors(i, &mut nb);
            nb.clone()
        })
        .collect();

    // steepest ascent pointer
    let up: Vec<usize> = (0..n)
        .map(|i| {
            let mut best = i;
            for &j in &adjacency[i] {
                if higher(probs, j, best) {
                    best = j;
                }
            }
            best
        })
        .collect();
    let mut root = vec![usize::MAX; n];
    let mut path = Vec::new();
    for i in 0..n {
        let mut k = i;
        while root[k] == usize::MAX && up[k] != k {
            path.push(k);
            k = up[k];
        }
        let r = if root[k] == usize::MAX { k } else { root[k] };
        root[k] = r;
        for v in path.drain(..) {
            root[v] = r;
        }
    }

    // basins keyed by peak; union-find over peaks for merging
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    let peak_of = |parent: &mut Vec<usize>, i: usize| find(parent, root[i]);

    loop {
        let mut mass = vec![0.0; n];
        for i in 0..n {
            let b = peak_of(&mut parent, i);
            mass[b] += probs[i];
        }
        // strongest contact of every basin: highest min(p_u, p_v) over
        // boundary edges, ties to the lower basin index
        let mut contact: Vec<Option<(usize, f64)>> = vec![None; n];
        for u in 0..n {
            let bu = peak_of(&mut parent, u);
            for &v in &adjacency[u] {
                let bv = peak_of(&mut parent, v);
                if bv == bu {
                    continue;
                }
                let s = probs[u].min(probs[v]);
                let better = match contact[bu] {
                    None => true,
                    Some((tb, ts)) => s > ts || (s == ts && bv < tb),
                };
                if better {
                    contact[bu] = Some((bv, s));
                }
            }
        }
        let weak = (0..n)
            .filter(|&b| root[b] == b && find(&mut parent, b) == b)
            .filter_map(|b| contact[b].map(|(t, s)| (b, t, s)))
            .filter(|&(b, _, s)| {
                probs[b] < PROB_FLOOR || mass[b] < min_amount || s >= SADDLE_RATIO * probs[b]
            })
            .min_by(|x, y| {
                probs[x.0]
                    .total_cmp(&probs[y.0])
                    .then(mass[x.0].total_cmp(&mass[y.0]))
                    .then(x.0.cmp(&y.0))
            });
        match weak {
            Some((b, target, _)) => parent[b] = target,
            None => break,
        }
    }

    let dim = space.coords(0).len();
    let mut order: Vec<usize> = Vec::new();
    let mut amount = vec![0.0; n];
    let mut moment = vec![vec![]; n];
    for i in 0..n {
        let b = peak_of(&mut parent, i);
        if moment[b].is_empty() {
            moment[b] = vec![0.0; dim];
            order.push(b);
        }
        amount[b] += probs[i];
        for (m, c) in moment[b].iter_mut().zip(space.coords(i)) {
            *m += probs[i] * c;
        }
    }
    let total: f64 = order.iter().map(|&b| amount[b]).sum();
    let mut clusters: Vec<PhaseCluster> = order
        .into_iter()
        .filter(|&b| amount[b] > 0.0)
        .map(|b| {
            // report the most probable state of the merged basin
            let peak = (0..n)
                .filter(|&i| peak_of(&mut parent, i) == b)
                .fold(b, |best, i| if higher(probs, i, best) { i } else { best });
            PhaseCluster {
                composition: moment[b].iter().map(|m| m / amount[b]).collect(),
                amount: amount[b] / total,
                peak,
            }
        })
        .collect();
    clusters.sort_by_key(|c| c.peak);
    Ok(clusters)
}
