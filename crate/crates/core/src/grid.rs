//! Discrete composition grids.
//!
//! Binary systems use a strictly increasing set of mole fractions in the
//! open interval (0, 1); the equilibrium solver works on that set augmented
//! with the feed composition. Multicomponent systems use an interior lattice
//! of the composition simplex.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Points closer than this are treated as the same grid node.
pub const DEDUP_TOL: f64 = 1e-12;

/// Default distance of the first and last grid node from the pure components.
pub const DEFAULT_EPS: f64 = 1e-8;

/// Strictly increasing mole fractions of component 1, all in (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionGrid {
    points: Vec<f64>,
}

impl CompositionGrid {
    /// Builds a grid from arbitrary points after checking they are interior
    /// and strictly increasing.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("grid points"));
        }
        for &x in &points {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::CompositionOutOfRange { value: x });
            }
        }
        check_increasing(&points)?;
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn check_increasing(points: &[f64]) -> Result<()> {
    for w in points.windows(2) {
        if !(w[1] - w[0] > DEDUP_TOL) {
            return Err(Error::InvalidGrid(format!(
                "points must be strictly increasing, found {} followed by {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// `n_points` equally spaced mole fractions on `[eps, 1 - eps]`.
pub fn make_uniform_grid(n_points: usize, eps: f64) -> Result<CompositionGrid> {
    if n_points < 2 {
        return Err(invalid(
            "n_points",
            format!("need at least 2, got {n_points}"),
        ));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(invalid("eps", format!("must lie in (0, 0.5), got {eps}")));
    }
    let step = (1.0 - 2.0 * eps) / (n_points - 1) as f64;
    // built from both ends so the grid is mirror-symmetric about 0.5
    let last = n_points - 1;
    let points: Vec<f64> = (0..n_points)
        .map(|k| {
            if 2 * k == last {
                0.5
            } else if 2 * k < last {
                eps + k as f64 * step
            } else {
                1.0 - (eps + (last - k) as f64 * step)
            }
        })
        .collect();
    Ok(CompositionGrid { points })
}

/// Grid augmented with the feed composition.
///
/// The points need not be mole fractions: the vapor-pressure application
/// uses the same structure over reduced molar volumes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AugmentedGrid {
    points: Vec<f64>,
    feed_index: usize,
}

impl AugmentedGrid {
    /// Merges `feed` into an increasing point set. A feed within
    /// [`DEDUP_TOL`] of an existing node replaces that node.
    pub fn with_feed(points: &[f64], feed: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("grid points"));
        }
        if !feed.is_finite() || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGrid("non-finite point or feed".into()));
        }
        check_increasing(points)?;
        let pos = points.partition_point(|&p| p < feed);
        let near = |k: usize| k < points.len() && (points[k] - feed).abs() <= DEDUP_TOL;
        // a node within tolerance is moved onto the feed exactly
        for k in [pos, pos.wrapping_sub(1)] {
            if near(k) {
                let mut moved = points.to_vec();
                moved[k] = feed;
                return Ok(Self {
                    points: moved,
                    feed_index: k,
                });
            }
        }
        let mut merged = Vec::with_capacity(points.len() + 1);
        merged.extend_from_slice(&points[..pos]);
        merged.push(feed);
        merged.extend_from_slice(&points[pos..]);
        Ok(Self {
            points: merged,
            feed_index: pos,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn feed_index(&self) -> usize {
        self.feed_index
    }

    /// The feed composition.
    pub fn feed(&self) -> f64 {
        self.points[self.feed_index]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `X' = X ∪ {z}` for a composition grid.
pub fn augment_with_feed(grid: &CompositionGrid, z: f64) -> Result<AugmentedGrid> {
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::CompositionOutOfRange { value: z });
    }
    AugmentedGrid::with_feed(grid.points(), z)
}

/// Interior lattice of the composition simplex: every point is `parts / R`
/// with `parts` a composition of `R` into `n` positive integers.
#[derive(Debug, Clone)]
pub struct SimplexGrid {
    n_components: usize,
    resolution: usize,
    points: Vec<Vec<f64>>,
    lattice: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl SimplexGrid {
    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Integer lattice coordinates of point `i` (they sum to the resolution).
    pub fn lattice_point(&self, i: usize) -> &[u32] {
        &self.lattice[i]
    }

    pub fn index_of(&self, parts: &[u32]) -> Option<usize> {
        self.index.get(parts).copied()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Lattice spacing `1 / R`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.resolution as f64
    }
}

pub fn make_simplex_grid(n_components: usize, resolution: usize) -> Result<SimplexGrid> {
    if n_components < 2 {
        return Err(invalid(
            "n_components",
            format!("need at least 2, got {n_components}"),
        ));
    }
    if resolution < n_components {
        return Err(invalid(
            "resolution",
            format!("must be at least n_components = {n_components}, got {resolution}"),
        ));
    }
    let mut lattice = Vec::new();
    let mut parts = vec![0u32; n_components];
    compositions(resolution as u32, 0, &mut parts, &mut lattice);
    let r = resolution as f64;
    let points = lattice
        .iter()
        .map(|p| p.iter().map(|&k| k as f64 / r).collect())
        .collect();
    let index = lattice
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), i))
        .collect();
    Ok(SimplexGrid {
        n_components,
        resolution,
        points,
        lattice,
        index,
    })
}

// Lexicographic enumeration of compositions of `remaining` into the parts
// from `slot` onwards, each part >= 1.
fn compositions(remaining: u32, slot: usize, parts: &mut [u32], out: &mut Vec<Vec<u32>>) {
    let n = parts.len();
    if slot == n - 1 {
        parts[slot] = remaining;
        out.push(parts.to_vec());
        return;
    }
    let reserve = (n - slot - 1) as u32;
    for k in 1..=remaining - reserve {
        parts[slot] = k;
        compositions(remaining - k, slot + 1, parts, out);
    }
}

/// Ternary grid built as the tensor product of two axes with
/// `points_per_axis` equally spaced values on [0, 1] (spacing computed as
/// `1 / (m - 1)`, last value exactly 1), keeping pairs with `x1 + x2 <= 1`
/// in floating point. The third coordinate is `1 - x1 - x2`.
///
/// Boundary points are included, so this set is only suitable for
/// reproducing point counts of that convention; `points_per_axis = 100`
/// yields 5044 points because rounding drops six anti-diagonal pairs.
pub fn axis_product_grid(points_per_axis: usize) -> Result<Vec<[f64; 3]>> {
    if points_per_axis < 2 {
        return Err(invalid(
            "points_per_axis",
            format!("need at least 2, got {points_per_axis}"),
        ));
    }
    let step = 1.0 / (points_per_axis - 1) as f64;
    let axis: Vec<f64> = (0..points_per_axis)
        .map(|k| {
            if k == points_per_axis - 1 {
                1.0
            } else {
                k as f64 * step
            }
        })
        .collect();
    let mut out = Vec::new();
    for &x2 in &axis {
        for &x1 in &axis {
            if x1 + x2 <= 1.0 {
                out.push([x1, x2, 1.0 - x1 - x2]);
            }
        }
    }
    Ok(out)
}

/// A discrete state set with coordinates and an adjacency structure, used
/// for clustering state distributions into phases.
pub trait StateSpace {
    fn n_states(&self) -> usize;

    /// Coordinates of state `i`: the mole fraction of component 1 for binary
    /// grids, the full composition vector for simplex grids.
    fn coords(&self, i: usize) -> &[f64];

    fn neighbors(&self, i: usize, out: &mut Vec<usize>);
}

fn line_neighbors(n: usize, i: usize, out: &mut Vec<usize>) {
    out.clear();
    if i > 0 {
        out.push(i - 1);
    }
    if i + 1 < n {
        out.push(i + 1);
    }
}

impl StateSpace for CompositionGrid {
    fn n_states(&self) -> usize {
        self.points.len()
    }

    fn coords(&self, i: usize) -> &[f64] {
        std::slice::from_ref(&self.points[i])
    }

    fn neighbors(&self, i: usize, out: &mut Vec<usize>) {
        line_neighbors(self.points.len(), i, out);
    }
}

impl StateSpace for AugmentedGrid {
    fn n_states(&self) -> usize {
        self.points.len()
    }

    fn coords(&self, i: usize) -> &[f64] {
        std::slice::from_ref(&self.points[i])
    }

    fn neighbors(&self, i: usize, out: &mut Vec<usize>) {
        line_neighbors(self.points.len(), i, out);
    }
}

impl StateSpace for SimplexGrid {
    fn n_states(&self) -> usize {
        self.points.len()
    }

    fn coords(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// Lattice neighbours: move one unit from one component to another.
    fn neighbors(&self, i: usize, out: &mut Vec<usize>) {
        out.clear();
        let mut probe = self.lattice[i].clone();
        let n = self.n_components;
        for from in 0..n {
            for to in 0..n {
                if from == to || probe[from] <= 1 {
                    continue;
                }
                probe[from] -= 1;
                probe[to] += 1;
                if let Some(&j) = self.index.get(&probe) {
                    out.push(j);
                }
                probe[from] += 1;
                probe[to] -= 1;
            }
        }
    }
}
