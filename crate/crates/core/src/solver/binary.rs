//! Binary phase split: hard minimum over lever-averaged pair energies in the
//! forward pass, Boltzmann-weighted soft estimates for gradients.

use serde::Serialize;

use crate::enumerate::{lever_rule, CandidatePair};
use crate::error::{invalid, Error, Result};
use crate::gibbs::GeModel;
use crate::grid::{augment_with_feed, AugmentedGrid, CompositionGrid};

/// Energy offset that makes the homogeneous state win exact ties.
pub const DEFAULT_EPS_TIE: f64 = 1e-9;

/// Probabilities below this are flushed to zero.
pub const PROB_FLUSH: f64 = 1e-300;

/// Lever-averaged energy of one candidate pair; `+∞` when infeasible.
pub fn pair_energy(pair: &CandidatePair, g: &[f64], eps_tie: f64) -> f64 {
    if !pair.feasible {
        return f64::INFINITY;
    }
    if pair.i == pair.j {
        return g[pair.i] - eps_tie;
    }
    pair.phi_i * g[pair.i] + pair.phi_j * g[pair.j]
}

/// Position of the smallest finite energy, earliest on ties. Returns `None`
/// when no entry is finite.
pub fn hard_argmin(energies: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &e) in energies.iter().enumerate() {
        if !e.is_finite() {
            continue;
        }
        match best {
            Some((_, b)) if e >= b => {}
            _ => best = Some((k, e)),
        }
    }
    best.map(|(k, _)| k)
}

/// `exp(-e/τ)` normalized with max-shift; infinite energies get exactly 0.
pub fn softmax_probs(energies: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_tau(tau)?;
    let emin = energies
        .iter()
        .copied()
        .filter(|e| e.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !emin.is_finite() {
        return Err(Error::EmptyInput("finite energies"));
    }
    let mut p: Vec<f64> = energies
        .iter()
        .map(|&e| {
            if e.is_finite() {
                (-(e - emin) / tau).exp()
            } else {
                0.0
            }
        })
        .collect();
    normalize_flush(&mut p);
    Ok(p)
}

/// Normalizes non-negative weights to sum one, flushing tiny entries.
pub(crate) fn normalize_flush(p: &mut [f64]) {
    let s: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v /= s;
        if *v < PROB_FLUSH {
            *v = 0.0;
        }
    }
    let s: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v /= s;
    }
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(invalid(
            "tau",
            format!("must be positive and finite, got {tau}"),
        ))
    }
}

/// Energies of the mass-balance-feasible pairs on an augmented grid.
///
/// Only the block `i ≤ f ≤ j` (with `f` the feed index) is stored, row-major
/// in `i` then `j`, which is lexicographic order of the pairs. Every pair
/// outside the block is infeasible and carries zero probability.
#[derive(Debug, Clone)]
pub struct PairTable {
    points: Vec<f64>,
    feed_index: usize,
    phi_hi: Vec<f64>,
    energies: Vec<f64>,
}

impl PairTable {
    pub fn new(grid: &AugmentedGrid, g: &[f64], eps_tie: f64) -> Result<Self> {
        if g.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                actual: g.len(),
            });
        }
        let x = grid.points();
        let f = grid.feed_index();
        let z = grid.feed();
        let n = x.len();
        let width = n - f;
        let mut phi_hi = Vec::with_capacity((f + 1) * width);
        let mut energies = Vec::with_capacity((f + 1) * width);
        for i in 0..=f {
            for j in f..n {
                let (phi_i, phi_j) = lever_rule(x[i], x[j], z);
                let pair = CandidatePair {
                    i,
                    j,
                    phi_i,
                    phi_j,
                    feasible: true,
                };
                phi_hi.push(phi_j);
                energies.push(pair_energy(&pair, g, eps_tie));
            }
        }
        Ok(Self {
            points: x.to_vec(),
            feed_index: f,
            phi_hi,
            energies,
        })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn feed_index(&self) -> usize {
        self.feed_index
    }

    fn width(&self) -> usize {
        self.points.len() - self.feed_index
    }

    /// Grid indices `(i, j)` of the k-th stored pair.
    #[inline]
    pub fn indices(&self, k: usize) -> (usize, usize) {
        let w = self.width();
        (k / w, self.feed_index + k % w)
    }

    /// Lever-rule fractions `(φ_i, φ_j)` of the k-th stored pair.
    #[inline]
    pub fn fractions(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.indices(k);
        if i == j {
            (1.0, 0.0)
        } else {
            (1.0 - self.phi_hi[k], self.phi_hi[k])
        }
    }

    /// Lower and upper compositions of every stored pair.
    pub fn pair_compositions(&self) -> (Vec<f64>, Vec<f64>) {
        (0..self.len())
            .map(|k| {
                let (i, j) = self.indices(k);
                (self.points[i], self.points[j])
            })
            .unzip()
    }

    /// `∂e/∂θ = φ_i ∂g_i/∂θ + φ_j ∂g_j/∂θ` for every stored pair, flattened
    /// row-major with `n_params` columns. `point_grads` holds `∂g/∂θ` per
    /// grid point in the same layout.
    pub fn pair_param_grads(&self, point_grads: &[f64], n_params: usize) -> Result<Vec<f64>> {
        let expected = self.points.len() * n_params;
        if point_grads.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: point_grads.len(),
            });
        }
        let mut out = vec![0.0; self.len() * n_params];
        for k in 0..self.len() {
            let (i, j) = self.indices(k);
            let (pi, pj) = self.fractions(k);
            let row = &mut out[k * n_params..(k + 1) * n_params];
            let gi = &point_grads[i * n_params..(i + 1) * n_params];
            let gj = &point_grads[j * n_params..(j + 1) * n_params];
            for t in 0..n_params {
                row[t] = pi * gi[t] + pj * gj[t];
            }
        }
        Ok(out)
    }
}

/// `(Σ p x_i, Σ p x_j)` over pairs.
pub fn soft_estimates(probs: &[f64], table: &PairTable) -> Result<(f64, f64)> {
    if probs.len() != table.len() {
        return Err(Error::LengthMismatch {
            expected: table.len(),
            actual: probs.len(),
        });
    }
    let x = table.points();
    let mut lo = 0.0;
    let mut hi = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let (i, j) = table.indices(k);
        lo += p * x[i];
        hi += p * x[j];
    }
    Ok((lo, hi))
}

/// Gradients of the soft estimates with respect to model parameters:
/// `∂x_soft/∂θ = -(1/τ) Cov_p(x, ∂e/∂θ)`.
///
/// `pair_grads` is row-major with `n_params` columns, one row per pair;
/// `x_lo`/`x_hi` are the pair compositions.
pub fn st_param_gradient(
    probs: &[f64],
    pair_grads: &[f64],
    n_params: usize,
    x_lo: &[f64],
    x_hi: &[f64],
    tau: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_tau(tau)?;
    let m = probs.len();
    for (len, expected) in [
        (pair_grads.len(), m * n_params),
        (x_lo.len(), m),
        (x_hi.len(), m),
    ] {
        if len != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: len,
            });
        }
    }
    let mean_lo: f64 = probs.iter().zip(x_lo).map(|(p, x)| p * x).sum();
    let mean_hi: f64 = probs.iter().zip(x_hi).map(|(p, x)| p * x).sum();
    let mut d_lo = vec![0.0; n_params];
    let mut d_hi = vec![0.0; n_params];
    // centring x first keeps the covariance accurate when p is concentrated
    for k in 0..m {
        let p = probs[k];
        if p == 0.0 {
            continue;
        }
        let a = p * (x_lo[k] - mean_lo);
        let b = p * (x_hi[k] - mean_hi);
        let row = &pair_grads[k * n_params..(k + 1) * n_params];
        for t in 0..n_params {
            d_lo[t] += a * row[t];
            d_hi[t] += b * row[t];
        }
    }
    for v in d_lo.iter_mut().chain(d_hi.iter_mut()) {
        *v /= -tau;
    }
    Ok((d_lo, d_hi))
}

/// Outcome of one binary solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub z: f64,
    #[serde(rename = "x_lo")]
    pub x_hard_lo: f64,
    #[serde(rename = "x_hi")]
    pub x_hard_hi: f64,
    pub x_soft_lo: f64,
    pub x_soft_hi: f64,
    pub phi_lo: f64,
    pub phi_hi: f64,
    pub is_split: bool,
    #[serde(skip)]
    pub min_energy: f64,
    pub tau: f64,
    pub grid_n: usize,
}

/// Full state of a binary solve, kept for gradient assembly.
#[derive(Debug, Clone)]
pub struct BinarySolve {
    pub table: PairTable,
    pub probs: Vec<f64>,
    /// Position of the hard minimum in the pair table.
    pub argmin: usize,
    pub result: EquilibriumResult,
}

/// Solves on an augmented grid given the curve values `g` at its points.
/// `grid_n` is only recorded in the result.
pub fn solve_on_curve(
    grid: &AugmentedGrid,
    g: &[f64],
    tau: f64,
    eps_tie: f64,
    grid_n: usize,
) -> Result<BinarySolve> {
    check_tau(tau)?;
    if !(eps_tie >= 0.0) {
        return Err(invalid("eps_tie", "must be non-negative"));
    }
    if let Some(bad) = g.iter().find(|v| !v.is_finite()) {
        return Err(invalid("gibbs curve", format!("non-finite value {bad}")));
    }
    let table = PairTable::new(grid, g, eps_tie)?;
    let argmin = hard_argmin(table.energies()).ok_or(Error::EmptyInput("feasible pairs"))?;
    let probs = softmax_probs(table.energies(), tau)?;
    let (x_soft_lo, x_soft_hi) = soft_estimates(&probs, &table)?;
    let (i, j) = table.indices(argmin);
    let x = grid.points();
    let z = grid.feed();
    let is_split = i != j;
    let (phi_lo, phi_hi) = if is_split {
        table.fractions(argmin)
    } else {
        (1.0, 0.0)
    };
    let result = EquilibriumResult {
        z,
        x_hard_lo: x[i],
        x_hard_hi: x[j],
        x_soft_lo,
        x_soft_hi,
        phi_lo,
        phi_hi,
        is_split,
        min_energy: table.energies()[argmin],
        tau,
        grid_n,
    };
    Ok(BinarySolve {
        table,
        probs,
        argmin,
        result,
    })
}

/// Augments `grid` with `z`, evaluates the model and solves.
pub fn solve_binary_full(
    model: &GeModel,
    z: f64,
    grid: &CompositionGrid,
    tau: f64,
    eps_tie: f64,
) -> Result<BinarySolve> {
    model.validate()?;
    check_tau(tau)?;
    let aug = augment_with_feed(grid, z)?;
    let g: Vec<f64> = aug.points().iter().map(|&x| model.gmix(x)).collect();
    solve_on_curve(&aug, &g, tau, eps_tie, grid.len())
}

pub fn solve_binary(
    model: &GeModel,
    z: f64,
    grid: &CompositionGrid,
    tau: f64,
    eps_tie: f64,
) -> Result<EquilibriumResult> {
    solve_binary_full(model, z, grid, tau, eps_tie).map(|s| s.result)
}
