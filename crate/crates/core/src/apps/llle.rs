//! Three-liquid-phase splits on the ternary simplex.

use serde::{Deserialize, Serialize};

use crate::enumerate::{enumerate_groups, StateGroup};
use crate::error::{Error, Result};
use crate::gibbs::SymmetricTernaryModel;
use crate::grid::SimplexGrid;
use crate::solver::{
    beta_from_tau, cluster_phases, formulation1_states, formulation2_distribution,
    formulation2_marginals, group_energies, PhaseCluster, DEFAULT_MIN_AMOUNT,
};

pub const DEFAULT_LLLE_TAU: f64 = 0.002;
pub const DEFAULT_LLLE_RESOLUTION: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlleMethod {
    /// Per-state weights with mass-balance multipliers.
    Formulation1,
    /// Weights over feasible groups of up to three states.
    Formulation2,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlleResult {
    #[serde(rename = "A")]
    pub a: f64,
    pub z: Vec<f64>,
    pub resolution: usize,
    pub tau: f64,
    pub method: LlleMethod,
    pub n_phases: usize,
    pub phases: Vec<PhaseCluster>,
    /// Largest `|Σ amount·composition - z|` over components.
    pub mass_balance_residual: f64,
    pub alpha: Option<Vec<f64>>,
}

/// Checks an interior ternary feed.
pub fn check_feed(z: &[f64]) -> Result<()> {
    if z.len() != 3 {
        return Err(Error::LengthMismatch {
            expected: 3,
            actual: z.len(),
        });
    }
    crate::gibbs::ideal_mixing(z).map(|_| ())
}

pub fn solve_llle(
    model: &SymmetricTernaryModel,
    z: &[f64],
    grid: &SimplexGrid,
    tau: f64,
    method: LlleMethod,
    group_budget: u128,
) -> Result<LlleResult> {
    check_feed(z)?;
    if grid.n_components() != 3 {
        return Err(Error::LengthMismatch {
            expected: 3,
            actual: grid.n_components(),
        });
    }
    let beta = beta_from_tau(tau)?;
    let g: Vec<f64> = grid
        .points()
        .iter()
        .map(|p| model.gmix(p))
        .collect::<Result<_>>()?;
    let (probs, alpha) = match method {
        LlleMethod::Formulation1 => {
            let d = formulation1_states(grid.points(), &g, z, beta)?;
            (d.probs, d.alpha)
        }
        LlleMethod::Formulation2 => {
            let classes = enumerate_groups(grid, z, 3, group_budget)?;
            let groups: Vec<StateGroup> = classes.into_iter().flatten().collect();
            let e = group_energies(&groups, &g);
            let d = formulation2_distribution(&e, beta)?;
            (formulation2_marginals(&groups, &d.probs, grid.len())?, None)
        }
    };
    let phases = cluster_phases(&probs, grid, DEFAULT_MIN_AMOUNT)?;
    let mass_balance_residual = (0..3)
        .map(|c| {
            let m: f64 = phases.iter().map(|p| p.amount * p.composition[c]).sum();
            (m - z[c]).abs()
        })
        .fold(0.0, f64::max);
    Ok(LlleResult {
        a: model.a,
        z: z.to_vec(),
        resolution: grid.resolution(),
        tau,
        method,
        n_phases: phases.len(),
        phases,
        mass_balance_residual,
        alpha,
    })
}
