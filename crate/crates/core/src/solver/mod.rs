//! Hard/soft binary equilibrium solver, state distributions and phase
//! clustering.

pub mod binary;
pub mod cluster;
pub mod distribution;

pub use binary::{
    hard_argmin, pair_energy, soft_estimates, softmax_probs, solve_binary, solve_binary_full,
    solve_on_curve, st_param_gradient, BinarySolve, EquilibriumResult, PairTable, DEFAULT_EPS_TIE,
};
pub use cluster::{cluster_phases, PhaseCluster, DEFAULT_MIN_AMOUNT};
pub use distribution::{
    beta_from_tau, formulation1_binary, formulation1_states, formulation2_distribution,
    formulation2_marginals, group_energies, reconstruct_gmix_expectation, total_variation,
    StateDistribution,
};
