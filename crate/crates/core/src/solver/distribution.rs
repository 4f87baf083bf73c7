//! Probability distributions over discrete states.
//!
//! Formulation 1 weights every grid state by `exp(α·x + β g)` with the
//! multipliers `α` fixed by the feed mass balance. Formulation 2 weights
//! mass-balance-feasible groups of states by `exp(β Σ φ g)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::binary::normalize_flush;
use crate::enumerate::StateGroup;
use crate::error::{invalid, Error, Result};

/// Largest multiplier magnitude tried while bracketing.
pub const ALPHA_LIMIT: f64 = 1e6;

/// Target mass-balance residual.
pub const BALANCE_TOL: f64 = 1e-12;

pub const NEWTON_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateDistribution {
    pub probs: Vec<f64>,
    /// Mass-balance multipliers (Formulation 1 only).
    pub alpha: Option<Vec<f64>>,
    pub beta: f64,
}

fn check_beta(beta: f64) -> Result<()> {
    if beta < 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(invalid(
            "beta",
            format!("must be negative and finite, got {beta}"),
        ))
    }
}

/// `β = -1/τ`.
pub fn beta_from_tau(tau: f64) -> Result<f64> {
    super::binary::check_tau(tau)?;
    Ok(-1.0 / tau)
}

/// Normalized `exp(logw)` with max-shift.
fn boltzmann(logw: &[f64]) -> Vec<f64> {
    let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logw.iter().map(|&l| (l - m).exp()).collect();
    normalize_flush(&mut p);
    p
}

fn binary_weights(x: &[f64], g: &[f64], beta: f64, alpha: f64) -> Vec<f64> {
    let logw: Vec<f64> = x
        .iter()
        .zip(g)
        .map(|(&xi, &gi)| alpha * xi + beta * gi)
        .collect();
    boltzmann(&logw)
}

fn mean_var(p: &[f64], x: &[f64]) -> (f64, f64) {
    let m: f64 = p.iter().zip(x).map(|(a, b)| a * b).sum();
    let v: f64 = p.iter().zip(x).map(|(a, b)| a * (b - m) * (b - m)).sum();
    (m, v)
}

/// Formulation 1 on a binary grid.
///
/// `F(α) = Σ p_i x_i - z` is nondecreasing in `α`; the root is bracketed by
/// doubling from `[-1, 1]`, bisected to `|F| < 1e-12` and polished with two
/// Newton steps.
pub fn formulation1_binary(x: &[f64], g: &[f64], z: f64, beta: f64) -> Result<StateDistribution> {
    check_beta(beta)?;
    if x.is_empty() {
        return Err(Error::EmptyInput("grid points"));
    }
    if x.len() != g.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: g.len(),
        });
    }
    let f = |a: f64| {
        let p = binary_weights(x, g, beta, a);
        mean_var(&p, x).0 - z
    };
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while f(lo) > 0.0 {
        lo *= 2.0;
        if lo < -ALPHA_LIMIT {
            return Err(Error::RootNotBracketed {
                feed: z,
                limit: ALPHA_LIMIT,
            });
        }
    }
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > ALPHA_LIMIT {
            return Err(Error::RootNotBracketed {
                feed: z,
                limit: ALPHA_LIMIT,
            });
        }
    }
    let mut alpha = 0.5 * (lo + hi);
    let mut fa = f(alpha);
    while fa.abs() >= BALANCE_TOL {
        if fa < 0.0 {
            lo = alpha;
        } else {
            hi = alpha;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        alpha = mid;
        fa = f(alpha);
    }
    for _ in 0..2 {
        let p = binary_weights(x, g, beta, alpha);
        let (m, v) = mean_var(&p, x);
        if v <= 0.0 {
            break;
        }
        let cand = alpha - (m - z) / v;
        let fc = f(cand);
        if fc.abs() < fa.abs() {
            alpha = cand;
            fa = fc;
        }
    }
    Ok(StateDistribution {
        probs: binary_weights(x, g, beta, alpha),
        alpha: Some(vec![alpha]),
        beta,
    })
}

/// Formulation 1 on n-component states (`points[i]` full composition
/// vectors). The `n-1` multipliers come from damped Newton on the
/// independent mass balances, with Jacobian `Cov_p(x)`.
pub fn formulation1_states(
    points: &[Vec<f64>],
    g: &[f64],
    z: &[f64],
    beta: f64,
) -> Result<StateDistribution> {
    check_beta(beta)?;
    if points.is_empty() {
        return Err(Error::EmptyInput("grid points"));
    }
    if points.len() != g.len() {
        return Err(Error::LengthMismatch {
            expected: points.len(),
            actual: g.len(),
        });
    }
    let n = z.len();
    if n < 2 {
        return Err(Error::InvalidComposition(
            "need at least 2 components".into(),
        ));
    }
    if let Some(bad) = points.iter().find(|p| p.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: bad.len(),
        });
    }
    let d = n - 1;
    let weights = |alpha: &[f64]| {
        let logw: Vec<f64> = points
            .iter()
            .zip(g)
            .map(|(p, &gi)| beta * gi + (0..d).map(|c| alpha[c] * p[c]).sum::<f64>())
            .collect();
        boltzmann(&logw)
    };
    let residual = |p: &[f64]| -> Vec<f64> {
        (0..d)
            .map(|c| p.iter().zip(points).map(|(w, x)| w * x[c]).sum::<f64>() - z[c])
            .collect()
    };
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut alpha = vec![0.0; d];
    let mut p = weights(&alpha);
    let mut r = residual(&p);
    let mut rn = norm(&r);
    let mut iter = 0;
    while rn >= BALANCE_TOL {
        if iter == NEWTON_MAX_ITER {
            return Err(Error::NewtonFailed {
                iterations: iter,
                residual: rn,
            });
        }
        iter += 1;
        let mean: Vec<f64> = (0..d).map(|c| r[c] + z[c]).collect();
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for (w, x) in p.iter().zip(points) {
            if *w == 0.0 {
                continue;
            }
            for a in 0..d {
                let da = x[a] - mean[a];
                for b in 0..d {
                    cov[(a, b)] += w * da * (x[b] - mean[b]);
                }
            }
        }
        let rhs = DVector::from_iterator(d, r.iter().map(|v| -v));
        let step = cov
            .clone()
            .cholesky()
            .map(|c| c.solve(&rhs))
            .or_else(|| cov.lu().solve(&rhs))
            .ok_or(Error::NewtonFailed {
                iterations: iter,
                residual: rn,
            })?;
        // backtrack on the residual norm
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = alpha
                .iter()
                .zip(step.iter())
                .map(|(a, s)| a + t * s)
                .collect();
            let pc = weights(&cand);
            let rc = residual(&pc);
            let nc = norm(&rc);
            if nc < rn {
                alpha = cand;
                p = pc;
                r = rc;
                rn = nc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonFailed {
                iterations: iter,
                residual: rn,
            });
        }
    }
    Ok(StateDistribution {
        probs: p,
        alpha: Some(alpha),
        beta,
    })
}

/// `Σ φ g` for every group.
pub fn group_energies(groups: &[StateGroup], g: &[f64]) -> Vec<f64> {
    groups
        .iter()
        .map(|s| s.indices.iter().zip(&s.phi).map(|(&i, p)| p * g[i]).sum())
        .collect()
}

/// Formulation 2: `p_m ∝ exp(β g_m)` over groups.
pub fn formulation2_distribution(group_energies: &[f64], beta: f64) -> Result<StateDistribution> {
    check_beta(beta)?;
    if group_energies.is_empty() {
        return Err(Error::EmptyInput("group classes"));
    }
    let logw: Vec<f64> = group_energies.iter().map(|&e| beta * e).collect();
    Ok(StateDistribution {
        probs: boltzmann(&logw),
        alpha: None,
        beta,
    })
}

/// State marginals induced by group weights: `q_i = Σ_m p_m φ_{m,i}`.
pub fn formulation2_marginals(
    groups: &[StateGroup],
    probs: &[f64],
    n_states: usize,
) -> Result<Vec<f64>> {
    if groups.len() != probs.len() {
        return Err(Error::LengthMismatch {
            expected: groups.len(),
            actual: probs.len(),
        });
    }
    let mut q = vec![0.0; n_states];
    for (s, &p) in groups.iter().zip(probs) {
        for (&i, &phi) in s.indices.iter().zip(&s.phi) {
            q[i] += p * phi;
        }
    }
    Ok(q)
}

/// `½ Σ |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `Σ_k p_k(z) g_k` for every feed in `zs`, with Formulation 1 weights.
pub fn reconstruct_gmix_expectation(
    x: &[f64],
    g: &[f64],
    zs: &[f64],
    beta: f64,
) -> Result<Vec<f64>> {
    zs.par_iter()
        .map(|&z| {
            let d = formulation1_binary(x, g, z, beta)?;
            Ok(d.probs.iter().zip(g).map(|(p, gi)| p * gi).sum())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{enumerate_groups, DEFAULT_GROUP_BUDGET};
    use crate::gibbs::{eval_curve, GeModel};
    use crate::grid::make_uniform_grid;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn margules_curve(a: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let grid = make_uniform_grid(n, 1e-8).unwrap();
        let g = eval_curve(&GeModel::margules(a), grid.points())
            .unwrap()
            .values;
        (grid.points().to_vec(), g)
    }

    fn local_maxima(p: &[f64]) -> Vec<usize> {
        (1..p.len() - 1)
            .filter(|&i| p[i] > p[i - 1] && p[i] >= p[i + 1])
            .collect()
    }

    #[test]
    fn symmetric_curve_gives_zero_multiplier() {
        let (x, g) = margules_curve(2.5, 101);
        let d = formulation1_binary(&x, &g, 0.5, -1.0 / 0.05).unwrap();
        assert!(d.alpha.as_ref().unwrap()[0].abs() < 1e-8);
        let n = x.len();
        for i in 0..n {
            assert_abs_diff_eq!(d.probs[i], d.probs[n - 1 - i], epsilon = 1e-9);
        }
    }

    #[test]
    fn bimodal_inside_gap_unimodal_outside() {
        let (x, g) = margules_curve(2.5, 500);
        let beta = -1.0 / 0.005;
        let d = formulation1_binary(&x, &g, 0.5, beta).unwrap();
        let peaks = local_maxima(&d.probs);
        assert_eq!(peaks.len(), 2);
        let m: f64 = d.probs.iter().zip(&x).map(|(p, v)| p * v).sum();
        assert!((m - 0.5).abs() < 1e-10);

        let d = formulation1_binary(&x, &g, 0.97, beta).unwrap();
        assert_eq!(local_maxima(&d.probs).len(), 1);
        let m: f64 = d.probs.iter().zip(&x).map(|(p, v)| p * v).sum();
        assert!((m - 0.97).abs() < 1e-10);
    }

    #[test]
    fn unreachable_feed_is_not_bracketed() {
        let x = [0.2, 0.4, 0.6];
        let g = [0.0, 0.0, 0.0];
        assert!(matches!(
            formulation1_binary(&x, &g, 0.9, -1.0),
            Err(Error::RootNotBracketed { .. })
        ));
        assert!(formulation1_binary(&x, &g, 0.5, 1.0).is_err());
    }

    #[test]
    fn ternary_newton_balances_feed() {
        let grid = crate::grid::make_simplex_grid(3, 20).unwrap();
        let m = crate::gibbs::SymmetricTernaryModel::new(1.0);
        let g: Vec<f64> = grid.points().iter().map(|p| m.gmix(p).unwrap()).collect();
        let z = [0.5, 0.3, 0.2];
        let d = formulation1_states(grid.points(), &g, &z, -1.0 / 0.05).unwrap();
        for c in 0..3 {
            let m: f64 = d
                .probs
                .iter()
                .zip(grid.points())
                .map(|(p, x)| p * x[c])
                .sum();
            assert!((m - z[c]).abs() < 1e-10);
        }
    }

    #[test]
    fn formulation2_examples() {
        let d = formulation2_distribution(&[-0.3, -0.3], -20.0).unwrap();
        assert_eq!(d.probs, vec![0.5, 0.5]);
        let d = formulation2_distribution(&[-0.7], -20.0).unwrap();
        assert_eq!(d.probs, vec![1.0]);
        assert!(formulation2_distribution(&[], -1.0).is_err());
    }

    #[test]
    fn formulation2_marginals_conserve_feed() {
        let grid = make_uniform_grid(41, 1e-8).unwrap();
        let aug = crate::grid::augment_with_feed(&grid, 0.5).unwrap();
        let g = eval_curve(&GeModel::margules(2.5), aug.points())
            .unwrap()
            .values;
        let classes = enumerate_groups(&aug, &[0.5], 2, DEFAULT_GROUP_BUDGET).unwrap();
        let groups: Vec<StateGroup> = classes.into_iter().flatten().collect();
        let e = group_energies(&groups, &g);
        let d = formulation2_distribution(&e, -1.0 / 0.01).unwrap();
        let q = formulation2_marginals(&groups, &d.probs, aug.len()).unwrap();
        assert_abs_diff_eq!(q.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let m: f64 = q.iter().zip(aug.points()).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(m, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn reconstruction_of_ideal_curve_is_close() {
        let (x, g) = margules_curve(0.0, 201);
        let zs: Vec<f64> = (1..20).map(|k| k as f64 * 0.05).collect();
        let tau = 0.001;
        let r = reconstruct_gmix_expectation(&x, &g, &zs, -1.0 / tau).unwrap();
        for (z, v) in zs.iter().zip(&r) {
            let exact = GeModel::Ideal.gmix(*z);
            assert!((v - exact).abs() < 10.0 * tau, "z={z}: {v} vs {exact}");
        }
    }

    #[test]
    fn reconstruction_error_grows_with_tau() {
        let (x, g) = margules_curve(2.5, 401);
        let zs: Vec<f64> = (1..10).map(|k| 0.02 * k as f64).collect();
        let dev = |tau: f64| {
            let r = reconstruct_gmix_expectation(&x, &g, &zs, -1.0 / tau).unwrap();
            zs.iter()
                .zip(&r)
                .map(|(z, v)| (v - GeModel::margules(2.5).gmix(*z)).abs())
                .fold(0.0f64, f64::max)
        };
        assert!(dev(0.05) > dev(0.0005));
    }

    proptest! {
        #[test]
        fn mass_balance_is_monotone_in_alpha(
            g in proptest::collection::vec(-1.0f64..1.0, 5..30),
            a0 in -50.0f64..50.0,
            da in 0.0f64..20.0,
        ) {
            let n = g.len();
            let x: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
            let m0 = mean_var(&binary_weights(&x, &g, -3.0, a0), &x).0;
            let m1 = mean_var(&binary_weights(&x, &g, -3.0, a0 + da), &x).0;
            prop_assert!(m1 >= m0 - 1e-12);
        }
    }
}
