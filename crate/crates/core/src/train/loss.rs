//! Training losses and their parameter gradients.

use rayon::prelude::*;

use super::config::FitConfig;
use crate::error::{Error, Result};
use crate::gibbs::GeModel;
use crate::grid::{make_uniform_grid, CompositionGrid, DEFAULT_EPS};
use crate::io::Label;
use crate::solver::{solve_binary_full, st_param_gradient};

/// `(x̂' - x'*)² + (x̂'' - x''*)²`.
pub fn direct_loss(pred: (f64, f64), target: (f64, f64)) -> f64 {
    let a = pred.0 - target.0;
    let b = pred.1 - target.1;
    a * a + b * b
}

/// Hinge penalties on curvature: convex at both phase compositions,
/// concave at the feed, each with back-off `eps_h`.
pub fn hessian_loss(model: &GeModel, x_lo: f64, x_hi: f64, z: f64, eps_h: f64) -> f64 {
    (eps_h - model.gmix_d2(x_lo)).max(0.0)
        + (eps_h - model.gmix_d2(x_hi)).max(0.0)
        + (model.gmix_d2(z) + eps_h).max(0.0)
}

/// Gradient of [`hessian_loss`] with respect to the model parameters.
pub fn hessian_loss_grad(
    model: &GeModel,
    x_lo: f64,
    x_hi: f64,
    z: f64,
    eps_h: f64,
) -> Result<Vec<f64>> {
    let np = model.n_params();
    let mut grad = vec![0.0; np];
    let mut d = vec![0.0; np];
    for (x, sign) in [(x_lo, -1.0), (x_hi, -1.0), (z, 1.0)] {
        if sign * model.gmix_d2(x) + eps_h > 0.0 {
            model.d2_param_gradient_into(x, &mut d)?;
            for (g, v) in grad.iter_mut().zip(&d) {
                *g += sign * v;
            }
        }
    }
    Ok(grad)
}

/// `max(0, min_d g''(x_d))`: positive only when no grid point is concave.
pub fn gibbs_loss(model: &GeModel, points: &[f64]) -> f64 {
    min_curvature(model, points).map_or(0.0, |(_, c)| c.max(0.0))
}

fn min_curvature(model: &GeModel, points: &[f64]) -> Option<(usize, f64)> {
    points
        .iter()
        .enumerate()
        .map(|(k, &x)| (k, model.gmix_d2(x)))
        .fold(None, |best, (k, c)| match best {
            Some((_, b)) if c >= b => best,
            _ => Some((k, c)),
        })
}

pub fn gibbs_loss_grad(model: &GeModel, points: &[f64]) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; model.n_params()];
    if let Some((k, c)) = min_curvature(model, points) {
        if c > 0.0 {
            model.d2_param_gradient_into(points[k], &mut grad)?;
        }
    }
    Ok(grad)
}

/// Value used in the direct loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Hard compositions as the value, soft-surrogate gradients.
    StraightThrough,
    /// Soft compositions as both value and gradient source.
    Soft,
}

/// Grids shared by every loss evaluation of one configuration.
#[derive(Debug, Clone)]
pub struct LossGrids {
    pub solve: CompositionGrid,
    pub gibbs: CompositionGrid,
}

impl LossGrids {
    pub fn new(config: &FitConfig) -> Result<Self> {
        Ok(Self {
            solve: make_uniform_grid(config.grid_n, DEFAULT_EPS)?,
            gibbs: make_uniform_grid(config.gibbs_grid_n, DEFAULT_EPS)?,
        })
    }
}

/// Split items are trained on their labelled compositions; homogeneous
/// items on `(z, z)`.
pub fn label_target(label: &Label) -> (f64, f64) {
    match (label.is_split, label.x_lo, label.x_hi) {
        (true, Some(lo), Some(hi)) => (lo, hi),
        _ => (label.z, label.z),
    }
}

struct ItemTerms {
    direct: f64,
    hessian: f64,
    grad: Vec<f64>,
}

fn item_terms(
    label: &Label,
    model: &GeModel,
    config: &FitConfig,
    grids: &LossGrids,
    tau: f64,
    estimator: Estimator,
) -> Result<ItemTerms> {
    let s = solve_binary_full(model, label.z, &grids.solve, tau, config.eps_tie)?;
    let np = model.n_params();
    let x = s.table.points();
    let mut point_grads = vec![0.0; x.len() * np];
    for (i, &xi) in x.iter().enumerate() {
        model.param_gradient_into(xi, &mut point_grads[i * np..(i + 1) * np])?;
    }
    let pair_grads = s.table.pair_param_grads(&point_grads, np)?;
    let (xl, xh) = s.table.pair_compositions();
    let (d_lo, d_hi) = st_param_gradient(&s.probs, &pair_grads, np, &xl, &xh, tau)?;
    let r = &s.result;
    let pred = match estimator {
        Estimator::StraightThrough => (r.x_hard_lo, r.x_hard_hi),
        Estimator::Soft => (r.x_soft_lo, r.x_soft_hi),
    };
    let target = label_target(label);
    let direct = direct_loss(pred, target);
    let (c_lo, c_hi) = (2.0 * (pred.0 - target.0), 2.0 * (pred.1 - target.1));
    let mut grad: Vec<f64> = d_lo
        .iter()
        .zip(&d_hi)
        .map(|(a, b)| c_lo * a + c_hi * b)
        .collect();
    let mut hessian = 0.0;
    if label.is_split && config.lambda_h > 0.0 {
        hessian = hessian_loss(model, target.0, target.1, label.z, config.eps_h);
        let hg = hessian_loss_grad(model, target.0, target.1, label.z, config.eps_h)?;
        for (g, h) in grad.iter_mut().zip(hg) {
            *g += config.lambda_h * h;
        }
    }
    Ok(ItemTerms {
        direct,
        hessian,
        grad,
    })
}

/// Batch loss `mean(L1 + L2 + λ_H L_H) + λ_G L_G` and its gradient.
///
/// Items are solved in parallel and reduced in batch order. The Gibbs
/// term is included once per batch when the batch contains a split item.
pub fn total_loss(
    batch: &[Label],
    model: &GeModel,
    config: &FitConfig,
    grids: &LossGrids,
    tau: f64,
    estimator: Estimator,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("batch"));
    }
    let np = model.n_params();
    if np == 0 {
        return Err(Error::NotTrainable(model.kind()));
    }
    let terms: Vec<ItemTerms> = batch
        .par_iter()
        .enumerate()
        .map(|(index, label)| {
            item_terms(label, model, config, grids, tau, estimator).map_err(|e| Error::BatchItem {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; np];
    for t in &terms {
        loss += scale * (t.direct + config.lambda_h * t.hessian);
        for (g, v) in grad.iter_mut().zip(&t.grad) {
            *g += scale * v;
        }
    }
    if config.lambda_g > 0.0 && batch.iter().any(|l| l.is_split) {
        let pts = grids.gibbs.points();
        loss += config.lambda_g * gibbs_loss(model, pts);
        for (g, v) in grad.iter_mut().zip(gibbs_loss_grad(model, pts)?) {
            *g += config.lambda_g * v;
        }
    }
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn split_label(z: f64, lo: f64, hi: f64) -> Label {
        Label {
            system_id: "s".into(),
            z,
            x_lo: Some(lo),
            x_hi: Some(hi),
            is_split: true,
        }
    }

    #[test]
    fn direct_loss_examples() {
        assert_eq!(direct_loss((0.3, 0.7), (0.3, 0.7)), 0.0);
        assert_abs_diff_eq!(direct_loss((0.2, 0.8), (0.1, 0.9)), 0.02, epsilon = 1e-15);
        assert_eq!(
            direct_loss((0.8, 0.2), (0.9, 0.1)),
            direct_loss((0.2, 0.8), (0.1, 0.9))
        );
    }

    #[test]
    fn hessian_loss_examples() {
        assert_abs_diff_eq!(
            hessian_loss(&GeModel::Ideal, 0.3, 0.7, 0.5, 0.1),
            4.1,
            epsilon = 1e-12
        );
        let m = GeModel::margules(2.5);
        assert_abs_diff_eq!(
            m.gmix_d2(0.145),
            -5.0 + 1.0 / (0.145 * 0.855),
            epsilon = 1e-12
        );
        assert_eq!(hessian_loss(&m, 0.145, 0.855, 0.5, 0.1), 0.0);
        // zero margin with exactly zero curvature at a target
        let m = GeModel::margules(2.0);
        assert_eq!(m.gmix_d2(0.5), 0.0);
        assert_eq!(hessian_loss(&m, 0.5, 0.5, 0.5, 0.0), 0.0);
    }

    #[test]
    fn gibbs_loss_examples() {
        let grid = make_uniform_grid(101, DEFAULT_EPS).unwrap();
        assert_eq!(gibbs_loss(&GeModel::margules(1.5), grid.points()), 1.0);
        assert_eq!(gibbs_loss(&GeModel::margules(2.5), grid.points()), 0.0);
        assert_eq!(gibbs_loss(&GeModel::Ideal, grid.points()), 4.0);
    }

    #[test]
    fn no_auxiliary_weights_reduce_to_direct_loss() {
        let config = FitConfig {
            lambda_g: 0.0,
            lambda_h: 0.0,
            ..FitConfig::default()
        };
        let grids = LossGrids::new(&config).unwrap();
        let m = GeModel::Flexible {
            theta: vec![2.0, 0.0, 0.5],
        };
        let label = split_label(0.5, 0.15, 0.85);
        let (loss, _) = total_loss(
            std::slice::from_ref(&label),
            &m,
            &config,
            &grids,
            0.05,
            Estimator::StraightThrough,
        )
        .unwrap();
        let r = crate::solver::solve_binary(&m, 0.5, &grids.solve, 0.05, config.eps_tie).unwrap();
        assert_abs_diff_eq!(
            loss,
            direct_loss((r.x_hard_lo, r.x_hard_hi), (0.15, 0.85)),
            epsilon = 1e-15
        );
    }

    #[test]
    fn total_loss_gradient_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let config = FitConfig::default();
        let grids = LossGrids::new(&config).unwrap();
        let tau = 0.05;
        for _ in 0..10 {
            let theta: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..4.0)).collect();
            let batch = vec![
                split_label(0.5, rng.gen_range(0.05..0.3), rng.gen_range(0.7..0.95)),
                split_label(0.4, 0.2, 0.8),
                Label {
                    system_id: "s".into(),
                    z: 0.1,
                    x_lo: None,
                    x_hi: None,
                    is_split: false,
                },
            ];
            let m = GeModel::Flexible {
                theta: theta.clone(),
            };
            let (_, grad) = total_loss(&batch, &m, &config, &grids, tau, Estimator::Soft).unwrap();
            let h = 1e-6;
            for k in 0..theta.len() {
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[k] += h;
                dn[k] -= h;
                let lu = total_loss(
                    &batch,
                    &GeModel::Flexible { theta: up },
                    &config,
                    &grids,
                    tau,
                    Estimator::Soft,
                )
                .unwrap()
                .0;
                let ld = total_loss(
                    &batch,
                    &GeModel::Flexible { theta: dn },
                    &config,
                    &grids,
                    tau,
                    Estimator::Soft,
                )
                .unwrap()
                .0;
                let fd = (lu - ld) / (2.0 * h);
                let rel = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-3);
                assert!(rel < 1e-4, "k={k}: fd {fd} analytic {}", grad[k]);
            }
        }
    }

    #[test]
    fn batch_errors_carry_item_index() {
        let config = FitConfig::default();
        let grids = LossGrids::new(&config).unwrap();
        let batch = vec![split_label(0.5, 0.2, 0.8), split_label(1.5, 0.2, 0.8)];
        let err = total_loss(
            &batch,
            &GeModel::margules(2.5),
            &config,
            &grids,
            0.05,
            Estimator::StraightThrough,
        )
        .unwrap_err();
        assert!(matches!(err, Error::BatchItem { index: 1, .. }));
    }

    proptest! {
        #[test]
        fn losses_are_non_negative(
            theta in proptest::collection::vec(-5.0f64..5.0, 1..7),
            lo in 0.01f64..0.49,
            hi in 0.51f64..0.99,
            eps_h in 0.0f64..0.5,
        ) {
            let m = GeModel::Flexible { theta };
            let grid = make_uniform_grid(101, DEFAULT_EPS).unwrap();
            prop_assert!(hessian_loss(&m, lo, hi, 0.5, eps_h) >= 0.0);
            prop_assert!(gibbs_loss(&m, grid.points()) >= 0.0);
            prop_assert!(direct_loss((lo, hi), (hi, lo)) >= 0.0);
        }
    }
}
