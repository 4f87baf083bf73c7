use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::FitConfig;
use super::loss::{label_target, total_loss, Estimator, LossGrids};
use super::metrics::{metrics, Metrics};
use super::optim::{scheduled_lr, Optimizer};
use crate::error::{Error, Result};
use crate::gibbs::GeModel;
use crate::grid::CompositionGrid;
use crate::io::Label;
use crate::solver::solve_binary;

/// Loss magnitude treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub model: GeModel,
    pub params: Vec<f64>,
    /// Mean training loss of every epoch run.
    pub loss_trace: Vec<f64>,
    pub epochs_run: usize,
    pub final_tau: f64,
    pub batch_size: usize,
    pub n_labels: usize,
    pub metrics: Metrics,
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Hard predictions `(x', x'')` for every label.
pub fn predict(
    model: &GeModel,
    labels: &[Label],
    grid: &CompositionGrid,
    tau: f64,
    eps_tie: f64,
) -> Result<Vec<(f64, f64)>> {
    labels
        .par_iter()
        .enumerate()
        .map(|(index, l)| {
            solve_binary(model, l.z, grid, tau, eps_tie)
                .map(|r| (r.x_hard_lo, r.x_hard_hi))
                .map_err(|e| Error::BatchItem {
                    index,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// Fits one parameter vector to `labels` by mini-batch first-order descent
/// with per-epoch temperature decay.
pub fn fit_system(labels: &[Label], model0: &GeModel, config: &FitConfig) -> Result<FitReport> {
    let start = Instant::now();
    config.validate()?;
    model0.validate()?;
    if labels.is_empty() {
        return Err(Error::EmptyInput("labels"));
    }
    let mut params = model0.params()?;
    let grids = LossGrids::new(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut opt = Optimizer::new(config.optimizer, params.len(), config.weight_decay);
    let mut order: Vec<usize> = (0..labels.len()).collect();
    let n_batches = labels.len().div_ceil(config.batch_size);
    let total_steps = config.epochs * n_batches;
    let mut tau = config.tau0;
    let mut trace = Vec::with_capacity(config.epochs);
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let mut step = 0;
    let mut batch = Vec::with_capacity(config.batch_size);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| labels[i].clone()));
            let model = model0.with_params(&params)?;
            let (loss, grad) = total_loss(
                &batch,
                &model,
                config,
                &grids,
                tau,
                Estimator::StraightThrough,
            )?;
            if !loss.is_finite() || loss > DIVERGENCE_LIMIT || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, loss });
            }
            epoch_loss += loss * chunk.len() as f64;
            let lr = scheduled_lr(config.schedule, config.lr, step, total_steps);
            opt.step(&mut params, &grad, lr);
            step += 1;
        }
        epoch_loss /= labels.len() as f64;
        trace.push(epoch_loss);
        log::debug!("epoch {epoch}: loss {epoch_loss:.6e} tau {tau:.4e}");
        tau *= config.tau_decay;
        if let Some(patience) = config.patience {
            if epoch_loss < best {
                best = epoch_loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }

    let model = model0.with_params(&params)?;
    let preds = predict(&model, labels, &grids.solve, tau, config.eps_tie)?;
    let targets: Vec<(f64, f64)> = labels.iter().map(label_target).collect();
    Ok(FitReport {
        model,
        params,
        epochs_run: trace.len(),
        loss_trace: trace,
        final_tau: tau,
        batch_size: config.batch_size,
        n_labels: labels.len(),
        metrics: metrics(&preds, &targets)?,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemFit {
    pub system_id: String,
    pub report: FitReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiFitReport {
    pub systems: Vec<SystemFit>,
    /// Mean of the per-system MAE values.
    pub mean_mae: f64,
    /// Metrics pooled over every label.
    pub metrics: Metrics,
}

/// Fits an independent parameter block per `system_id`, in order of first
/// appearance.
pub fn fit_systems(
    labels: &[Label],
    model0: &GeModel,
    config: &FitConfig,
) -> Result<MultiFitReport> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("labels"));
    }
    let mut ids: Vec<&str> = Vec::new();
    for l in labels {
        if !ids.contains(&l.system_id.as_str()) {
            ids.push(&l.system_id);
        }
    }
    let systems: Vec<SystemFit> = ids
        .par_iter()
        .map(|id| {
            let own: Vec<Label> = labels
                .iter()
                .filter(|l| l.system_id == *id)
                .cloned()
                .collect();
            fit_system(&own, model0, config).map(|report| SystemFit {
                system_id: id.to_string(),
                report,
            })
        })
        .collect::<Result<_>>()?;
    let mean_mae = systems.iter().map(|s| s.report.metrics.mae).sum::<f64>() / systems.len() as f64;

    let grids = LossGrids::new(config)?;
    let mut preds = Vec::with_capacity(labels.len());
    let mut targets = Vec::with_capacity(labels.len());
    for s in &systems {
        let own: Vec<Label> = labels
            .iter()
            .filter(|l| l.system_id == s.system_id)
            .cloned()
            .collect();
        preds.extend(predict(
            &s.report.model,
            &own,
            &grids.solve,
            s.report.final_tau,
            config.eps_tie,
        )?);
        targets.extend(own.iter().map(label_target));
    }
    Ok(MultiFitReport {
        systems,
        mean_mae,
        metrics: metrics(&preds, &targets)?,
    })
}
