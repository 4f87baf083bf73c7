use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::solver::DEFAULT_EPS_TIE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    /// Adam with decoupled weight decay.
    Adamw,
    /// Plain gradient descent.
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LrSchedule {
    Constant,
    /// Cosine warm-up over the first 30% of steps to the peak rate, then
    /// cosine annealing.
    Onecycle,
}

/// Fitting hyper-parameters. Every field has a default, so a JSON file may
/// override any subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub tau0: f64,
    pub tau_decay: f64,
    pub lambda_g: f64,
    pub lambda_h: f64,
    pub eps_h: f64,
    pub grid_n: usize,
    pub gibbs_grid_n: usize,
    pub optimizer: OptimizerKind,
    pub schedule: LrSchedule,
    pub weight_decay: f64,
    pub eps_tie: f64,
    pub seed: u64,
    /// Stop after this many epochs without improvement of the training loss.
    pub patience: Option<usize>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lr: 0.1,
            epochs: 200,
            batch_size: 64,
            tau0: 0.1,
            tau_decay: 0.98,
            lambda_g: 0.01,
            lambda_h: 0.05,
            eps_h: 0.1,
            grid_n: 101,
            gibbs_grid_n: 101,
            optimizer: OptimizerKind::Adamw,
            schedule: LrSchedule::Constant,
            weight_decay: 1e-4,
            eps_tie: DEFAULT_EPS_TIE,
            seed: 0,
            patience: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &'static str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be non-negative, got {v}")))
            }
        };
        nonneg("lr", self.lr)?;
        nonneg("lambda_g", self.lambda_g)?;
        nonneg("lambda_h", self.lambda_h)?;
        nonneg("eps_h", self.eps_h)?;
        nonneg("weight_decay", self.weight_decay)?;
        nonneg("eps_tie", self.eps_tie)?;
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return Err(invalid(
                "tau0",
                format!("must be positive, got {}", self.tau0),
            ));
        }
        if !(self.tau_decay > 0.0 && self.tau_decay <= 1.0) {
            return Err(invalid(
                "tau_decay",
                format!("must be in (0, 1], got {}", self.tau_decay),
            ));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch_size", "must be at least 1"));
        }
        if self.grid_n < 2 || self.gibbs_grid_n < 2 {
            return Err(invalid("grid_n", "grids need at least 2 points"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_keeps_defaults() {
        let c: FitConfig = serde_json::from_str(r#"{"lr": 0.01, "optimizer": "sgd"}"#).unwrap();
        assert_eq!(c.lr, 0.01);
        assert_eq!(c.optimizer, OptimizerKind::Sgd);
        assert_eq!(c.epochs, 200);
        assert_eq!(c.tau_decay, 0.98);
        c.validate().unwrap();
    }

    #[test]
    fn invalid_values_are_rejected() {
        for c in [
            FitConfig {
                tau0: 0.0,
                ..Default::default()
            },
            FitConfig {
                tau_decay: 1.5,
                ..Default::default()
            },
            FitConfig {
                lambda_h: -1.0,
                ..Default::default()
            },
            FitConfig {
                batch_size: 0,
                ..Default::default()
            },
        ] {
            assert!(c.validate().is_err());
        }
    }
}
