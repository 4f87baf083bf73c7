use super::config::{LrSchedule, OptimizerKind};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// First-order optimizer state for one parameter vector.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, n_params: usize, weight_decay: f64) -> Self {
        Self {
            kind,
            weight_decay,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::Adamw => {
                let c1 = 1.0 - BETA1.powi(self.t);
                let c2 = 1.0 - BETA2.powi(self.t);
                for k in 0..params.len() {
                    params[k] *= 1.0 - lr * self.weight_decay;
                    self.m[k] = BETA1 * self.m[k] + (1.0 - BETA1) * grad[k];
                    self.v[k] = BETA2 * self.v[k] + (1.0 - BETA2) * grad[k] * grad[k];
                    let mh = self.m[k] / c1;
                    let vh = self.v[k] / c2;
                    params[k] -= lr * mh / (vh.sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

/// Learning rate at `step` of `total` steps.
pub fn scheduled_lr(schedule: LrSchedule, max_lr: f64, step: usize, total: usize) -> f64 {
    match schedule {
        LrSchedule::Constant => max_lr,
        LrSchedule::Onecycle => {
            const WARMUP: f64 = 0.3;
            const START: f64 = 1.0 / 25.0;
            const END: f64 = 1e-4;
            let pct = step as f64 / total.max(1) as f64;
            if pct < WARMUP {
                let c = 0.5 * (1.0 - (std::f64::consts::PI * pct / WARMUP).cos());
                max_lr * (START + (1.0 - START) * c)
            } else {
                let c =
                    0.5 * (1.0 + (std::f64::consts::PI * (pct - WARMUP) / (1.0 - WARMUP)).cos());
                max_lr * (END + (1.0 - END) * c)
            }
        }
    }
}
