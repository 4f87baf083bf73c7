use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub rmse: f64,
    pub r2: f64,
}

/// MAE sums both phase errors per item; RMSE is the root of the mean
/// per-item squared-error sum; R² is over all compositions concatenated.
pub fn metrics(preds: &[(f64, f64)], targets: &[(f64, f64)]) -> Result<Metrics> {
    if preds.is_empty() {
        return Err(Error::EmptyInput("predictions"));
    }
    if preds.len() != targets.len() {
        return Err(Error::LengthMismatch {
            expected: targets.len(),
            actual: preds.len(),
        });
    }
    let n = preds.len() as f64;
    let mut abs = 0.0;
    let mut sq = 0.0;
    for (p, t) in preds.iter().zip(targets) {
        let (e1, e2) = (p.0 - t.0, p.1 - t.1);
        abs += e1.abs() + e2.abs();
        sq += e1 * e1 + e2 * e2;
    }
    let mean_t = targets.iter().map(|t| t.0 + t.1).sum::<f64>() / (2.0 * n);
    let ss_tot: f64 = targets
        .iter()
        .map(|t| (t.0 - mean_t).powi(2) + (t.1 - mean_t).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - sq / ss_tot
    } else if sq == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(Metrics {
        mae: abs / n,
        rmse: (sq / n).sqrt(),
        r2,
    })
}
