//! Pure-component vapor pressure from the double tangent of the discretized
//! reduced van der Waals Helmholtz energy.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::gibbs::VdwHelmholtz;
use crate::grid::AugmentedGrid;
use crate::solver::{solve_on_curve, DEFAULT_EPS_TIE};

pub const DEFAULT_VOLUME_POINTS: usize = 100;
pub const DEFAULT_V_MIN: f64 = 0.4;
pub const DEFAULT_V_MAX: f64 = 60.0;

/// Softmax temperature in units of `R T_c`; it does not affect the hard
/// double tangent.
pub const DEFAULT_VLE_TAU: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VleResult {
    pub tr: f64,
    pub v_liquid: f64,
    pub v_vapor: f64,
    /// `-(a_L - a_V) / (v_L - v_V)` in the reduced Helmholtz units.
    pub tangent_slope: f64,
    /// Reduced pressure `p / p_c = (8/3) * tangent_slope`.
    pub pressure: f64,
    pub feed_volume: f64,
    pub grid_n: usize,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum VleOutcome {
    TwoPhase(VleResult),
    SinglePhase { tr: f64 },
}

/// `n` volumes equally spaced in `ln v` on `[lo, hi]`, endpoints exact.
pub fn log_spaced_volumes(n: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(invalid("points", format!("need at least 2, got {n}")));
    }
    if !(lo > 1.0 / 3.0 && hi > lo && hi.is_finite()) {
        return Err(invalid(
            "volume range",
            format!("need 1/3 < lo < hi, got [{lo}, {hi}]"),
        ));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|k| (a + k as f64 * step).exp()).collect();
    v[0] = lo;
    v[n - 1] = hi;
    Ok(v)
}

pub fn vapor_pressure(model: &VdwHelmholtz, volumes: &[f64], tau: f64) -> Result<VleOutcome> {
    let Some((s_lo, s_hi)) = model.spinodal_volumes() else {
        return Ok(VleOutcome::SinglePhase { tr: model.tr });
    };
    let feed = (s_lo * s_hi).sqrt();
    if volumes.is_empty() || !(volumes[0] < feed && feed < volumes[volumes.len() - 1]) {
        return Err(invalid(
            "volume grid",
            format!("must span the unstable region around v = {feed:.4}"),
        ));
    }
    let grid = AugmentedGrid::with_feed(volumes, feed)?;
    let a: Vec<f64> = grid
        .points()
        .iter()
        .map(|&v| model.helmholtz(v))
        .collect::<Result<_>>()?;
    let s = solve_on_curve(&grid, &a, tau, DEFAULT_EPS_TIE, volumes.len())?;
    if !s.result.is_split {
        return Ok(VleOutcome::SinglePhase { tr: model.tr });
    }
    let (i, j) = s.table.indices(s.argmin);
    let (v_l, v_v) = (grid.points()[i], grid.points()[j]);
    let slope = -(a[i] - a[j]) / (v_l - v_v);
    Ok(VleOutcome::TwoPhase(VleResult {
        tr: model.tr,
        v_liquid: v_l,
        v_vapor: v_v,
        tangent_slope: slope,
        pressure: 8.0 / 3.0 * slope,
        feed_volume: feed,
        grid_n: volumes.len(),
        tau,
    }))
}
