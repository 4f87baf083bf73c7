//! Synthetic equilibrium labels from known Gibbs energy models.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{eval_curve, GeModel};
use crate::grid::{make_uniform_grid, CompositionGrid};
use crate::io::Label;
use crate::solver::{solve_binary, DEFAULT_EPS_TIE};

/// Phase compositions closer than this are reported as one phase.
pub const SINGLE_PHASE_THRESHOLD: f64 = 1e-3;

pub const DEFAULT_LABEL_GRID: usize = 401;

/// The hard forward pass does not depend on the temperature; this value
/// only feeds the unused soft estimates.
const LABEL_TAU: f64 = 0.01;

/// A named model spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub system_id: String,
    pub model: GeModel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetRow {
    pub label: Label,
    pub model: GeModel,
}

/// Runs of consecutive interior grid indices with negative second
/// difference, as inclusive `(first, last)` pairs.
pub fn concave_regions(values: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for k in 1..values.len().saturating_sub(1) {
        let concave = values[k + 1] - 2.0 * values[k] + values[k - 1] < 0.0;
        match (concave, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                out.push((s, k - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, values.len() - 2));
    }
    out
}

/// Label for one model, plus a warning when the curve has several concave
/// regions (the widest one is used).
pub fn label_system(
    spec: &SystemSpec,
    grid: &CompositionGrid,
) -> Result<(DatasetRow, Option<String>)> {
    spec.model.validate()?;
    let x = grid.points();
    let curve = eval_curve(&spec.model, x)?;
    let regions = concave_regions(&curve.values);
    let mut warning = None;
    let Some(&(lo, hi)) = regions.iter().rev().max_by_key(|(a, b)| b - a) else {
        let row = DatasetRow {
            label: Label {
                system_id: spec.system_id.clone(),
                z: 0.5,
                x_lo: None,
                x_hi: None,
                is_split: false,
            },
            model: spec.model.clone(),
        };
        return Ok((row, None));
    };
    if regions.len() > 1 {
        warning = Some(format!(
            "WARN multi-region: system {}: {} concave regions, using [{:.6}, {:.6}]",
            spec.system_id,
            regions.len(),
            x[lo],
            x[hi]
        ));
    }
    let z = 0.5 * (x[lo] + x[hi]);
    let r = solve_binary(&spec.model, z, grid, LABEL_TAU, DEFAULT_EPS_TIE)?;
    let split = r.is_split && r.x_hard_hi - r.x_hard_lo >= SINGLE_PHASE_THRESHOLD;
    let label = Label {
        system_id: spec.system_id.clone(),
        z,
        x_lo: split.then_some(r.x_hard_lo),
        x_hi: split.then_some(r.x_hard_hi),
        is_split: split,
    };
    Ok((
        DatasetRow {
            label,
            model: spec.model.clone(),
        },
        warning,
    ))
}

/// Labels for every spec, in input order, with any multi-region warnings.
pub fn generate_labels(
    specs: &[SystemSpec],
    grid_n: usize,
    eps: f64,
) -> Result<(Vec<DatasetRow>, Vec<String>)> {
    if specs.is_empty() {
        return Err(Error::EmptyInput("model specs"));
    }
    let grid = make_uniform_grid(grid_n, eps)?;
    let results: Vec<(DatasetRow, Option<String>)> = specs
        .par_iter()
        .enumerate()
        .map(|(index, s)| {
            label_system(s, &grid).map_err(|e| Error::BatchItem {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(results.len());
    let mut warnings = Vec::new();
    for (row, w) in results {
        warnings.extend(w);
        rows.push(row);
    }
    Ok((rows, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DEFAULT_EPS;

    fn spec(id: &str, model: GeModel) -> SystemSpec {
        SystemSpec {
            system_id: id.into(),
            model,
        }
    }

    /// Root of ln(x/(1-x)) + A(1-2x) = 0 below 0.5.
    fn binodal(a: f64) -> f64 {
        let f = |x: f64| (x / (1.0 - x)).ln() + a * (1.0 - 2.0 * x);
        let (mut lo, mut hi) = (1e-12, 0.5 - (0.25 - 0.5 / a).sqrt());
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if f(m) < 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        lo
    }

    #[test]
    fn region_detection() {
        assert_eq!(concave_regions(&[0.0, 1.0, 4.0, 9.0]), vec![]);
        assert_eq!(
            concave_regions(&[0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0]),
            vec![(1, 2), (4, 5)]
        );
    }

    #[test]
    fn margules_examples() {
        let specs = vec![
            spec("one", GeModel::margules(1.0)),
            spec("two", GeModel::margules(2.5)),
            spec("crit", GeModel::margules(2.001)),
        ];
        let (rows, warnings) = generate_labels(&specs, DEFAULT_LABEL_GRID, DEFAULT_EPS).unwrap();
        assert!(warnings.is_empty());
        assert!(!rows[0].label.is_split);
        assert!(rows[0].label.x_lo.is_none());

        let l = &rows[1].label;
        assert!(l.is_split);
        assert!((l.z - 0.5).abs() < 1e-12);
        let xb = binodal(2.5);
        let dx = 1.0 / 400.0;
        assert!((l.x_lo.unwrap() - xb).abs() <= dx);
        assert!((l.x_hi.unwrap() - (1.0 - xb)).abs() <= dx);

        // gap about 0.039 wide: still split at this resolution
        let l = &rows[2].label;
        let xb = binodal(2.001);
        assert!(l.is_split);
        assert!((l.x_lo.unwrap() - xb).abs() <= dx);
        assert!(l.x_hi.unwrap() - l.x_lo.unwrap() >= SINGLE_PHASE_THRESHOLD);
    }

    #[test]
    fn two_concave_regions_warn() {
        // strongly W-shaped excess: two separate concave windows
        let m = GeModel::Flexible {
            theta: vec![-6.0, 0.0, 30.0],
        };
        let (rows, warnings) = generate_labels(&[spec("w", m)], 401, DEFAULT_EPS).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].starts_with("WARN multi-region:"));
    }

    #[test]
    fn deterministic() {
        let specs = vec![
            spec("a", GeModel::nrtl(1.5, 2.4)),
            spec("b", GeModel::margules(2.8)),
        ];
        let a = generate_labels(&specs, 201, DEFAULT_EPS).unwrap();
        let b = generate_labels(&specs, 201, DEFAULT_EPS).unwrap();
        assert_eq!(a, b);
    }
}
