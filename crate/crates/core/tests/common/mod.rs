//! Independent reference values shared by the integration tests.

#![allow(dead_code)]

use phasesplit::apps::{label_system, SystemSpec};
use phasesplit::gibbs::GeModel;
use phasesplit::grid::{make_uniform_grid, DEFAULT_EPS};
use phasesplit::io::Label;

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    assert!(f_lo * f(hi) <= 0.0, "root not bracketed on [{lo}, {hi}]");
    for _ in 0..300 {
        let m = 0.5 * (lo + hi);
        if (f(m) < 0.0) == (f_lo < 0.0) {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

/// Lower binodal of the symmetric Margules model: root of
/// `ln(x/(1-x)) + A(1-2x) = 0` on `(0, 0.5)`, left of the spinodal.
pub fn margules_binodal(a: f64) -> f64 {
    assert!(a > 2.0);
    let f = |x: f64| (x / (1.0 - x)).ln() + a * (1.0 - 2.0 * x);
    let spinodal = 0.5 - (0.25 - 0.5 / a).sqrt();
    bisect(f, 1e-15, spinodal)
}

/// Margules parameter whose binodal gap `1 - 2 x_b` equals `width`.
pub fn margules_for_width(width: f64) -> f64 {
    let x = 0.5 * (1.0 - width);
    ((1.0 - x) / x).ln() / (1.0 - 2.0 * x)
}

/// Saturation pressure of the reduced van der Waals fluid by the equal-area
/// rule, `p = 8T/(3v-1) - 3/v²`.
pub fn maxwell_pressure(tr: f64) -> f64 {
    let p = |v: f64| 8.0 * tr / (3.0 * v - 1.0) - 3.0 / (v * v);
    let prim = |v: f64| 8.0 * tr / 3.0 * (3.0 * v - 1.0).ln() + 3.0 / v;
    // dp/dv = 0 where 4 T v³ = (3v - 1)²
    let h = |v: f64| 4.0 * tr * v.powi(3) - (3.0 * v - 1.0).powi(2);
    let s_lo = bisect(h, 1.0 / 3.0 + 1e-12, 1.0);
    let s_hi = bisect(h, 1.0, 1e6);
    let area = |ps: f64| {
        let v_l = bisect(|v| p(v) - ps, 1.0 / 3.0 + 1e-14, s_lo);
        let mut far = 2.0 * s_hi;
        while p(far) > ps {
            far *= 2.0;
        }
        let v_v = bisect(|v| p(v) - ps, s_hi, far);
        prim(v_v) - prim(v_l) - ps * (v_v - v_l)
    };
    let low = p(s_lo).max(1e-12);
    bisect(area, low, p(s_hi))
}

/// Hard double tangent by a plain scan over every pair bracketing `z` on
/// the grid plus the feed. Returns `(x', x'')`.
pub fn brute_force_split(model: &GeModel, z: f64, grid: &[f64], eps_tie: f64) -> (f64, f64) {
    let mut x = grid.to_vec();
    match x.iter().position(|&p| (p - z).abs() <= 1e-12) {
        Some(k) => x[k] = z,
        None => {
            x.push(z);
            x.sort_by(f64::total_cmp);
        }
    }
    let f = x.iter().position(|&p| p == z).unwrap();
    let g: Vec<f64> = x.iter().map(|&v| model.gmix(v)).collect();
    let mut best = f64::INFINITY;
    let mut arg = (f, f);
    for i in 0..x.len() {
        for j in i..x.len() {
            if i > f || j < f {
                continue;
            }
            let e = if i == j {
                g[i] - eps_tie
            } else {
                let phi_j = (z - x[i]) / (x[j] - x[i]);
                (1.0 - phi_j) * g[i] + phi_j * g[j]
            };
            if e < best {
                best = e;
                arg = (i, j);
            }
        }
    }
    (x[arg.0], x[arg.1])
}

/// Gap width of the hard label of `model` on the label grid.
fn label_width(model: &GeModel) -> f64 {
    let grid = make_uniform_grid(401, DEFAULT_EPS).unwrap();
    let spec = SystemSpec {
        system_id: String::new(),
        model: model.clone(),
    };
    let (row, _) = label_system(&spec, &grid).unwrap();
    match (row.label.x_lo, row.label.x_hi) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0.0,
    }
}

fn nrtl_scaled(s: f64) -> GeModel {
    GeModel::nrtl(s, 1.6 * s)
}

/// Twenty synthetic systems, one per bin of gap width on `(0.05, 0.95)`.
/// Even bins are Margules, odd bins NRTL with `τ21 = 1.6 τ12`.
pub fn width_binned_systems() -> Vec<SystemSpec> {
    let edges: Vec<f64> = (0..=20).map(|k| 0.05 + 0.9 * k as f64 / 20.0).collect();
    (0..20)
        .map(|b| {
            let w = 0.5 * (edges[b] + edges[b + 1]);
            let model = if b % 2 == 0 {
                GeModel::margules(margules_for_width(w))
            } else {
                let mut lo = 0.75;
                let mut hi = 2.4;
                for _ in 0..40 {
                    let m = 0.5 * (lo + hi);
                    if label_width(&nrtl_scaled(m)) < w {
                        lo = m;
                    } else {
                        hi = m;
                    }
                }
                nrtl_scaled(0.5 * (lo + hi))
            };
            SystemSpec {
                system_id: format!("bin{b:02}"),
                model,
            }
        })
        .collect()
}

/// Label of `spec` on the 401-point label grid.
pub fn label_for(spec: &SystemSpec) -> Label {
    let grid = make_uniform_grid(401, DEFAULT_EPS).unwrap();
    label_system(spec, &grid).unwrap().0.label
}
