mod common;

use phasesplit::apps::SystemSpec;
use phasesplit::gibbs::GeModel;
use phasesplit::grid::{make_uniform_grid, DEFAULT_EPS};
use phasesplit::io::Label;
use phasesplit::solver::solve_binary;
use phasesplit::train::{fit_system, fit_systems, FitConfig};

fn margules_label(id: &str, a: f64) -> Label {
    common::label_for(&SystemSpec {
        system_id: id.into(),
        model: GeModel::margules(a),
    })
}

#[test]
fn flexible_model_recovers_margules_split() {
    let label = margules_label("m", 2.5);
    let xb = common::margules_binodal(2.5);
    let config = FitConfig::default();
    let r = fit_system(&[label], &GeModel::flexible_zeros(6), &config).unwrap();
    assert!(r.metrics.mae <= 0.02, "MAE {}", r.metrics.mae);
    assert_eq!(r.model.kind(), "flexible");
    let grid = make_uniform_grid(config.grid_n, DEFAULT_EPS).unwrap();
    let s = solve_binary(&r.model, 0.5, &grid, r.final_tau, config.eps_tie).unwrap();
    let dx = 1.0 / (config.grid_n - 1) as f64;
    assert!(
        (s.x_hard_lo - xb).abs() <= 2.0 * dx,
        "{} vs {xb}",
        s.x_hard_lo
    );
    assert!((s.x_hard_hi - (1.0 - xb)).abs() <= 2.0 * dx);
}

#[test]
fn fitting_is_reproducible() {
    let labels = vec![margules_label("a", 2.4), margules_label("b", 2.9)];
    let config = FitConfig {
        epochs: 30,
        ..FitConfig::default()
    };
    let first = fit_systems(&labels, &GeModel::flexible_zeros(4), &config).unwrap();
    let second = fit_systems(&labels, &GeModel::flexible_zeros(4), &config).unwrap();
    // identical apart from the wall-clock time
    assert_eq!(
        serde_json::to_string(&first).unwrap(),
        serde_json::to_string(&second).unwrap()
    );
    assert_eq!(first.systems.len(), 2);
    assert_eq!(first.systems[0].system_id, "a");
}

#[test]
fn loss_decreases_on_average() {
    let label = margules_label("m", 2.8);
    let r = fit_system(&[label], &GeModel::flexible_zeros(6), &FitConfig::default()).unwrap();
    let head: f64 = r.loss_trace[..10].iter().sum::<f64>() / 10.0;
    let n = r.loss_trace.len();
    let tail: f64 = r.loss_trace[n - 10..].iter().sum::<f64>() / 10.0;
    assert!(tail < head, "head {head} tail {tail}");
}
