mod common;

use phasesplit::apps::llle::DEFAULT_LLLE_TAU;
use phasesplit::apps::vle::DEFAULT_VLE_TAU;
use phasesplit::apps::{
    generate_labels, log_spaced_volumes, solve_llle, vapor_pressure, LlleMethod, SystemSpec,
    VleOutcome,
};
use phasesplit::enumerate::DEFAULT_GROUP_BUDGET;
use phasesplit::gibbs::{GeModel, SymmetricTernaryModel, VdwHelmholtz};
use phasesplit::grid::{make_simplex_grid, DEFAULT_EPS};

#[test]
fn vapor_pressure_tangent_is_consistent() {
    let v = log_spaced_volumes(200, 0.4, 60.0).unwrap();
    for tr in [0.7, 0.8, 0.9, 0.95] {
        let m = VdwHelmholtz::new(tr).unwrap();
        let VleOutcome::TwoPhase(r) = vapor_pressure(&m, &v, DEFAULT_VLE_TAU).unwrap() else {
            panic!("Tr = {tr} should split");
        };
        let (a_l, a_v) = (
            m.helmholtz(r.v_liquid).unwrap(),
            m.helmholtz(r.v_vapor).unwrap(),
        );
        let slope = -(a_l - a_v) / (r.v_liquid - r.v_vapor);
        assert!((slope - r.tangent_slope).abs() < 1e-12);
        assert_eq!(r.pressure, 8.0 / 3.0 * r.tangent_slope);
        // the chord never lies above the discretized curve
        for &vi in &v {
            if vi < r.v_liquid || vi > r.v_vapor {
                continue;
            }
            let chord = a_l - slope * (vi - r.v_liquid);
            assert!(chord <= m.helmholtz(vi).unwrap() + 1e-10, "Tr {tr}, v {vi}");
        }
        let oracle = common::maxwell_pressure(tr);
        assert!(
            (r.pressure - oracle).abs() / oracle < 0.01,
            "Tr {tr}: {} vs {oracle}",
            r.pressure
        );
    }
}

#[test]
fn narrow_volume_range_is_rejected() {
    let m = VdwHelmholtz::new(0.9).unwrap();
    let v = log_spaced_volumes(50, 3.0, 60.0).unwrap();
    assert!(vapor_pressure(&m, &v, DEFAULT_VLE_TAU).is_err());
}

#[test]
fn llle_conserves_mass_at_off_centre_feeds() {
    let grid = make_simplex_grid(3, 30).unwrap();
    let m = SymmetricTernaryModel::new(3.0);
    for z in [[0.5, 0.3, 0.2], [0.34, 0.33, 0.33], [0.6, 0.2, 0.2]] {
        let r = solve_llle(
            &m,
            &z,
            &grid,
            DEFAULT_LLLE_TAU,
            LlleMethod::Formulation1,
            DEFAULT_GROUP_BUDGET,
        )
        .unwrap();
        let total: f64 = r.phases.iter().map(|p| p.amount).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(
            r.mass_balance_residual < 1e-6,
            "{z:?}: {}",
            r.mass_balance_residual
        );
        assert!((1..=3).contains(&r.n_phases));
        for p in &r.phases {
            let s: f64 = p.composition.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn llle_formulations_agree_on_phase_count() {
    let grid = make_simplex_grid(3, 12).unwrap();
    let m = SymmetricTernaryModel::new(3.0);
    let third = 1.0 / 3.0;
    let z = [third, third, third];
    let f1 = solve_llle(
        &m,
        &z,
        &grid,
        0.002,
        LlleMethod::Formulation1,
        DEFAULT_GROUP_BUDGET,
    )
    .unwrap();
    let f2 = solve_llle(
        &m,
        &z,
        &grid,
        0.002,
        LlleMethod::Formulation2,
        DEFAULT_GROUP_BUDGET,
    )
    .unwrap();
    assert_eq!(f1.n_phases, 3);
    assert_eq!(f2.n_phases, 3);
    assert!(f2.mass_balance_residual < 1e-9);
}

#[test]
fn generated_labels_match_binodal_oracle() {
    let specs: Vec<SystemSpec> = [2.2, 2.6, 3.0]
        .iter()
        .map(|&a| SystemSpec {
            system_id: format!("m{a}"),
            model: GeModel::margules(a),
        })
        .collect();
    let (rows, warnings) = generate_labels(&specs, 401, DEFAULT_EPS).unwrap();
    assert!(warnings.is_empty());
    for (row, a) in rows.iter().zip([2.2, 2.6, 3.0]) {
        let xb = common::margules_binodal(a);
        assert!(row.label.is_split);
        assert!((row.label.x_lo.unwrap() - xb).abs() <= 1.0 / 400.0);
        assert!((row.label.x_hi.unwrap() - (1.0 - xb)).abs() <= 1.0 / 400.0);
    }
}
