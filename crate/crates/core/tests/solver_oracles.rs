mod common;

use std::sync::Arc;

use common::{h1_distance, initial, max_coeff_diff, reference_at, torus_grid};
use kge_core::ewi::{
    amplitude_rescale, ewi_coefficients, exact_linear, first_step, integrate, run, EwiCoefficients, EwiState,
    RunConfig, SnapshotObserver, SolverParams,
};
use kge_core::reference::ProblemSpec;
use kge_core::spectral::{inverse_transform, sobolev_norm};
use kge_core::InitialData;

fn error_at(eps: f64, tau: f64, m: usize) -> f64 {
    let grid = torus_grid(m);
    let params = SolverParams::new(eps, 0.0, tau, 1.0).unwrap();
    let out = run(&params, &grid, &InitialData::long_time(), &RunConfig::default(), &mut []).unwrap();
    let reference = reference_at(ProblemSpec::weak(eps, 0.0).unwrap(), m, 5e-4, 1.0);
    h1_distance(&reference, &out.final_field)
}

#[test]
fn first_step_against_reference() {
    let grid = torus_grid(64);
    let (phi, gamma) = initial(&InitialData::long_time(), &grid);
    let u1 = first_step(&phi, &gamma, &ewi_coefficients(1e-3, &grid, 1.0)).unwrap();
    let reference = reference_at(ProblemSpec::weak(1.0, 0.0).unwrap(), 64, 1e-5, 1e-3);
    let e = h1_distance(&reference, &u1);
    assert!(e <= 1e-8, "first step error {e:e}");
}

#[test]
fn run_against_reference() {
    let grid = torus_grid(64);
    let params = SolverParams::new(1.0, 0.0, 5e-4, 1.0).unwrap();
    let out = run(&params, &grid, &InitialData::long_time(), &RunConfig::default(), &mut []).unwrap();
    let reference = reference_at(ProblemSpec::weak(1.0, 0.0).unwrap(), 64, 5e-5, 1.0);
    let e = h1_distance(&reference, &out.final_field);
    assert!(e <= 1e-6, "run error {e:e}");
}

#[test]
fn linear_limit_is_exact_over_many_steps() {
    let grid = torus_grid(64);
    let params = SolverParams::new(0.0, 0.0, 1e-3, 10.0).unwrap();
    assert_eq!(params.steps(), 10_000);
    let out = run(&params, &grid, &InitialData::long_time(), &RunConfig::default(), &mut []).unwrap();
    let exact = exact_linear(&out.initial, &out.initial_velocity, out.diagnostics.final_time).unwrap();
    let e = sobolev_norm(&out.final_field.sub(&exact).unwrap(), 1).unwrap();
    assert!(e <= 1e-10, "linear error {e:e}");
}

#[test]
fn reversed_recurrence_recovers_first_level() {
    let grid = torus_grid(64);
    let (phi, gamma) = initial(&InitialData::long_time(), &grid);
    let coeffs = Arc::new(ewi_coefficients(0.01, &grid, 1.0));
    let mut state = EwiState::start(&phi, &gamma, coeffs, false).unwrap();
    let u1 = state.curr();
    while state.n() < 100 {
        state.leapfrog_step().unwrap();
    }
    let mut back = state.reversed().unwrap();
    while back.n() > 1 {
        back.leapfrog_step().unwrap();
    }
    let e = sobolev_norm(&back.curr().sub(&u1).unwrap(), 1).unwrap();
    assert!(e <= 1e-10, "reversal error {e:e}");
}

#[test]
fn small_initial_data_form_is_the_rescaled_weak_form() {
    let eps = 0.5;
    let grid = torus_grid(64);
    let data = InitialData::long_time();
    let params = SolverParams::new(eps, 0.0, 0.01, 2.0).unwrap();
    let mut weak = SnapshotObserver::new(1);
    run(&params, &grid, &data, &RunConfig::default(), &mut [&mut weak]).unwrap();

    let sie = Arc::new(EwiCoefficients::with_strength(0.01, &grid, 1.0));
    let mut small = SnapshotObserver::new(1);
    integrate(sie, params.steps(), &grid, &data.scaled(eps), &RunConfig::default(), &mut [&mut small]).unwrap();

    let u: Vec<_> = weak.snapshots.iter().map(|s| s.2.clone()).collect();
    let w = amplitude_rescale(&u, eps).unwrap();
    assert_eq!(w.len(), small.snapshots.len());
    let worst = w.iter().zip(&small.snapshots).map(|(a, b)| max_coeff_diff(a, &b.2)).fold(0.0, f64::max);
    assert!(worst <= 1e-12, "dual-run difference {worst:e}");
}

#[test]
fn sigma_max_matches_replay() {
    let grid = torus_grid(64);
    let params = SolverParams::new(1.0, 0.0, 0.05, 1.0).unwrap();
    let mut snaps = SnapshotObserver::new(1);
    let out = run(&params, &grid, &InitialData::long_time(), &RunConfig::default(), &mut [&mut snaps]).unwrap();
    let replay = snaps
        .snapshots
        .iter()
        .map(|s| inverse_transform(&s.2).unwrap().sup_norm().powi(2))
        .fold(0.0, f64::max);
    assert_eq!(snaps.snapshots.len(), params.steps() + 1);
    assert!((replay - out.diagnostics.sigma_max).abs() <= 1e-14 * replay);
}

#[test]
fn second_order_in_time() {
    let errors: Vec<f64> = [0.2, 0.1, 0.05, 0.025].iter().map(|&t| error_at(1.0, t, 64)).collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.9..=2.1).contains(&order), "order {order} from {errors:?}");
    }
}

#[test]
fn error_scales_like_eps_squared_at_fixed_step() {
    let errors: Vec<f64> = [0.125, 0.0625, 0.03125].iter().map(|&e| error_at(e, 0.0125, 64)).collect();
    for w in errors.windows(2) {
        let ratio = w[1] / w[0];
        assert!((ratio - 0.25).abs() <= 0.025, "ratio {ratio} from {errors:?}");
    }
}
