#![allow(dead_code)]

use std::sync::Arc;

use kge_core::ewi::InitialProjection;
use kge_core::experiments::error_norm;
use kge_core::reference::{reference_solution, ProblemSpec, ReferenceRequest};
use kge_core::spectral::make_grid;
use kge_core::{Grid, InitialData, SpectralField};

pub fn torus_grid(m: usize) -> Arc<Grid> {
    make_grid(0.0, 2.0 * std::f64::consts::PI, m).unwrap()
}

/// Interpolated `(phi, gamma)` on `grid`.
pub fn initial(data: &InitialData, grid: &Arc<Grid>) -> (SpectralField, SpectralField) {
    let p = InitialProjection::Interpolate;
    (p.apply(|x| data.phi(x), grid).unwrap(), p.apply(|x| data.gamma(x), grid).unwrap())
}

/// Splitting reference of `spec` at time `t`.
pub fn reference_at(spec: ProblemSpec, modes: usize, tau: f64, t: f64) -> SpectralField {
    let r = reference_solution(&ReferenceRequest::new(spec, modes, tau, vec![t])).unwrap();
    r.trajectory.last().unwrap().u.clone()
}

pub fn h1_distance(reference: &SpectralField, numeric: &SpectralField) -> f64 {
    error_norm(reference, numeric, 1).unwrap()
}

pub fn max_coeff_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
