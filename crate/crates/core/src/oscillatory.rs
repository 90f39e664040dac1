//! EWI-FP for the oscillatory scaling
//!
//! ```text
//! eps^{2 beta} v_ss - v_xx + v + eps^2 v^3 = 0,   v(x, 0) = phi,  v_s(x, 0) = eps^{-beta} gamma,
//! ```
//!
//! obtained from the weak-nonlinearity equation by `s = eps^beta t`. The per-mode
//! frequencies are `zeta_bar_l = eps^{-beta} zeta_l` and the recurrence is the
//! weak-form recurrence with bar coefficients, so the same stepping kernel is used.

use std::sync::Arc;

use crate::data::InitialData;
use crate::error::{Error, Result};
use crate::ewi::{integrate, stability_bound, EwiCoefficients, Observer, RunConfig, RunOutput};
use crate::spectral::{inverse_transform, Grid, SpectralField};

/// Parameters of an oscillatory run on `s in [0, t0]` with step `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscParams {
    pub eps: f64,
    pub beta: f64,
    pub k: f64,
    pub t0: f64,
}

impl OscParams {
    pub fn new(eps: f64, beta: f64, k: f64, t0: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")));
        }
        if !(0.0..=2.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!("beta must lie in [0, 2], got {beta}")));
        }
        if !(k > 0.0) || !(t0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time step and horizon must be positive, got k = {k}, t0 = {t0}"
            )));
        }
        Ok(OscParams { eps, beta, k, t0 })
    }

    pub fn steps(&self) -> usize {
        (self.t0 / self.k).round() as usize
    }

    pub fn final_time(&self) -> f64 {
        self.steps() as f64 * self.k
    }

    /// `eps^beta`.
    pub fn time_scale(&self) -> f64 {
        self.eps.powf(self.beta)
    }

    /// Weak-form step with the same per-step phase, `k eps^{-beta}`.
    pub fn weak_step(&self) -> f64 {
        self.k / self.time_scale()
    }
}

/// `eps^{-beta} sqrt(1 + mu_l^2)` per mode.
pub fn zeta_bar(grid: &Grid, eps: f64, beta: f64) -> Vec<f64> {
    let inv = eps.powf(-beta);
    grid.zeta().iter().map(|z| inv * z).collect()
}

/// `p = cos(k zb)`, `q = sin(k zb)/(eps^beta zb)`, `r = eps^2 (cos(k zb) - 1)/(eps^beta zb)^2`.
pub fn bar_coefficients(k: f64, grid: &Grid, eps: f64, beta: f64) -> EwiCoefficients {
    let scale = eps.powf(beta);
    let n = grid.modes();
    let (mut p, mut q, mut r) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for zb in zeta_bar(grid, eps, beta) {
        let (s, c) = (k * zb).sin_cos();
        let w = scale * zb;
        p.push(c);
        q.push(s / w);
        r.push(eps * eps * (c - 1.0) / (w * w));
    }
    EwiCoefficients::from_tables(k, eps * eps, scale, p, q, r)
}

/// `2 eps^beta h / sqrt(pi^2 + h^2 (1 + eps^2 sigma))`.
pub fn osc_stability_bound(h: f64, eps: f64, beta: f64, sigma_max: f64) -> f64 {
    eps.powf(beta) * stability_bound(h, eps, sigma_max)
}

/// Runs the oscillatory scheme to `s = params.final_time()`. `data.gamma` is the
/// `t`-velocity; the `eps^{-beta}` factor of the `s`-velocity sits inside `q`.
pub fn run_oscillatory(
    params: &OscParams,
    grid: &Arc<Grid>,
    data: &InitialData,
    config: &RunConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<RunOutput> {
    let coeffs = Arc::new(bar_coefficients(params.k, grid, params.eps, params.beta));
    integrate(coeffs, params.steps(), grid, data, config, observers)
}

/// `max(0, 3 beta / 2 - 1)`.
pub fn alpha_star(beta: f64) -> f64 {
    (1.5 * beta - 1.0).max(0.0)
}

/// Errors measured on a pilot problem, used to fix the constants of the model
/// `C_s h^p + C_t eps^{-2 alpha*} k^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotMeasurement {
    pub eps: f64,
    /// Spatial error at mesh size `h` (time error negligible).
    pub h: f64,
    pub spatial_error: f64,
    /// Observed spatial order `p`.
    pub space_order: f64,
    /// Temporal error at step `k` (spatial error negligible).
    pub k: f64,
    pub temporal_error: f64,
}

/// `h = (delta0 / (2 C_s))^{1/p}` and `k(eps) = eps^{alpha*} sqrt(delta0 / (2 C_t))`,
/// which split the error budget `delta0` evenly between space and time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshingPlan {
    pub beta: f64,
    pub alpha_star: f64,
    pub delta0: f64,
    pub c_space: f64,
    pub space_order: f64,
    pub c_time: f64,
}

impl MeshingPlan {
    pub fn h(&self) -> f64 {
        (self.delta0 / (2.0 * self.c_space)).powf(1.0 / self.space_order)
    }

    pub fn k(&self, eps: f64) -> f64 {
        eps.powf(self.alpha_star) * self.k0()
    }

    /// `k` at `eps = 1`.
    pub fn k0(&self) -> f64 {
        (self.delta0 / (2.0 * self.c_time)).sqrt()
    }

    /// Error predicted by the calibrated model.
    pub fn predicted_error(&self, eps: f64, h: f64, k: f64) -> f64 {
        self.c_space * h.powf(self.space_order) + self.c_time * eps.powf(-2.0 * self.alpha_star) * k * k
    }
}

pub fn meshing_plan(beta: f64, delta0: f64, pilot: &PilotMeasurement) -> Result<MeshingPlan> {
    if !(0.0..=2.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!("beta must lie in [0, 2], got {beta}")));
    }
    if !(delta0 > 0.0) {
        return Err(Error::InvalidParameter(format!("accuracy target must be positive, got {delta0}")));
    }
    let p = pilot;
    if !(p.spatial_error > 0.0 && p.temporal_error > 0.0 && p.space_order > 0.0 && p.h > 0.0 && p.k > 0.0) {
        return Err(Error::InvalidParameter("pilot errors, order and mesh sizes must be positive".into()));
    }
    let a = alpha_star(beta);
    Ok(MeshingPlan {
        beta,
        alpha_star: a,
        delta0,
        c_space: p.spatial_error / p.h.powf(p.space_order),
        space_order: p.space_order,
        c_time: p.temporal_error * p.eps.powf(2.0 * a) / (p.k * p.k),
    })
}

/// Boundary-zone mass fraction above which a truncation warning is raised.
pub const LEAK_WARNING: f64 = 1e-8;

/// The periodic box `[-4 - eps^{-beta}, 4 + eps^{-beta}]` for whole-space data.
#[derive(Debug, Clone)]
pub struct TruncatedDomain {
    pub eps: f64,
    pub beta: f64,
    pub grid: Arc<Grid>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakReport {
    /// Fraction of `sum v_j^2` carried by nodes within one unit of the boundary.
    pub fraction: f64,
    pub warned: bool,
}

pub fn truncate_domain(eps: f64, beta: f64, target_h: f64) -> Result<TruncatedDomain> {
    if !(eps > 0.0 && eps <= 1.0) || !(0.0..=2.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!("need eps in (0, 1] and beta in [0, 2], got {eps}, {beta}")));
    }
    let half = 4.0 + eps.powf(-beta);
    let grid = Arc::new(Grid::with_max_spacing(-half, half, target_h)?);
    Ok(TruncatedDomain { eps, beta, grid })
}

impl TruncatedDomain {
    pub fn half_width(&self) -> f64 {
        self.grid.b()
    }

    pub fn leak_report(&self, field: &SpectralField) -> Result<LeakReport> {
        let fraction = boundary_mass_fraction(field, 1.0)?;
        let warned = fraction > LEAK_WARNING;
        if warned {
            log::warn!(
                "truncated domain [{}, {}]: boundary-zone mass fraction {fraction:.3e} exceeds {LEAK_WARNING:e}",
                self.grid.a(),
                self.grid.b()
            );
        }
        Ok(LeakReport { fraction, warned })
    }
}

/// Share of the discrete mass `sum v_j^2` on nodes within `zone` of either end.
pub fn boundary_mass_fraction(field: &SpectralField, zone: f64) -> Result<f64> {
    let grid = field.grid();
    let nodes = inverse_transform(field)?;
    let (mut edge, mut total) = (0.0, 0.0);
    for (&x, &v) in grid.nodes().iter().zip(nodes.values()) {
        let w = v * v;
        total += w;
        if x - grid.a() <= zone || grid.b() - x <= zone {
            edge += w;
        }
    }
    Ok(if total > 0.0 { edge / total } else { 0.0 })
}
