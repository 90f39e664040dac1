//! Linearized stability analysis of the leapfrog recurrence.
//!
//! Replacing the cubic term by `sigma u` turns each mode into
//! `u^{n+1} = 2 theta_l u^n - u^{n-1}` with `theta_l = p_l + sigma r_l`, whose
//! companion matrix has spectral radius `|theta| + sqrt(theta^2 - 1)` when
//! `|theta| > 1` and 1 otherwise.

use crate::ewi::{ewi_coefficients, EwiCoefficients};
use crate::oscillatory::bar_coefficients;
use crate::spectral::Grid;

/// `theta_l = p_l + sigma r_l` per mode.
pub fn linearized_theta(coeffs: &EwiCoefficients, sigma: f64) -> Vec<f64> {
    coeffs.p().iter().zip(coeffs.r()).map(|(p, r)| p + sigma * r).collect()
}

/// Spectral radius of `[[2 theta, -1], [1, 0]]`.
pub fn amplification(theta: f64) -> f64 {
    let t = theta.abs();
    if t <= 1.0 {
        1.0
    } else {
        t + (t * t - 1.0).sqrt()
    }
}

/// Largest `|xi_l|` over all modes.
pub fn max_amplification(coeffs: &EwiCoefficients, sigma: f64) -> f64 {
    linearized_theta(coeffs, sigma).into_iter().map(amplification).fold(0.0, f64::max)
}

/// Iterates every mode from `(u^0, u^1) = (0, 1)` for `steps` steps and returns the
/// largest `|u^steps|`. Bounded recurrences grow at most linearly in `steps`.
pub fn linearized_growth(coeffs: &EwiCoefficients, sigma: f64, steps: usize) -> f64 {
    linearized_theta(coeffs, sigma)
        .into_iter()
        .map(|theta| {
            let (mut prev, mut curr) = (0.0f64, 1.0f64);
            for _ in 1..steps {
                let next = 2.0 * theta * curr - prev;
                prev = curr;
                curr = next;
                if !curr.is_finite() {
                    return f64::INFINITY;
                }
            }
            curr.abs()
        })
        .fold(0.0, f64::max)
}

/// Coefficient tables for the weak form (`beta = 0`) or the oscillatory form.
pub fn probe_coefficients(step: f64, grid: &Grid, eps: f64, beta: f64) -> EwiCoefficients {
    if beta == 0.0 {
        ewi_coefficients(step, grid, eps)
    } else {
        bar_coefficients(step, grid, eps, beta)
    }
}

/// Outcome of probing the linearized scheme around the sufficient step bound.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityProbe {
    pub h: f64,
    pub eps: f64,
    pub beta: f64,
    pub sigma: f64,
    pub bound: f64,
    pub steps: usize,
    /// `linearized_growth` at `0.99 bound` and `1.01 bound`.
    pub growth_below: f64,
    pub growth_above: f64,
    /// Smallest unstable step found in `(0, search_limit]`, if any.
    pub threshold: Option<f64>,
    pub search_limit: f64,
}

impl StabilityProbe {
    pub fn bounded_below(&self) -> bool {
        self.growth_below <= self.steps as f64
    }

    pub fn bounded_above(&self) -> bool {
        self.growth_above <= self.steps as f64
    }

    /// Bounded at `0.99 bound` and geometric growth at `1.01 bound`.
    pub fn dichotomy(&self) -> bool {
        self.bounded_below() && !self.bounded_above()
    }
}

/// Probes the linearized scheme on `grid` at `sigma`: growth just below and above
/// the bound for mesh size `h`, and the first unstable step by a scan of 400
/// points up to four times the bound followed by bisection.
pub fn probe_stability(h: f64, grid: &Grid, eps: f64, beta: f64, sigma: f64, steps: usize) -> StabilityProbe {
    let coeffs = |step: f64| probe_coefficients(step, grid, eps, beta);
    let bound = coeffs(1.0).stability_bound(h, sigma);
    let unstable = |step: f64| max_amplification(&coeffs(step), sigma) > 1.0 + 1e-12;

    let search_limit = 4.0 * bound;
    let samples = 400;
    let mut threshold = None;
    let mut lo = 0.0;
    for i in 1..=samples {
        let hi = search_limit * i as f64 / samples as f64;
        if unstable(hi) {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if unstable(mid) {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            threshold = Some(b);
            break;
        }
        lo = hi;
    }

    StabilityProbe {
        h,
        eps,
        beta,
        sigma,
        bound,
        steps,
        growth_below: linearized_growth(&coeffs(0.99 * bound), sigma, steps),
        growth_above: linearized_growth(&coeffs(1.01 * bound), sigma, steps),
        threshold,
        search_limit,
    }
}
