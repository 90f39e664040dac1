//! Gautschi-type exponential wave integrator with Fourier pseudospectral
//! discretization (EWI-FP) for
//!
//! ```text
//! u_tt - u_xx + u + eps^2 u^3 = 0      on a periodic interval,
//! u(x, 0) = phi(x),  u_t(x, 0) = gamma(x).
//! ```
//!
//! Each mode is advanced by the two-level recurrence
//!
//! ```text
//! c^1_l     = p_l phi_l + q_l gamma_l + r_l f(phi)_l
//! c^{n+1}_l = -c^{n-1}_l + 2 p_l c^n_l + 2 r_l f(u^n)_l
//! ```
//!
//! with `p_l = cos(tau zeta_l)`, `q_l = sin(tau zeta_l)/zeta_l` and
//! `r_l = eps^2 (cos(tau zeta_l) - 1)/zeta_l^2`, where `f(u)_l` are the
//! interpolation coefficients of the nodal cube. The update is explicit, time
//! symmetric and exact for `eps = 0`.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;

use crate::data::InitialData;
use crate::error::{Error, Result};
use crate::spectral::{
    forward_coefficients, project_initial, residue_tolerance, Grid, NodalField, SpectralField, Workspace,
    DEFAULT_REFINEMENT,
};

/// Nodal sup-norm above which a run is declared unstable.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

/// Parameters of a weak-nonlinearity run up to `t0 / eps^beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub eps: f64,
    pub beta: f64,
    pub tau: f64,
    pub t0: f64,
}

impl SolverParams {
    /// `eps = 0` is admitted (linear limit) only together with `beta = 0`.
    pub fn new(eps: f64, beta: f64, tau: f64, t0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidParameter(format!("eps must lie in [0, 1], got {eps}")));
        }
        if !(0.0..=2.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!("beta must lie in [0, 2], got {beta}")));
        }
        if eps == 0.0 && beta != 0.0 {
            return Err(Error::InvalidParameter("eps = 0 requires beta = 0 (infinite horizon)".into()));
        }
        if !(tau > 0.0) || !(t0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time step and horizon must be positive, got tau = {tau}, t0 = {t0}"
            )));
        }
        Ok(SolverParams { eps, beta, tau, t0 })
    }

    /// `t0 / eps^beta`.
    pub fn horizon(&self) -> f64 {
        if self.beta == 0.0 {
            self.t0
        } else {
            self.t0 / self.eps.powf(self.beta)
        }
    }

    /// `N = round(horizon / tau)`; the run ends at `N * tau`.
    pub fn steps(&self) -> usize {
        (self.horizon() / self.tau).round() as usize
    }

    pub fn final_time(&self) -> f64 {
        self.steps() as f64 * self.tau
    }
}

/// Per-mode tables `p_l, q_l, r_l` of the recurrence, plus the metadata needed to
/// evaluate the matching stability bound.
#[derive(Debug, Clone, PartialEq)]
pub struct EwiCoefficients {
    step: f64,
    strength: f64,
    time_scale: f64,
    p: Vec<f64>,
    q: Vec<f64>,
    r: Vec<f64>,
}

/// Coefficients for the weak-nonlinearity equation with cubic strength `eps^2`.
pub fn ewi_coefficients(tau: f64, grid: &Grid, eps: f64) -> EwiCoefficients {
    EwiCoefficients::with_strength(tau, grid, eps * eps)
}

impl EwiCoefficients {
    /// Coefficients for `u_tt - u_xx + u + strength * u^3 = 0`.
    pub fn with_strength(tau: f64, grid: &Grid, strength: f64) -> Self {
        let n = grid.modes();
        let (mut p, mut q, mut r) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for &z in grid.zeta() {
            let (s, c) = (tau * z).sin_cos();
            p.push(c);
            q.push(s / z);
            r.push(strength * (c - 1.0) / (z * z));
        }
        EwiCoefficients { step: tau, strength, time_scale: 1.0, p, q, r }
    }

    pub(crate) fn from_tables(step: f64, strength: f64, time_scale: f64, p: Vec<f64>, q: Vec<f64>, r: Vec<f64>) -> Self {
        EwiCoefficients { step, strength, time_scale, p, q, r }
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    /// Time step the tables were built for (in the equation's own time variable).
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Coefficient of the cubic term.
    pub fn strength(&self) -> f64 {
        self.strength
    }

    /// `eps^beta` for the oscillatory scaling, 1 otherwise.
    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Largest admissible step for the linearized scheme at this `sigma_max`.
    pub fn stability_bound(&self, h: f64, sigma_max: f64) -> f64 {
        self.time_scale * bound_with_strength(h, self.strength, sigma_max)
    }
}

fn bound_with_strength(h: f64, strength: f64, sigma_max: f64) -> f64 {
    2.0 * h / (PI * PI + h * h * (1.0 + strength * sigma_max)).sqrt()
}

/// `2h / sqrt(pi^2 + h^2 (1 + eps^2 sigma_max))`.
///
/// Sufficient for `|xi_l| <= 1` on every mode of the linearized recurrence. It is
/// close to sharp only when `eps^2 sigma_max` dominates `zeta_max^2`; for
/// `sigma_max = 0` the linear scheme is stable for every step size.
pub fn stability_bound(h: f64, eps: f64, sigma_max: f64) -> f64 {
    bound_with_strength(h, eps * eps, sigma_max)
}

struct Padded {
    grid: Grid,
    ws: Workspace,
    coeffs: Vec<Complex64>,
    nodes: Vec<f64>,
}

/// Evaluates the interpolation coefficients of the nodal cube.
struct CubicTerm {
    ws: Workspace,
    cube: Vec<f64>,
    out: Vec<Complex64>,
    padded: Option<Padded>,
}

impl CubicTerm {
    fn new(grid: &Grid, dealias: bool) -> Result<Self> {
        let padded = if dealias {
            let pg = Grid::new(grid.a(), grid.b(), 2 * grid.modes())?;
            Some(Padded {
                ws: pg.workspace(),
                coeffs: vec![Complex64::default(); pg.modes()],
                nodes: vec![0.0; pg.modes()],
                grid: pg,
            })
        } else {
            None
        };
        Ok(CubicTerm {
            ws: grid.workspace(),
            cube: vec![0.0; grid.modes()],
            out: vec![Complex64::default(); grid.modes()],
            padded,
        })
    }

    fn eval(&mut self, grid: &Grid, coeffs: &[Complex64], nodes: &[f64]) -> &[Complex64] {
        match &mut self.padded {
            None => {
                for (c, &u) in self.cube.iter_mut().zip(nodes) {
                    *c = u * u * u;
                }
                grid.forward_into(&self.cube, &mut self.out, &mut self.ws);
            }
            Some(pad) => {
                // Zero-pad to 2M modes; the lone Nyquist mode is split over +-M/2 so
                // the padded field stays real.
                let m = grid.modes();
                let half = (m / 2) as i64;
                pad.coeffs.iter_mut().for_each(|c| *c = Complex64::default());
                for (k, &c) in coeffs.iter().enumerate() {
                    let l = grid.mode(k);
                    if l == -half {
                        pad.coeffs[pad.grid.slot(-half).unwrap()] = c * 0.5;
                        pad.coeffs[pad.grid.slot(half).unwrap()] = c * 0.5;
                    } else {
                        pad.coeffs[pad.grid.slot(l).unwrap()] = c;
                    }
                }
                pad.grid.inverse_into(&pad.coeffs, &mut pad.nodes, &mut pad.ws);
                for u in pad.nodes.iter_mut() {
                    *u = *u * *u * *u;
                }
                let nodes = std::mem::take(&mut pad.nodes);
                pad.grid.forward_into(&nodes, &mut pad.coeffs, &mut pad.ws);
                pad.nodes = nodes;
                for (k, o) in self.out.iter_mut().enumerate() {
                    let l = grid.mode(k);
                    *o = pad.coeffs[pad.grid.slot(l).unwrap()];
                    if l == -half {
                        *o += pad.coeffs[pad.grid.slot(half).unwrap()];
                    }
                }
            }
        }
        &self.out
    }
}

/// Two-level leapfrog state holding the coefficient vectors of levels `n - 1`
/// and `n`, the nodal values of level `n`, and the running `sigma_max`.
pub struct EwiState {
    grid: Arc<Grid>,
    coeffs: Arc<EwiCoefficients>,
    prev: Vec<Complex64>,
    curr: Vec<Complex64>,
    curr_nodes: Vec<f64>,
    n: usize,
    backward: bool,
    sigma_max: f64,
    ws: Workspace,
    cubic: CubicTerm,
}

impl EwiState {
    /// Builds levels 0 and 1 from the initial coefficient vectors.
    pub fn start(
        phi: &SpectralField,
        gamma: &SpectralField,
        coeffs: Arc<EwiCoefficients>,
        dealias: bool,
    ) -> Result<Self> {
        phi.check_same_grid(gamma)?;
        let grid = phi.grid().clone();
        if coeffs.len() != grid.modes() {
            return Err(Error::GridMismatch(format!(
                "coefficient tables have {} modes, grid has {}",
                coeffs.len(),
                grid.modes()
            )));
        }
        let mut state = EwiState {
            ws: grid.workspace(),
            cubic: CubicTerm::new(&grid, dealias)?,
            prev: Vec::new(),
            curr: phi.coeffs().to_vec(),
            curr_nodes: vec![0.0; grid.modes()],
            n: 0,
            backward: false,
            sigma_max: 0.0,
            grid,
            coeffs,
        };
        state.synthesize()?;

        let f = state.cubic.eval(&state.grid, &state.curr, &state.curr_nodes);
        let (p, q, r) = (&state.coeffs.p, &state.coeffs.q, &state.coeffs.r);
        let next: Vec<Complex64> = (0..state.curr.len())
            .map(|k| state.curr[k] * p[k] + gamma.coeffs()[k] * q[k] + f[k] * r[k])
            .collect();
        state.prev = std::mem::replace(&mut state.curr, next);
        state.n = 1;
        state.synthesize()?;
        Ok(state)
    }

    /// Advances one level (or goes back one level on a reversed state).
    pub fn leapfrog_step(&mut self) -> Result<()> {
        let f = self.cubic.eval(&self.grid, &self.curr, &self.curr_nodes);
        let (p, r) = (&self.coeffs.p, &self.coeffs.r);
        for k in 0..self.curr.len() {
            let next = -self.prev[k] + self.curr[k] * (2.0 * p[k]) + f[k] * (2.0 * r[k]);
            self.prev[k] = self.curr[k];
            self.curr[k] = next;
        }
        if self.backward {
            self.n -= 1;
        } else {
            self.n += 1;
        }
        self.synthesize()
    }

    /// Swaps the two levels so that further steps run the recurrence backwards.
    ///
    /// A state holding `(u^{n-1}, u^n)` becomes one holding `(u^n, u^{n-1})`
    /// with current level index `n - 1`.
    pub fn reversed(mut self) -> Result<Self> {
        std::mem::swap(&mut self.prev, &mut self.curr);
        self.backward = !self.backward;
        self.n = if self.backward { self.n - 1 } else { self.n + 1 };
        self.synthesize()?;
        Ok(self)
    }

    fn synthesize(&mut self) -> Result<()> {
        let residue = self.grid.inverse_into(&self.curr, &mut self.curr_nodes, &mut self.ws);
        let sup = self.curr_nodes.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !(sup <= BLOWUP_THRESHOLD) {
            let sigma_max = self.sigma_max;
            return Err(Error::Instability {
                step: self.n,
                sup_norm: sup,
                step_size: self.coeffs.step,
                bound: self.coeffs.stability_bound(self.grid.h(), sigma_max),
                sigma_max,
            });
        }
        let tolerance = residue_tolerance(&self.curr);
        if residue > tolerance {
            return Err(Error::ImaginaryResidue { residue, tolerance });
        }
        self.sigma_max = self.sigma_max.max(sup * sup);
        Ok(())
    }

    /// Index of the current level.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn time(&self) -> f64 {
        self.n as f64 * self.coeffs.step
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coefficients(&self) -> &Arc<EwiCoefficients> {
        &self.coeffs
    }

    pub fn curr_coeffs(&self) -> &[Complex64] {
        &self.curr
    }

    pub fn prev_coeffs(&self) -> &[Complex64] {
        &self.prev
    }

    pub fn curr(&self) -> SpectralField {
        SpectralField::new(self.grid.clone(), self.curr.clone()).expect("state vectors match the grid")
    }

    pub fn prev(&self) -> SpectralField {
        SpectralField::new(self.grid.clone(), self.prev.clone()).expect("state vectors match the grid")
    }

    /// Nodal values of the current level.
    pub fn curr_nodes(&self) -> &[f64] {
        &self.curr_nodes
    }

    /// Running maximum of `||u^n||_{l^inf}^2` over all levels synthesized so far.
    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }
}

/// Level-1 coefficients from the initial data.
pub fn first_step(phi: &SpectralField, gamma: &SpectralField, coeffs: &EwiCoefficients) -> Result<SpectralField> {
    Ok(EwiState::start(phi, gamma, Arc::new(coeffs.clone()), false)?.curr())
}

/// Energy `int [u_t^2 + u_x^2 + u^2 + (eps^2/2) u^4] dx` with the quadratic terms
/// summed in Fourier space and the quartic term by the nodal trapezoid rule.
pub fn energy(u: &SpectralField, u_t: &SpectralField, eps: f64) -> Result<f64> {
    energy_with_strength(u, u_t, eps * eps)
}

/// Energy of `u_tt - u_xx + u + strength * u^3 = 0`.
pub fn energy_with_strength(u: &SpectralField, u_t: &SpectralField, strength: f64) -> Result<f64> {
    u.check_same_grid(u_t)?;
    let grid = u.grid();
    let len = grid.len();
    let quadratic: f64 = u
        .coeffs()
        .iter()
        .zip(u_t.coeffs())
        .zip(grid.mu())
        .map(|((c, v), &w)| (1.0 + w * w) * c.norm_sqr() + v.norm_sqr())
        .sum::<f64>()
        * len;
    let quartic = if strength == 0.0 {
        0.0
    } else {
        let nodes = crate::spectral::inverse_transform(u)?;
        nodes.values().iter().map(|v| v.powi(4)).sum::<f64>() * grid.h() * strength / 2.0
    };
    Ok(quadratic + quartic)
}

/// Maps a weak-nonlinearity trajectory `u` to `w = eps * u`, the solution of
/// `w_tt - w_xx + w + w^3 = 0` with data `(eps phi, eps gamma)`.
pub fn amplitude_rescale(trajectory: &[SpectralField], eps: f64) -> Result<Vec<SpectralField>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("amplitude rescaling needs eps > 0, got {eps}")));
    }
    Ok(trajectory.iter().map(|f| f.scaled(eps)).collect())
}

/// Exact solution of the linear equation (`eps = 0`) at time `t`.
pub fn exact_linear(phi: &SpectralField, gamma: &SpectralField, t: f64) -> Result<SpectralField> {
    phi.check_same_grid(gamma)?;
    let grid = phi.grid().clone();
    let coeffs = phi
        .coeffs()
        .iter()
        .zip(gamma.coeffs())
        .zip(grid.zeta())
        .map(|((a, b), &z)| {
            let (s, c) = (z * t).sin_cos();
            a * c + b * (s / z)
        })
        .collect();
    SpectralField::new(grid, coeffs)
}

/// How initial data are brought into the resolved space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialProjection {
    /// Interpolation at the nodes (EWI-FP).
    Interpolate,
    /// L2 projection approximated on a refined grid (EWI-FS).
    Project { refinement: usize },
}

impl InitialProjection {
    pub fn spectral() -> Self {
        InitialProjection::Project { refinement: DEFAULT_REFINEMENT }
    }

    pub fn apply(&self, f: impl Fn(f64) -> f64, grid: &Arc<Grid>) -> Result<SpectralField> {
        match *self {
            InitialProjection::Interpolate => Ok(forward_coefficients(&NodalField::from_fn(grid.clone(), f))),
            InitialProjection::Project { refinement } => project_initial(f, grid, refinement),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityPolicy {
    Ignore,
    Warn,
    Enforce,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub projection: InitialProjection,
    /// Zero-padded (alias-free) evaluation of the cubic term. Off by default; the
    /// method as defined interpolates the nodal cube.
    pub dealias: bool,
    pub stability: StabilityPolicy,
    /// A priori `sigma_max`; defaults to `(1 + ||phi||_inf)^2`.
    pub sigma_estimate: Option<f64>,
    pub deadline: Option<Instant>,
    pub max_steps: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            projection: InitialProjection::Interpolate,
            dealias: false,
            stability: StabilityPolicy::Warn,
            sigma_estimate: None,
            deadline: None,
            max_steps: None,
        }
    }
}

/// Hook invoked on the initial level and after every completed level.
pub trait Observer {
    fn start(&mut self, _u0: &SpectralField) -> Result<()> {
        Ok(())
    }

    fn observe(&mut self, state: &EwiState) -> Result<()>;
}

/// Stores every `stride`-th level.
#[derive(Debug, Clone)]
pub struct SnapshotObserver {
    stride: usize,
    pub snapshots: Vec<(usize, f64, SpectralField)>,
}

impl SnapshotObserver {
    pub fn new(stride: usize) -> Self {
        SnapshotObserver { stride: stride.max(1), snapshots: Vec::new() }
    }
}

impl Observer for SnapshotObserver {
    fn start(&mut self, u0: &SpectralField) -> Result<()> {
        self.snapshots.push((0, 0.0, u0.clone()));
        Ok(())
    }

    fn observe(&mut self, state: &EwiState) -> Result<()> {
        if state.n() % self.stride == 0 {
            self.snapshots.push((state.n(), state.time(), state.curr()));
        }
        Ok(())
    }
}

/// Records the energy at every `stride`-th level, with `u_t` reconstructed by the
/// centered difference `(u^{n+1} - u^{n-1}) / (2 tau)`. Energies are therefore
/// available from level 1 up to the second-to-last level.
pub struct EnergyObserver {
    stride: usize,
    strength: f64,
    time_scale: f64,
    older: Option<Vec<Complex64>>,
    pub history: Vec<(f64, f64)>,
}

impl EnergyObserver {
    /// `strength` is the cubic coefficient (`eps^2` for the weak equation).
    pub fn new(stride: usize, strength: f64) -> Self {
        EnergyObserver { stride: stride.max(1), strength, time_scale: 1.0, older: None, history: Vec::new() }
    }

    /// For the oscillatory equation, where the kinetic term carries `eps^{2 beta}`:
    /// pass `time_scale = eps^beta`.
    pub fn with_time_scale(mut self, time_scale: f64) -> Self {
        self.time_scale = time_scale;
        self
    }

    /// Largest relative deviation from the first recorded energy.
    pub fn relative_drift(&self) -> f64 {
        let Some(&(_, e0)) = self.history.first() else { return 0.0 };
        self.history.iter().map(|&(_, e)| ((e - e0) / e0).abs()).fold(0.0, f64::max)
    }
}

impl Observer for EnergyObserver {
    fn observe(&mut self, state: &EwiState) -> Result<()> {
        let level = state.n() - 1;
        if let Some(older) = &self.older {
            if level % self.stride == 0 {
                let dt = 2.0 * state.coefficients().step();
                let vel: Vec<Complex64> = state
                    .curr_coeffs()
                    .iter()
                    .zip(older)
                    .map(|(a, b)| (a - b) * (self.time_scale / dt))
                    .collect();
                let u = state.prev();
                let ut = SpectralField::new(state.grid().clone(), vel)?;
                let e = energy_with_strength(&u, &ut, self.strength)?;
                self.history.push((level as f64 * state.coefficients().step(), e));
            }
        }
        self.older = Some(state.prev_coeffs().to_vec());
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub steps: usize,
    pub final_time: f64,
    pub sigma_estimate: f64,
    pub sigma_max: f64,
    /// Step bound from the a priori `sigma_max` estimate.
    pub a_priori_bound: f64,
    /// Step bound from the running `sigma_max` at the end of the run.
    pub running_bound: f64,
    pub stable: bool,
    pub warnings: Vec<String>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub initial: SpectralField,
    pub initial_velocity: SpectralField,
    /// Level `N - 1` (absent for `N = 0`).
    pub penultimate: Option<SpectralField>,
    pub final_field: SpectralField,
    pub diagnostics: Diagnostics,
}

/// Runs the weak-nonlinearity scheme to `params.final_time()`.
pub fn run(
    params: &SolverParams,
    grid: &Arc<Grid>,
    data: &InitialData,
    config: &RunConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<RunOutput> {
    let coeffs = Arc::new(ewi_coefficients(params.tau, grid, params.eps));
    integrate(coeffs, params.steps(), grid, data, config, observers)
}

/// Drives the recurrence for `steps` levels with prebuilt coefficient tables.
pub fn integrate(
    coeffs: Arc<EwiCoefficients>,
    steps: usize,
    grid: &Arc<Grid>,
    data: &InitialData,
    config: &RunConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<RunOutput> {
    let started = Instant::now();
    if let Some(max) = config.max_steps {
        if steps > max {
            return Err(Error::BudgetExceeded(format!("{steps} steps requested, budget is {max}")));
        }
    }
    let phi = config.projection.apply(|x| data.phi(x), grid)?;
    let gamma = config.projection.apply(|x| data.gamma(x), grid)?;

    let phi_sup = crate::spectral::inverse_transform(&phi)?.sup_norm();
    let sigma_estimate = config.sigma_estimate.unwrap_or((1.0 + phi_sup).powi(2));
    let a_priori_bound = coeffs.stability_bound(grid.h(), sigma_estimate);
    let mut warnings = Vec::new();
    if coeffs.step() > a_priori_bound {
        let msg = format!(
            "time step {:.4e} exceeds the a priori stability bound {:.4e} (sigma_max ~ {:.3})",
            coeffs.step(),
            a_priori_bound,
            sigma_estimate
        );
        match config.stability {
            StabilityPolicy::Enforce => return Err(Error::InvalidParameter(msg)),
            StabilityPolicy::Warn => {
                log::warn!("{msg}");
                warnings.push(msg);
            }
            StabilityPolicy::Ignore => {}
        }
    }

    for obs in observers.iter_mut() {
        obs.start(&phi)?;
    }

    if steps == 0 {
        let sigma = phi_sup * phi_sup;
        let running_bound = coeffs.stability_bound(grid.h(), sigma);
        return Ok(RunOutput {
            final_field: phi.clone(),
            initial: phi,
            initial_velocity: gamma,
            penultimate: None,
            diagnostics: Diagnostics {
                steps: 0,
                final_time: 0.0,
                sigma_estimate,
                sigma_max: sigma,
                a_priori_bound,
                running_bound,
                stable: true,
                warnings,
                wall_seconds: started.elapsed().as_secs_f64(),
            },
        });
    }

    let mut state = EwiState::start(&phi, &gamma, coeffs.clone(), config.dealias)?;
    for obs in observers.iter_mut() {
        obs.observe(&state)?;
    }
    while state.n() < steps {
        state.leapfrog_step()?;
        for obs in observers.iter_mut() {
            obs.observe(&state)?;
        }
        if state.n() % 1024 == 0 {
            if let Some(deadline) = config.deadline {
                if Instant::now() > deadline {
                    return Err(Error::BudgetExceeded(format!(
                        "wall-clock budget exhausted at step {} of {steps}",
                        state.n()
                    )));
                }
            }
        }
    }

    let sigma_max = state.sigma_max();
    let running_bound = coeffs.stability_bound(grid.h(), sigma_max);
    let stable = coeffs.step() <= running_bound;
    if !stable && config.stability != StabilityPolicy::Ignore {
        let msg = format!(
            "time step {:.4e} exceeds the stability bound {:.4e} at the observed sigma_max {:.3}",
            coeffs.step(),
            running_bound,
            sigma_max
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(RunOutput {
        initial: phi,
        initial_velocity: gamma,
        penultimate: Some(state.prev()),
        final_field: state.curr(),
        diagnostics: Diagnostics {
            steps,
            final_time: state.time(),
            sigma_estimate,
            sigma_max,
            a_priori_bound,
            running_bound,
            stable,
            warnings,
            wall_seconds: started.elapsed().as_secs_f64(),
        },
    })
}
