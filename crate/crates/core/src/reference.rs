//! Strang time-splitting Fourier pseudospectral integrator used as the
//! reference oracle, plus an on-disk cache of reference trajectories.
//!
//! The equation is written as the first-order system `u_t = v`,
//! `v_t = u_xx - u - eps^2 u^3`. The linear part is a per-mode rotation and the
//! nonlinear part (`u` frozen, `v_t = -eps^2 u^3`) is a kick; both are solved
//! exactly and composed as half kick, full rotation, half kick.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{InitialData, InitialDataTag};
use crate::error::{Error, Result};
use crate::ewi::InitialProjection;
use crate::spectral::{sobolev_norm, Grid, SpectralField, Workspace};
use crate::trajectory::{rescale_time, Snapshot, Trajectory};

/// Position and velocity coefficients at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub u: SpectralField,
    pub v: SpectralField,
    pub t: f64,
}

impl PhaseState {
    pub fn new(u: SpectralField, v: SpectralField, t: f64) -> Result<Self> {
        u.check_same_grid(&v)?;
        Ok(PhaseState { u, v, t })
    }
}

/// Exact flow of `u_tt = u_xx - u` over a (possibly negative) duration `s`.
pub fn linear_flow(state: &PhaseState, s: f64) -> PhaseState {
    let grid = state.u.grid();
    let mut u = state.u.clone();
    let mut v = state.v.clone();
    for (k, &z) in grid.zeta().iter().enumerate() {
        let (sn, cs) = (s * z).sin_cos();
        let (a, b) = (state.u.coeffs()[k], state.v.coeffs()[k]);
        u.coeffs_mut()[k] = a * cs + b * (sn / z);
        v.coeffs_mut()[k] = -a * (z * sn) + b * cs;
    }
    PhaseState { u, v, t: state.t + s }
}

/// Exact flow of `v_t = -eps^2 u^3` with `u` frozen, evaluated at the nodes.
pub fn nonlinear_flow(state: &PhaseState, s: f64, eps: f64) -> Result<PhaseState> {
    let grid = state.u.grid();
    let nodes = crate::spectral::inverse_transform(&state.u)?;
    let cube: Vec<f64> = nodes.values().iter().map(|x| x * x * x).collect();
    let f = crate::spectral::forward_coefficients(&crate::spectral::NodalField::new(grid.clone(), cube)?);
    let mut v = state.v.clone();
    let w = s * eps * eps;
    for (c, d) in v.coeffs_mut().iter_mut().zip(f.coeffs()) {
        *c -= d * w;
    }
    Ok(PhaseState { u: state.u.clone(), v, t: state.t })
}

/// One Strang step `N(tau/2) L(tau) N(tau/2)`.
pub fn strang_step(state: &PhaseState, tau: f64, eps: f64) -> Result<PhaseState> {
    let half = nonlinear_flow(state, tau / 2.0, eps)?;
    let rotated = linear_flow(&half, tau);
    nonlinear_flow(&rotated, tau / 2.0, eps)
}

fn two_product(x: f64, y: f64) -> (f64, f64) {
    let p = x * y;
    (p, x.mul_add(y, -p))
}

/// `(cos, sin/zeta, zeta sin)` of `tau zeta`, nudged by a few ulps so that the
/// determinant `cos^2 + (sin/zeta)(zeta sin)` is as close to 1 as doubles allow.
/// A rounded determinant would otherwise act as a systematic per-step gain on
/// the linear invariant over long runs.
fn unimodular_rotation(tau: f64, z: f64) -> (f64, f64, f64) {
    let (s, c) = (tau * z).sin_cos();
    let (a0, b0) = (s / z, z * s);
    let nudge = |x: f64, k: i64| {
        if x == 0.0 || k == 0 {
            x
        } else {
            f64::from_bits((x.to_bits() as i64 + k) as u64)
        }
    };
    let defect = |c: f64, a: f64, b: f64| {
        let (p, pe) = two_product(c, c);
        let (q, qe) = two_product(a, b);
        ((p - 1.0) + q + (pe + qe)).abs()
    };
    let mut best = (defect(c, a0, b0), c, a0, b0);
    for i in -2..=2 {
        for j in -2..=2 {
            for k in -2..=2 {
                let (cc, aa, bb) = (nudge(c, i), nudge(a0, j), nudge(b0, k));
                let d = defect(cc, aa, bb);
                if d < best.0 {
                    best = (d, cc, aa, bb);
                }
            }
        }
    }
    (best.1, best.2, best.3)
}

/// In-place Strang integrator with precomputed rotation tables and fused
/// consecutive half kicks.
pub struct SplittingIntegrator {
    grid: Arc<Grid>,
    tau: f64,
    strength: f64,
    cos: Vec<f64>,
    /// `sin(tau zeta) / zeta` and `zeta sin(tau zeta)`.
    sin_over: Vec<f64>,
    sin_times: Vec<f64>,
    u: Vec<Complex64>,
    v: Vec<Complex64>,
    n: usize,
    ws: Workspace,
    nodes: Vec<f64>,
    cube: Vec<Complex64>,
}

impl SplittingIntegrator {
    pub fn new(state: &PhaseState, tau: f64, eps: f64) -> Self {
        let grid = state.u.grid().clone();
        let n = grid.modes();
        let (mut cos, mut sin_over, mut sin_times) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for &z in grid.zeta() {
            let (c, a, b) = unimodular_rotation(tau, z);
            cos.push(c);
            sin_over.push(a);
            sin_times.push(b);
        }
        SplittingIntegrator {
            ws: grid.workspace(),
            nodes: vec![0.0; grid.modes()],
            cube: vec![Complex64::default(); grid.modes()],
            u: state.u.coeffs().to_vec(),
            v: state.v.coeffs().to_vec(),
            n: 0,
            tau,
            strength: eps * eps,
            cos,
            sin_over,
            sin_times,
            grid,
        }
    }

    fn kick(&mut self, s: f64) -> Result<()> {
        if self.strength == 0.0 {
            return Ok(());
        }
        let residue = self.grid.inverse_into(&self.u, &mut self.nodes, &mut self.ws);
        let tolerance = crate::spectral::residue_tolerance(&self.u);
        if residue > tolerance {
            return Err(Error::ImaginaryResidue { residue, tolerance });
        }
        for x in self.nodes.iter_mut() {
            *x = *x * *x * *x;
        }
        self.grid.forward_into(&self.nodes, &mut self.cube, &mut self.ws);
        let w = s * self.strength;
        for (c, d) in self.v.iter_mut().zip(&self.cube) {
            *c -= d * w;
        }
        Ok(())
    }

    fn rotate(&mut self) {
        for k in 0..self.u.len() {
            let (a, b) = (self.u[k], self.v[k]);
            let cs = self.cos[k];
            self.u[k] = a * cs + b * self.sin_over[k];
            self.v[k] = -a * self.sin_times[k] + b * cs;
        }
    }

    /// Takes `steps` Strang steps, ending on a synchronized state.
    pub fn advance(&mut self, steps: usize) -> Result<()> {
        self.advance_until(steps, None)
    }

    /// As [`advance`](Self::advance), failing with `BudgetExceeded` once `deadline` passes.
    pub fn advance_until(&mut self, steps: usize, deadline: Option<Instant>) -> Result<()> {
        if steps == 0 {
            return Ok(());
        }
        self.kick(self.tau / 2.0)?;
        for i in 0..steps {
            self.rotate();
            self.kick(if i + 1 == steps { self.tau / 2.0 } else { self.tau })?;
            if i % 4096 == 4095 {
                if let Some(d) = deadline {
                    if Instant::now() > d {
                        return Err(Error::BudgetExceeded(format!(
                            "reference integration stopped after {} of {steps} steps",
                            i + 1
                        )));
                    }
                }
            }
        }
        self.n += steps;
        Ok(())
    }

    pub fn steps_taken(&self) -> usize {
        self.n
    }

    pub fn state(&self) -> PhaseState {
        PhaseState {
            u: SpectralField::new(self.grid.clone(), self.u.clone()).expect("integrator vectors match the grid"),
            v: SpectralField::new(self.grid.clone(), self.v.clone()).expect("integrator vectors match the grid"),
            t: self.n as f64 * self.tau,
        }
    }
}

/// Which equation a reference (or a study) is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    Weak,
    Oscillatory,
    WholeSpaceOscillatory,
}

impl Problem {
    pub fn as_str(self) -> &'static str {
        match self {
            Problem::Weak => "weak",
            Problem::Oscillatory => "oscillatory",
            Problem::WholeSpaceOscillatory => "whole-space-oscillatory",
        }
    }

    pub fn is_oscillatory(self) -> bool {
        self != Problem::Weak
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "weak" => Ok(Problem::Weak),
            "oscillatory" => Ok(Problem::Oscillatory),
            "whole-space-oscillatory" | "whole-space" => Ok(Problem::WholeSpaceOscillatory),
            other => Err(Error::InvalidParameter(format!("unknown problem '{other}'"))),
        }
    }
}

/// Equation, scaling parameters, initial data and periodic domain of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub problem: Problem,
    pub eps: f64,
    pub beta: f64,
    pub data: InitialDataTag,
    pub a: f64,
    pub b: f64,
}

impl ProblemSpec {
    /// The problem on its default domain: the torus for periodic problems and
    /// `[-4 - eps^{-beta}, 4 + eps^{-beta}]` for whole-space data.
    pub fn new(problem: Problem, eps: f64, beta: f64, data: InitialDataTag) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) || !(0.0..=2.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!("need eps in [0, 1], beta in [0, 2], got {eps}, {beta}")));
        }
        if eps == 0.0 && (beta != 0.0 || problem.is_oscillatory()) {
            return Err(Error::InvalidParameter("eps = 0 is only admitted for the weak problem with beta = 0".into()));
        }
        let (a, b) = match problem {
            Problem::WholeSpaceOscillatory => {
                let half = 4.0 + eps.powf(-beta);
                (-half, half)
            }
            _ => InitialDataTag::torus(),
        };
        Ok(ProblemSpec { problem, eps, beta, data, a, b })
    }

    pub fn weak(eps: f64, beta: f64) -> Result<Self> {
        Self::new(Problem::Weak, eps, beta, InitialDataTag::LongInitial)
    }

    pub fn with_domain(mut self, a: f64, b: f64) -> Self {
        self.a = a;
        self.b = b;
        self
    }

    /// `eps^beta` for oscillatory problems, 1 for the weak form.
    pub fn time_scale(&self) -> f64 {
        if self.problem.is_oscillatory() {
            self.eps.powf(self.beta)
        } else {
            1.0
        }
    }

    pub fn initial_data(&self) -> InitialData {
        self.data.data()
    }
}

/// A reference trajectory, its self-convergence residual and content hash.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub grid: Arc<Grid>,
    /// Snapshots in the problem's own time variable.
    pub trajectory: Trajectory,
    /// Largest H1 distance to the half-step rerun over the output times.
    pub residual: f64,
    pub key: [u8; 32],
}

impl ReferenceSolution {
    /// Short hex form of the key, as written into reports.
    pub fn hash(&self) -> String {
        hex::encode(&self.key[..8])
    }

    /// Fails with `ReferenceGate` unless `residual < 0.01 * coarsest_error`.
    pub fn check_gate(&self, coarsest_error: f64) -> Result<()> {
        let threshold = 0.01 * coarsest_error;
        if self.residual < threshold {
            Ok(())
        } else {
            Err(Error::ReferenceGate { residual: self.residual, threshold })
        }
    }
}

/// A reference to compute: problem, fine mode count `m_e`, fine step `tau_e`
/// (in the problem's own time variable) and output times.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRequest {
    pub spec: ProblemSpec,
    pub modes: usize,
    pub tau: f64,
    pub times: Vec<f64>,
    /// Refuse to return a reference whose residual exceeds this.
    pub max_residual: Option<f64>,
    /// Wall-clock limit; not part of the cache key.
    pub deadline: Option<Instant>,
}

impl ReferenceRequest {
    pub fn new(spec: ProblemSpec, modes: usize, tau: f64, times: Vec<f64>) -> Self {
        ReferenceRequest { spec, modes, tau, times, max_residual: None, deadline: None }
    }

    /// sha256 over a canonical rendering of every input that affects the result.
    pub fn cache_key(&self) -> [u8; 32] {
        let s = &self.spec;
        let mut text = format!(
            "kge-reference v{CACHE_VERSION}|{}|{:?}|{:?}|{}|{:?}|{:?}|{}|{:?}|",
            s.problem, s.eps, s.beta, s.data, s.a, s.b, self.modes, self.tau
        );
        for t in &self.times {
            text.push_str(&format!("{t:?},"));
        }
        Sha256::digest(text.as_bytes()).into()
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        crate::spectral::make_grid(self.spec.a, self.spec.b, self.modes)
    }
}

fn integrate_weak(
    grid: &Arc<Grid>,
    data: &InitialData,
    eps: f64,
    tau: f64,
    steps: &[usize],
    deadline: Option<Instant>,
) -> Result<Vec<PhaseState>> {
    let u0 = InitialProjection::Interpolate.apply(|x| data.phi(x), grid)?;
    let v0 = InitialProjection::Interpolate.apply(|x| data.gamma(x), grid)?;
    let mut integ = SplittingIntegrator::new(&PhaseState::new(u0, v0, 0.0)?, tau, eps);
    let mut out = Vec::with_capacity(steps.len());
    for &n in steps {
        if n < integ.steps_taken() {
            return Err(Error::InvalidParameter("output times must be nondecreasing".into()));
        }
        integ.advance_until(n - integ.steps_taken(), deadline)?;
        out.push(integ.state());
    }
    Ok(out)
}

/// Runs the splitting method at `tau_e` and `tau_e / 2` and returns the
/// `tau_e` trajectory with the H1 residual between the two. Oscillatory
/// problems are integrated in the weak form with step `tau_e eps^{-beta}` and
/// relabeled by `s = eps^beta t`.
pub fn reference_solution(req: &ReferenceRequest) -> Result<ReferenceSolution> {
    if !(req.tau > 0.0) {
        return Err(Error::InvalidParameter(format!("reference step must be positive, got {}", req.tau)));
    }
    if req.times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidParameter("output times must be nonnegative".into()));
    }
    let grid = req.grid()?;
    let spec = &req.spec;
    let data = spec.initial_data();
    let scale = spec.time_scale();
    let weak_tau = req.tau / scale;
    let steps: Vec<usize> = req.times.iter().map(|t| (t / req.tau).round() as usize).collect();
    for (t, n) in req.times.iter().zip(&steps) {
        if (*n as f64 * req.tau - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "output time {t} is not a multiple of the reference step {}",
                req.tau
            )));
        }
    }

    let coarse = integrate_weak(&grid, &data, spec.eps, weak_tau, &steps, req.deadline)?;
    let doubled: Vec<usize> = steps.iter().map(|n| 2 * n).collect();
    let fine = integrate_weak(&grid, &data, spec.eps, weak_tau / 2.0, &doubled, req.deadline)?;
    let mut residual: f64 = 0.0;
    for (c, f) in coarse.iter().zip(&fine) {
        residual = residual.max(sobolev_norm(&c.u.sub(&f.u)?, 1)?);
    }
    if let Some(max) = req.max_residual {
        if !(residual <= max) {
            return Err(Error::ReferenceGate { residual, threshold: max });
        }
    }

    let weak = Trajectory::new(
        coarse
            .into_iter()
            .zip(&steps)
            .map(|(s, &n)| Snapshot { time: n as f64 * weak_tau, u: s.u, ut: Some(s.v) })
            .collect(),
    );
    let mut trajectory = if spec.problem.is_oscillatory() { rescale_time(&weak, spec.eps, spec.beta)? } else { weak };
    for (snap, &t) in trajectory.snapshots.iter_mut().zip(&req.times) {
        snap.time = t;
    }
    Ok(ReferenceSolution { grid, trajectory, residual, key: req.cache_key() })
}

const CACHE_MAGIC: &[u8; 8] = b"KGEREF\0\0";
const CACHE_VERSION: u32 = 2;

/// Directory of cached reference trajectories, one file per content hash.
///
/// File layout (little-endian): magic `KGEREF\0\0`, `u32` version, 32-byte key,
/// `f64` a, `f64` b, `u64` M, `u64` snapshot count, `f64` residual, then per
/// snapshot an `f64` time followed by `M` (re, im) `f64` pairs for `u` and `M`
/// pairs for `u_t`, both in mode order `l = -M/2 .. M/2 - 1`.
#[derive(Debug, Clone)]
pub struct ReferenceCache {
    dir: PathBuf,
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReferenceCache { dir: dir.into() }
    }

    /// `$KGE_CACHE_DIR`, or `kge-cache` under the system temp directory.
    pub fn from_env() -> Self {
        match std::env::var_os("KGE_CACHE_DIR") {
            Some(d) if !d.is_empty() => Self::new(d),
            _ => Self::new(std::env::temp_dir().join("kge-cache")),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &[u8; 32]) -> PathBuf {
        self.dir.join(format!("{}.kgeref", hex::encode(key)))
    }

    pub fn load(&self, key: &[u8; 32]) -> Result<Option<ReferenceSolution>> {
        let path = self.path_for(key);
        match File::open(&path) {
            Ok(f) => read_reference(&mut BufReader::new(f), key).map(Some),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Writes to a temporary file in the cache directory and renames it into place.
    pub fn store(&self, reference: &ReferenceSolution) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(&reference.key);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        {
            let mut w = BufWriter::new(tmp.as_file_mut());
            write_reference(&mut w, reference)?;
            w.flush()?;
        }
        tmp.persist(&path).map_err(|e| Error::Cache(format!("publishing {}: {}", path.display(), e.error)))?;
        Ok(path)
    }

    /// Cached reference for `req`, computing and publishing it on a miss.
    pub fn get_or_compute(&self, req: &ReferenceRequest) -> Result<ReferenceSolution> {
        let key = req.cache_key();
        match self.load(&key) {
            Ok(Some(r)) => {
                if let Some(max) = req.max_residual {
                    if !(r.residual <= max) {
                        return Err(Error::ReferenceGate { residual: r.residual, threshold: max });
                    }
                }
                return Ok(r);
            }
            Ok(None) => {}
            Err(e) => log::warn!("ignoring unreadable cache entry {}: {e}", self.path_for(&key).display()),
        }
        let r = reference_solution(req)?;
        self.store(&r)?;
        Ok(r)
    }
}

fn put_f64(w: &mut impl Write, x: f64) -> Result<()> {
    Ok(w.write_all(&x.to_le_bytes())?)
}

fn put_coeffs(w: &mut impl Write, c: &[Complex64]) -> Result<()> {
    for z in c {
        put_f64(w, z.re)?;
        put_f64(w, z.im)?;
    }
    Ok(())
}

pub fn write_reference(w: &mut impl Write, r: &ReferenceSolution) -> Result<()> {
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&r.key)?;
    put_f64(w, r.grid.a())?;
    put_f64(w, r.grid.b())?;
    w.write_all(&(r.grid.modes() as u64).to_le_bytes())?;
    w.write_all(&(r.trajectory.len() as u64).to_le_bytes())?;
    put_f64(w, r.residual)?;
    for s in &r.trajectory.snapshots {
        put_f64(w, s.time)?;
        put_coeffs(w, s.u.coeffs())?;
        let ut = s.ut.as_ref().ok_or_else(|| Error::Cache("reference snapshot without velocity".into()))?;
        put_coeffs(w, ut.coeffs())?;
    }
    Ok(())
}

fn get<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_le_bytes(get::<8>(r)?))
}

fn get_u64(r: &mut impl Read) -> Result<u64> {
    Ok(u64::from_le_bytes(get::<8>(r)?))
}

fn get_field(r: &mut impl Read, grid: &Arc<Grid>) -> Result<SpectralField> {
    let mut c = Vec::with_capacity(grid.modes());
    for _ in 0..grid.modes() {
        let re = get_f64(r)?;
        let im = get_f64(r)?;
        c.push(Complex64::new(re, im));
    }
    SpectralField::new(grid.clone(), c)
}

/// Parses a cache file, checking magic, version and that the stored key is `key`.
pub fn read_reference(r: &mut impl Read, key: &[u8; 32]) -> Result<ReferenceSolution> {
    if &get::<8>(r)? != CACHE_MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let version = u32::from_le_bytes(get::<4>(r)?);
    if version != CACHE_VERSION {
        return Err(Error::Cache(format!("unsupported cache version {version}")));
    }
    let stored = get::<32>(r)?;
    if &stored != key {
        return Err(Error::Cache("key mismatch".into()));
    }
    let a = get_f64(r)?;
    let b = get_f64(r)?;
    let m = get_u64(r)? as usize;
    let count = get_u64(r)? as usize;
    let residual = get_f64(r)?;
    let grid = crate::spectral::make_grid(a, b, m)?;
    let mut snapshots = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let time = get_f64(r)?;
        let u = get_field(r, &grid)?;
        let ut = get_field(r, &grid)?;
        snapshots.push(Snapshot { time, u, ut: Some(ut) });
    }
    Ok(ReferenceSolution { grid, trajectory: Trajectory::new(snapshots), residual, key: stored })
}
