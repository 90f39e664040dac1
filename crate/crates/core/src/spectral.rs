//! Periodic Fourier grids, trigonometric transforms and discrete Sobolev norms.
//!
//! Coefficients are always stored in mode order `l = -M/2, ..., M/2 - 1`; slot `k`
//! of a coefficient vector holds mode `l = k - M/2`. The FFT layout (mode `l` in
//! slot `l mod M`) never leaks out of this module.
//!
//! The forward transform is the discrete interpolation sum
//!
//! ```text
//! c_l = (1/M) sum_{j=0}^{M-1} u_j exp(-i mu_l (x_j - a)),   mu_l = 2 pi l / (b - a)
//! ```
//!
//! and the inverse is the synthesis `u_j = sum_l c_l exp(i mu_l (x_j - a))`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Relative tolerance on the imaginary residue of a nodal synthesis.
pub const RESIDUE_TOL: f64 = 1e-12;

/// Oversampling factor used by [`project_initial`].
pub const DEFAULT_REFINEMENT: usize = 16;

/// Uniform periodic grid on `[a, b)` with `M` nodes and the matching Fourier modes.
#[derive(Clone)]
pub struct Grid {
    a: f64,
    b: f64,
    m: usize,
    h: f64,
    nodes: Vec<f64>,
    mu: Vec<f64>,
    zeta: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("m", &self.m)
            .field("h", &self.h)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.same_domain(other)
    }
}

/// Builds a shared grid; see [`Grid::new`].
pub fn make_grid(a: f64, b: f64, m: usize) -> Result<Arc<Grid>> {
    Grid::new(a, b, m).map(Arc::new)
}

impl Grid {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::InvalidGrid(format!("need a < b, got a = {a}, b = {b}")));
        }
        if m < 4 || m % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "mode count must be even and >= 4, got {m}"
            )));
        }
        let len = b - a;
        let h = len / m as f64;
        let half = (m / 2) as i64;
        let nodes = (0..m).map(|j| a + j as f64 * h).collect();
        let mu: Vec<f64> = (0..m)
            .map(|k| 2.0 * PI * (k as i64 - half) as f64 / len)
            .collect();
        let zeta = mu.iter().map(|&w| (1.0 + w * w).sqrt()).collect();

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        Ok(Grid { a, b, m, h, nodes, mu, zeta, forward, inverse })
    }

    /// Smallest even `M >= 4` with `(b - a) / M <= h_target` (to within roundoff).
    pub fn with_max_spacing(a: f64, b: f64, h_target: f64) -> Result<Self> {
        if !(h_target > 0.0) {
            return Err(Error::InvalidGrid(format!("target mesh size must be positive, got {h_target}")));
        }
        let ratio = (b - a) / h_target;
        let mut m = (ratio * (1.0 - 1e-12)).ceil() as usize;
        if m % 2 == 1 {
            m += 1;
        }
        Grid::new(a, b, m.max(4))
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    /// Number of nodes (and of resolved modes).
    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Nodes `x_0 .. x_{M-1}`; the closing node `x_M = b` is implied by periodicity.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Wavenumbers `mu_l` in mode order.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Frequencies `zeta_l = sqrt(1 + mu_l^2)` in mode order.
    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    /// Mode number held in storage slot `k`.
    pub fn mode(&self, k: usize) -> i64 {
        k as i64 - (self.m / 2) as i64
    }

    /// Storage slot of mode `l`, if `l` is resolved.
    pub fn slot(&self, l: i64) -> Option<usize> {
        let k = l + (self.m / 2) as i64;
        (0..self.m as i64).contains(&k).then_some(k as usize)
    }

    pub fn same_domain(&self, other: &Grid) -> bool {
        let tol = 1e-12 * self.len().abs().max(1.0);
        (self.a - other.a).abs() <= tol && (self.b - other.b).abs() <= tol
    }

    /// Largest frequency on the grid (attained at `l = -M/2`).
    pub fn zeta_max(&self) -> f64 {
        self.zeta[0]
    }

    pub fn workspace(&self) -> Workspace {
        let scratch_len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        Workspace {
            buf: vec![Complex64::default(); self.m],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    /// Forward transform of real nodal values into mode-ordered coefficients.
    pub fn forward_into(&self, values: &[f64], out: &mut [Complex64], ws: &mut Workspace) {
        let m = self.m;
        debug_assert_eq!(values.len(), m);
        debug_assert_eq!(out.len(), m);
        for (b, &v) in ws.buf.iter_mut().zip(values) {
            *b = Complex64::new(v, 0.0);
        }
        self.forward.process_with_scratch(&mut ws.buf, &mut ws.scratch);
        let scale = 1.0 / m as f64;
        let half = m / 2;
        for (k, o) in out.iter_mut().enumerate() {
            *o = ws.buf[(k + half) % m] * scale;
        }
        // Exact conjugate symmetry, so that real fields stay real over long runs.
        out[0].im = 0.0;
        out[half].im = 0.0;
        for l in 1..half {
            let avg = (out[half + l] + out[half - l].conj()) * 0.5;
            out[half + l] = avg;
            out[half - l] = avg.conj();
        }
    }

    /// Synthesis at the nodes. Real parts land in `out`; the largest absolute
    /// imaginary part is returned so callers can decide whether it is roundoff.
    pub fn inverse_into(&self, coeffs: &[Complex64], out: &mut [f64], ws: &mut Workspace) -> f64 {
        let m = self.m;
        debug_assert_eq!(coeffs.len(), m);
        let half = m / 2;
        for (k, &c) in coeffs.iter().enumerate() {
            ws.buf[(k + half) % m] = c;
        }
        self.inverse.process_with_scratch(&mut ws.buf, &mut ws.scratch);
        let mut residue = 0.0_f64;
        for (o, b) in out.iter_mut().zip(&ws.buf) {
            *o = b.re;
            residue = residue.max(b.im.abs());
        }
        residue
    }
}

/// Reusable FFT buffers for one grid size.
#[derive(Debug, Clone)]
pub struct Workspace {
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

/// Tolerance applied to the imaginary residue of a synthesis of `coeffs`.
pub fn residue_tolerance(coeffs: &[Complex64]) -> f64 {
    RESIDUE_TOL * l2(coeffs).max(1e-300)
}

fn l2(coeffs: &[Complex64]) -> f64 {
    coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Real function sampled at the nodes of a grid.
#[derive(Debug, Clone)]
pub struct NodalField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.modes() {
            return Err(Error::GridMismatch(format!(
                "{} nodal values for a grid with {} nodes",
                values.len(),
                grid.modes()
            )));
        }
        Ok(NodalField { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        NodalField { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Values `u_0 .. u_M` with the periodic closing node appended.
    pub fn with_closing_node(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.push(self.values[0]);
        v
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// One time level of a solution as `M` complex Fourier coefficients in mode order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.modes() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for a grid with {} modes",
                coeffs.len(),
                grid.modes()
            )));
        }
        Ok(SpectralField { grid, coeffs })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let coeffs = vec![Complex64::default(); grid.modes()];
        SpectralField { grid, coeffs }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of mode `l`, zero if `l` is not resolved.
    pub fn mode(&self, l: i64) -> Complex64 {
        self.grid.slot(l).map_or(Complex64::default(), |k| self.coeffs[k])
    }

    pub fn set_mode(&mut self, l: i64, value: Complex64) -> Result<()> {
        let k = self
            .grid
            .slot(l)
            .ok_or_else(|| Error::GridMismatch(format!("mode {l} is not resolved")))?;
        self.coeffs[k] = value;
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.check_same_grid(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x - y).collect();
        Ok(SpectralField { grid: self.grid.clone(), coeffs })
    }

    pub fn check_same_grid(&self, other: &SpectralField) -> Result<()> {
        if *self.grid != *other.grid {
            return Err(Error::GridMismatch(format!(
                "fields live on {:?} and {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// Largest violation of `c_{-l} = conj(c_l)` (and `Im c_0 = 0`, `Im c_{-M/2} = 0`).
    pub fn symmetry_defect(&self) -> f64 {
        let half = (self.grid.modes() / 2) as i64;
        let mut worst = self.mode(-half).im.abs();
        for l in 0..half {
            let d = (self.mode(-l) - self.mode(l).conj()).norm();
            worst = worst.max(d);
        }
        worst
    }

    /// Spectral truncation onto a coarser grid over the same domain: keeps the
    /// coefficients of every mode in the coarse index set.
    pub fn restrict_to(&self, coarse: &Arc<Grid>) -> Result<SpectralField> {
        if !self.grid.same_domain(coarse) {
            return Err(Error::GridMismatch(format!(
                "cannot restrict from {:?} to {:?}: domains differ",
                self.grid, coarse
            )));
        }
        if coarse.modes() > self.grid.modes() {
            return Err(Error::GridMismatch(format!(
                "cannot restrict {} modes onto a finer grid with {} modes",
                self.grid.modes(),
                coarse.modes()
            )));
        }
        let coeffs = (0..coarse.modes()).map(|k| self.mode(coarse.mode(k))).collect();
        Ok(SpectralField { grid: coarse.clone(), coeffs })
    }

    /// Sup-norm of the nodal values.
    pub fn sup_norm(&self) -> Result<f64> {
        Ok(inverse_transform(self)?.sup_norm())
    }
}

/// Discrete interpolation coefficients of nodal data.
pub fn forward_coefficients(f: &NodalField) -> SpectralField {
    let grid = f.grid.clone();
    let mut coeffs = vec![Complex64::default(); grid.modes()];
    let mut ws = grid.workspace();
    grid.forward_into(&f.values, &mut coeffs, &mut ws);
    SpectralField { grid, coeffs }
}

/// Synthesis of a real field at the nodes.
///
/// Fails with [`Error::ImaginaryResidue`] if the imaginary part exceeds
/// `1e-12` times the field's coefficient norm.
pub fn inverse_transform(c: &SpectralField) -> Result<NodalField> {
    let grid = c.grid.clone();
    let mut values = vec![0.0; grid.modes()];
    let mut ws = grid.workspace();
    let residue = grid.inverse_into(&c.coeffs, &mut values, &mut ws);
    let tolerance = residue_tolerance(&c.coeffs);
    if residue > tolerance {
        return Err(Error::ImaginaryResidue { residue, tolerance });
    }
    Ok(NodalField { grid, values })
}

/// L2-projection of a smooth periodic function onto the resolved modes.
///
/// The projection integral is approximated by the interpolation coefficients on a
/// grid `refinement` times finer, which for analytic data leaves only aliasing
/// from modes beyond `refinement * M / 2`.
pub fn project_initial(phi: impl Fn(f64) -> f64, grid: &Arc<Grid>, refinement: usize) -> Result<SpectralField> {
    if refinement == 0 {
        return Err(Error::InvalidParameter("refinement factor must be >= 1".into()));
    }
    let fine = Arc::new(Grid::new(grid.a(), grid.b(), grid.modes() * refinement)?);
    let fine_coeffs = forward_coefficients(&NodalField::from_fn(fine, phi));
    fine_coeffs.restrict_to(grid)
}

/// `sqrt( sum_l (1 + mu_l^2)^lambda |c_l|^2 )` over the resolved modes.
///
/// This is the coefficient norm without the `(b - a)` Parseval factor, so for
/// `lambda = 0` it equals `||u||_{L2} / sqrt(b - a)`.
pub fn sobolev_norm(c: &SpectralField, lambda: i32) -> Result<f64> {
    if lambda < 0 {
        return Err(Error::InvalidParameter(format!("Sobolev index must be >= 0, got {lambda}")));
    }
    let sum: f64 = c
        .coeffs
        .iter()
        .zip(c.grid.mu())
        .map(|(ck, &w)| (1.0 + w * w).powi(lambda) * ck.norm_sqr())
        .sum();
    Ok(sum.sqrt())
}
