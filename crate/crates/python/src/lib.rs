//! Python bindings: grids and transforms, single runs, references, stability
//! probes and preset studies.

use std::sync::Arc;

use kge_core::ewi::{run, RunConfig, SnapshotObserver, SolverParams};
use kge_core::experiments::{preset, spatial_study, temporal_study, ConvergenceRecord, StudyKind};
use kge_core::oscillatory::{osc_stability_bound, run_oscillatory, OscParams};
use kge_core::reference::{Problem, ProblemSpec, ReferenceCache, ReferenceRequest};
use kge_core::spectral::{forward_coefficients, inverse_transform, sobolev_norm};
use kge_core::stability::probe_stability as probe;
use kge_core::{Error, InitialDataTag, NodalField, SpectralField};
use num_complex::Complex64;
use pyo3::exceptions::{PyFileExistsError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidGrid(_) | Error::InvalidParameter(_) | Error::GridMismatch(_) | Error::Config(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::Exists(_) => PyFileExistsError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_problem(s: &str) -> PyResult<Problem> {
    s.parse().map_err(to_py)
}

fn default_data(problem: Problem) -> InitialDataTag {
    match problem {
        Problem::WholeSpaceOscillatory => InitialDataTag::WholeSpace,
        _ => InitialDataTag::LongInitial,
    }
}

/// Uniform periodic grid on `[a, b)` with `modes` nodes.
#[pyclass(name = "Grid", frozen)]
struct PyGrid {
    inner: Arc<kge_core::Grid>,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(a: f64, b: f64, modes: usize) -> PyResult<Self> {
        Ok(PyGrid { inner: Arc::new(kge_core::Grid::new(a, b, modes).map_err(to_py)?) })
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a()
    }

    #[getter]
    fn b(&self) -> f64 {
        self.inner.b()
    }

    #[getter]
    fn modes(&self) -> usize {
        self.inner.modes()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }

    fn nodes(&self) -> Vec<f64> {
        self.inner.nodes().to_vec()
    }

    /// Fourier coefficients of nodal values, modes `-M/2 .. M/2 - 1`.
    fn forward(&self, values: Vec<f64>) -> PyResult<Vec<Complex64>> {
        let f = NodalField::new(self.inner.clone(), values).map_err(to_py)?;
        Ok(forward_coefficients(&f).into_coeffs())
    }

    /// Nodal values of a coefficient vector.
    fn inverse(&self, coeffs: Vec<Complex64>) -> PyResult<Vec<f64>> {
        let c = SpectralField::new(self.inner.clone(), coeffs).map_err(to_py)?;
        Ok(inverse_transform(&c).map_err(to_py)?.into_values())
    }

    #[pyo3(signature = (coeffs, lam = 1))]
    fn sobolev_norm(&self, coeffs: Vec<Complex64>, lam: i32) -> PyResult<f64> {
        let c = SpectralField::new(self.inner.clone(), coeffs).map_err(to_py)?;
        sobolev_norm(&c, lam).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Grid(a={}, b={}, modes={})", self.inner.a(), self.inner.b(), self.inner.modes())
    }
}

/// Sufficient step bound; the oscillatory bound carries the extra `eps^beta`.
#[pyfunction]
#[pyo3(signature = (h, eps, sigma_max, beta = 0.0))]
fn stability_bound(h: f64, eps: f64, sigma_max: f64, beta: f64) -> f64 {
    osc_stability_bound(h, eps, beta, sigma_max)
}

/// Linearized growth around the step bound on the torus.
#[pyfunction]
#[pyo3(signature = (h, eps, sigma, beta = 0.0, steps = 10_000))]
fn probe_stability<'py>(py: Python<'py>, h: f64, eps: f64, sigma: f64, beta: f64, steps: usize) -> PyResult<Bound<'py, PyDict>> {
    let (a, b) = InitialDataTag::torus();
    let grid = kge_core::Grid::with_max_spacing(a, b, h).map_err(to_py)?;
    let p = py.detach(|| probe(h, &grid, eps, beta, sigma, steps));
    let d = PyDict::new(py);
    d.set_item("bound", p.bound)?;
    d.set_item("threshold", p.threshold)?;
    d.set_item("growth_below", p.growth_below)?;
    d.set_item("growth_above", p.growth_above)?;
    d.set_item("dichotomy", p.dichotomy())?;
    Ok(d)
}

/// Runs the scheme and returns nodes, snapshots and diagnostics.
#[pyfunction]
#[pyo3(signature = (eps, beta, tau, modes, t0 = 1.0, problem = "weak", snapshots = 2))]
fn solve<'py>(
    py: Python<'py>,
    eps: f64,
    beta: f64,
    tau: f64,
    modes: usize,
    t0: f64,
    problem: &str,
    snapshots: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let problem = parse_problem(problem)?;
    let out = py
        .detach(|| -> kge_core::Result<_> {
            let ps = ProblemSpec::new(problem, eps, beta, default_data(problem))?;
            let grid = kge_core::spectral::make_grid(ps.a, ps.b, modes)?;
            let data = ps.initial_data();
            let config = RunConfig::default();
            let steps =
                if problem.is_oscillatory() { OscParams::new(eps, beta, tau, t0)?.steps() } else { SolverParams::new(eps, beta, tau, t0)?.steps() };
            let stride = if snapshots >= 2 { (steps / (snapshots - 1)).max(1) } else { steps.max(1) };
            let mut obs = SnapshotObserver::new(stride);
            let out = if problem.is_oscillatory() {
                run_oscillatory(&OscParams::new(eps, beta, tau, t0)?, &grid, &data, &config, &mut [&mut obs])?
            } else {
                run(&SolverParams::new(eps, beta, tau, t0)?, &grid, &data, &config, &mut [&mut obs])?
            };
            let mut frames = Vec::new();
            for (_, t, f) in &obs.snapshots {
                frames.push((*t, inverse_transform(f)?.into_values()));
            }
            Ok((grid, out, frames))
        })
        .map_err(to_py)?;
    let (grid, out, frames) = out;
    let d = PyDict::new(py);
    d.set_item("nodes", grid.nodes().to_vec())?;
    d.set_item("u", inverse_transform(&out.final_field).map_err(to_py)?.into_values())?;
    d.set_item("coeffs", out.final_field.coeffs().to_vec())?;
    d.set_item("times", frames.iter().map(|f| f.0).collect::<Vec<_>>())?;
    d.set_item("snapshots", frames.into_iter().map(|f| f.1).collect::<Vec<_>>())?;
    d.set_item("steps", out.diagnostics.steps)?;
    d.set_item("final_time", out.diagnostics.final_time)?;
    d.set_item("sigma_max", out.diagnostics.sigma_max)?;
    d.set_item("stable", out.diagnostics.stable)?;
    Ok(d)
}

/// Splitting reference at the final time, through the on-disk cache.
#[pyfunction]
#[pyo3(signature = (eps, beta, tau, modes, t0 = 1.0, problem = "weak", cache_dir = None))]
fn reference<'py>(
    py: Python<'py>,
    eps: f64,
    beta: f64,
    tau: f64,
    modes: usize,
    t0: f64,
    problem: &str,
    cache_dir: Option<String>,
) -> PyResult<Bound<'py, PyDict>> {
    let problem = parse_problem(problem)?;
    let r = py
        .detach(|| -> kge_core::Result<_> {
            let ps = ProblemSpec::new(problem, eps, beta, default_data(problem))?;
            let horizon = if problem.is_oscillatory() { t0 } else { t0 / eps.powf(beta) };
            let req = ReferenceRequest::new(ps, modes, tau, vec![(horizon / tau).round() * tau]);
            let cache = cache_dir.map(ReferenceCache::new).unwrap_or_else(ReferenceCache::from_env);
            cache.get_or_compute(&req)
        })
        .map_err(to_py)?;
    let snap = r.trajectory.last().ok_or_else(|| PyRuntimeError::new_err("empty reference"))?;
    let d = PyDict::new(py);
    d.set_item("hash", r.hash())?;
    d.set_item("residual", r.residual)?;
    d.set_item("time", snap.time)?;
    d.set_item("nodes", r.grid.nodes().to_vec())?;
    d.set_item("u", inverse_transform(&snap.u).map_err(to_py)?.into_values())?;
    d.set_item("coeffs", snap.u.coeffs().to_vec())?;
    Ok(d)
}

fn record_dict<'py>(py: Python<'py>, r: &ConvergenceRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("problem", r.problem.as_str())?;
    d.set_item("eps", r.eps)?;
    d.set_item("beta", r.beta)?;
    d.set_item("h", r.h)?;
    d.set_item("tau_or_k", r.tau_or_k)?;
    d.set_item("T0", r.t0)?;
    d.set_item("lambda", r.lambda)?;
    d.set_item("error_H0", r.error_h0)?;
    d.set_item("error_H1", r.error_h1)?;
    d.set_item("order", r.order)?;
    d.set_item("stable_flag", r.stable_flag.as_str())?;
    d.set_item("wall_seconds", r.wall_seconds)?;
    d.set_item("steps", r.steps)?;
    d.set_item("reference_hash", &r.reference_hash)?;
    Ok(d)
}

/// Runs the study of table `table` (1 to 8), optionally restricted to one
/// `beta` block and an `eps` ladder, and returns its records.
#[pyfunction]
#[pyo3(signature = (table, beta = None, eps = None, max_steps = None, timing = true, cache_dir = None))]
fn preset_study<'py>(
    py: Python<'py>,
    table: u8,
    beta: Option<f64>,
    eps: Option<Vec<f64>>,
    max_steps: Option<usize>,
    timing: bool,
    cache_dir: Option<String>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let records = py
        .detach(|| -> kge_core::Result<Vec<ConvergenceRecord>> {
            let mut specs = preset(table)?;
            if let Some(b) = beta {
                specs.retain(|s| s.beta == b);
            }
            let cache = cache_dir.map(ReferenceCache::new).unwrap_or_else(ReferenceCache::from_env);
            let mut all = Vec::new();
            for mut s in specs {
                if let Some(e) = &eps {
                    s.eps = e.clone();
                }
                s.max_steps = max_steps;
                s.timing = timing;
                all.extend(match s.kind {
                    StudyKind::Temporal => temporal_study(&s, Some(&cache))?,
                    StudyKind::Spatial => spatial_study(&s, Some(&cache))?,
                });
            }
            Ok(all)
        })
        .map_err(to_py)?;
    records.iter().map(|r| record_dict(py, r)).collect()
}

#[pymodule]
fn kge(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_function(wrap_pyfunction!(stability_bound, m)?)?;
    m.add_function(wrap_pyfunction!(probe_stability, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(reference, m)?)?;
    m.add_function(wrap_pyfunction!(preset_study, m)?)?;
    Ok(())
}
