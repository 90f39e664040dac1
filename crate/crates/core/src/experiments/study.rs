//! Convergence studies: a ladder of runs per `eps` row, each measured against a
//! shared reference trajectory.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::InitialDataTag;
use crate::error::{Error, Result};
use crate::ewi::{run, Diagnostics, InitialProjection, RunConfig, SolverParams, StabilityPolicy};
use crate::oscillatory::{run_oscillatory, OscParams};
use crate::reference::{reference_solution, Problem, ProblemSpec, ReferenceCache, ReferenceRequest, ReferenceSolution};
use crate::spectral::{Grid, SpectralField};

use super::error_norm;

/// Errors at or below this are treated as exact (linear runs, resolved data).
pub const EXACT_TOL: f64 = 1e-10;

/// Default wall-clock budget for one cell.
pub const DEFAULT_CELL_BUDGET: Duration = Duration::from_secs(600);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    /// Step ladder at fixed `h`.
    Temporal,
    /// Mesh ladder at fixed step.
    Spatial,
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StudyKind::Temporal => "temporal",
            StudyKind::Spatial => "spatial",
        })
    }
}

/// Outcome flag of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum StableFlag {
    Stable,
    Unstable,
    Exact,
    Skipped,
}

impl StableFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            StableFlag::Stable => "STABLE",
            StableFlag::Unstable => "UNSTABLE",
            StableFlag::Exact => "EXACT",
            StableFlag::Skipped => "SKIPPED",
        }
    }
}

impl fmt::Display for StableFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StableFlag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "STABLE" => Ok(StableFlag::Stable),
            "UNSTABLE" => Ok(StableFlag::Unstable),
            "EXACT" => Ok(StableFlag::Exact),
            "SKIPPED" => Ok(StableFlag::Skipped),
            other => Err(Error::InvalidParameter(format!("unknown flag '{other}'"))),
        }
    }
}

/// One study cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub problem: Problem,
    pub eps: f64,
    pub beta: f64,
    pub h: f64,
    pub tau_or_k: f64,
    #[serde(rename = "T0")]
    pub t0: f64,
    pub lambda: i32,
    #[serde(rename = "error_H0")]
    pub error_h0: Option<f64>,
    #[serde(rename = "error_H1")]
    pub error_h1: Option<f64>,
    /// Observed order against the previous cell of the ladder.
    pub order: Option<f64>,
    pub stable_flag: StableFlag,
    pub wall_seconds: f64,
    pub steps: usize,
    pub reference_hash: String,
}

impl ConvergenceRecord {
    /// Error in the study norm.
    pub fn error(&self) -> Option<f64> {
        match self.lambda {
            0 => self.error_h0,
            1 => self.error_h1,
            _ => None,
        }
    }
}

/// Mesh size and step of the reference solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceGrid {
    pub h: f64,
    pub tau: f64,
}

/// Description of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    pub problem: Problem,
    pub data: InitialDataTag,
    pub kind: StudyKind,
    pub beta: f64,
    pub eps: Vec<f64>,
    /// Time steps (`tau`, or `k` for oscillatory problems). One entry for spatial studies.
    pub steps: Vec<f64>,
    /// Mesh sizes. One entry for temporal studies.
    pub spacings: Vec<f64>,
    pub t0: f64,
    /// Norm index used for orders and the reference gate.
    pub lambda: i32,
    pub reference: ReferenceGrid,
    /// Cells with more steps than this are skipped without running.
    pub max_steps: Option<usize>,
    pub cell_budget: Duration,
    pub projection: InitialProjection,
    /// Record wall-clock times; disable for byte-stable reports.
    pub timing: bool,
}

impl StudySpec {
    /// A temporal study with the defaults used throughout: H1 norm, nodal
    /// interpolation of the data, 10-minute cell budget.
    pub fn temporal(
        problem: Problem,
        data: InitialDataTag,
        beta: f64,
        eps: Vec<f64>,
        steps: Vec<f64>,
        h: f64,
        reference: ReferenceGrid,
    ) -> Self {
        StudySpec {
            problem,
            data,
            kind: StudyKind::Temporal,
            beta,
            eps,
            steps,
            spacings: vec![h],
            t0: 1.0,
            lambda: 1,
            reference,
            max_steps: None,
            cell_budget: DEFAULT_CELL_BUDGET,
            projection: InitialProjection::Interpolate,
            timing: true,
        }
    }

    pub fn spatial(
        problem: Problem,
        data: InitialDataTag,
        beta: f64,
        eps: Vec<f64>,
        spacings: Vec<f64>,
        step: f64,
        reference: ReferenceGrid,
    ) -> Self {
        StudySpec {
            kind: StudyKind::Spatial,
            steps: vec![step],
            spacings,
            ..Self::temporal(problem, data, beta, eps, Vec::new(), 0.0, reference)
        }
    }

    /// The varying ladder.
    pub fn ladder(&self) -> &[f64] {
        match self.kind {
            StudyKind::Temporal => &self.steps,
            StudyKind::Spatial => &self.spacings,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.eps.is_empty() || self.steps.is_empty() || self.spacings.is_empty() {
            return bad("eps, step and mesh ladders must be nonempty".into());
        }
        let fixed = match self.kind {
            StudyKind::Temporal => &self.spacings,
            StudyKind::Spatial => &self.steps,
        };
        if fixed.len() != 1 {
            return bad(format!("a {} study varies one ladder; got {} fixed values", self.kind, fixed.len()));
        }
        let ladder = self.ladder();
        if ladder.iter().chain(fixed).any(|x| !(*x > 0.0 && x.is_finite())) {
            return bad("steps and mesh sizes must be positive".into());
        }
        if ladder.windows(2).any(|w| !(w[1] < w[0])) {
            return bad(format!("{} ladder must be strictly decreasing: {ladder:?}", self.kind));
        }
        for &e in &self.eps {
            ProblemSpec::new(self.problem, e, self.beta, self.data)?;
        }
        if !(self.t0 > 0.0) || !(0..=1).contains(&self.lambda) {
            return bad(format!("need t0 > 0 and lambda in {{0, 1}}, got {}, {}", self.t0, self.lambda));
        }
        let finest = self.steps.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(self.reference.tau > 0.0) || self.reference.tau * 8.0 > finest * (1.0 + 1e-12) {
            return bad(format!(
                "reference step {} must be at least 8 times finer than the finest study step {finest}",
                self.reference.tau
            ));
        }
        let finest_h = self.spacings.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(self.reference.h > 0.0) || self.reference.h > finest_h * (1.0 + 1e-12) {
            return bad(format!(
                "reference mesh {} must be no coarser than the finest study mesh {finest_h}",
                self.reference.h
            ));
        }
        Ok(())
    }

    /// Total number of cells.
    pub fn cell_count(&self) -> usize {
        self.eps.len() * self.ladder().len()
    }

    fn problem_spec(&self, eps: f64) -> Result<ProblemSpec> {
        ProblemSpec::new(self.problem, eps, self.beta, self.data)
    }

    fn steps_for(&self, eps: f64, step: f64) -> Result<usize> {
        Ok(if self.problem.is_oscillatory() {
            OscParams::new(eps, self.beta, step, self.t0)?.steps()
        } else {
            SolverParams::new(eps, self.beta, step, self.t0)?.steps()
        })
    }
}

/// Reference and per-cell outcomes for one `eps` row.
struct RowResult {
    records: Vec<ConvergenceRecord>,
}

struct CellRun {
    field: Option<SpectralField>,
    diagnostics: Option<Diagnostics>,
    final_time: f64,
    steps: usize,
    flag: Option<StableFlag>,
    wall: f64,
    grid: Arc<Grid>,
    step: f64,
}

fn run_cell(spec: &StudySpec, eps: f64, grid: Arc<Grid>, step: f64) -> Result<CellRun> {
    let steps = spec.steps_for(eps, step)?;
    let final_time = steps as f64 * step;
    let skipped = |wall| CellRun {
        field: None,
        diagnostics: None,
        final_time,
        steps,
        flag: Some(StableFlag::Skipped),
        wall,
        grid: grid.clone(),
        step,
    };
    if spec.max_steps.is_some_and(|m| steps > m) {
        return Ok(skipped(0.0));
    }
    let started = Instant::now();
    let config = RunConfig {
        projection: spec.projection,
        stability: StabilityPolicy::Ignore,
        deadline: Some(started + spec.cell_budget),
        ..RunConfig::default()
    };
    let data = spec.data.data();
    let outcome = if spec.problem.is_oscillatory() {
        run_oscillatory(&OscParams::new(eps, spec.beta, step, spec.t0)?, &grid, &data, &config, &mut [])
    } else {
        run(&SolverParams::new(eps, spec.beta, step, spec.t0)?, &grid, &data, &config, &mut [])
    };
    let wall = started.elapsed().as_secs_f64();
    match outcome {
        Ok(out) => Ok(CellRun {
            field: Some(out.final_field),
            diagnostics: Some(out.diagnostics),
            final_time,
            steps,
            flag: None,
            wall,
            grid,
            step,
        }),
        Err(Error::BudgetExceeded(msg)) => {
            log::warn!("eps = {eps}, step = {step}, h = {}: {msg}; cell skipped", grid.h());
            Ok(skipped(wall))
        }
        Err(Error::Instability { step: n, sup_norm, .. }) => {
            log::warn!("eps = {eps}, step = {step}, h = {}: blow-up at step {n} (sup {sup_norm:.3e})", grid.h());
            Ok(CellRun {
                field: None,
                diagnostics: None,
                final_time,
                steps,
                flag: Some(StableFlag::Unstable),
                wall,
                grid,
                step,
            })
        }
        Err(e) => Err(e),
    }
}

fn unique_times(times: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &t in times {
        if !out.iter().any(|&u| (u - t).abs() <= 1e-12 * t.max(1.0)) {
            out.push(t);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Fetches (or computes) the reference for one row.
pub fn row_reference(
    spec: &StudySpec,
    eps: f64,
    times: Vec<f64>,
    cache: Option<&ReferenceCache>,
    deadline: Option<Instant>,
) -> Result<ReferenceSolution> {
    let ps = spec.problem_spec(eps)?;
    let ref_grid = Grid::with_max_spacing(ps.a, ps.b, spec.reference.h)?;
    let mut req = ReferenceRequest::new(ps, ref_grid.modes(), spec.reference.tau, times);
    req.deadline = deadline;
    match cache {
        Some(c) => c.get_or_compute(&req),
        None => reference_solution(&req),
    }
}

fn run_row(spec: &StudySpec, eps: f64, cache: Option<&ReferenceCache>) -> Result<RowResult> {
    let ps = spec.problem_spec(eps)?;
    let cells: Vec<(f64, f64)> = match spec.kind {
        StudyKind::Temporal => spec.steps.iter().map(|&s| (spec.spacings[0], s)).collect(),
        StudyKind::Spatial => spec.spacings.iter().map(|&h| (h, spec.steps[0])).collect(),
    };
    let mut times = Vec::new();
    for &(_, step) in &cells {
        times.push(spec.steps_for(eps, step)? as f64 * step);
    }
    for &t in &times {
        let n = (t / spec.reference.tau).round();
        if (n * spec.reference.tau - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "final time {t} is not a multiple of the reference step {}",
                spec.reference.tau
            )));
        }
    }
    let times = unique_times(&times);

    let deadline = Some(Instant::now() + spec.cell_budget);
    let (reference, runs) = rayon::join(
        || row_reference(spec, eps, times.clone(), cache, deadline),
        || {
            cells
                .par_iter()
                .map(|&(h, step)| {
                    let grid = Arc::new(Grid::with_max_spacing(ps.a, ps.b, h)?);
                    run_cell(spec, eps, grid, step)
                })
                .collect::<Result<Vec<_>>>()
        },
    );
    let runs = runs?;
    let reference = match reference {
        Ok(r) => Some(r),
        Err(Error::BudgetExceeded(msg)) => {
            log::warn!("eps = {eps}: reference {msg}; row skipped");
            None
        }
        Err(e) => return Err(e),
    };

    let mut records = Vec::with_capacity(runs.len());
    for cell in &runs {
        let mut rec = ConvergenceRecord {
            problem: spec.problem,
            eps,
            beta: spec.beta,
            h: cell.grid.h(),
            tau_or_k: cell.step,
            t0: spec.t0,
            lambda: spec.lambda,
            error_h0: None,
            error_h1: None,
            order: None,
            stable_flag: cell.flag.unwrap_or(StableFlag::Stable),
            wall_seconds: if spec.timing { cell.wall } else { 0.0 },
            steps: cell.steps,
            reference_hash: String::new(),
        };
        match (&reference, &cell.field) {
            (Some(r), Some(field)) => {
                let snap = r
                    .trajectory
                    .at(cell.final_time, 1e-12 * cell.final_time.max(1.0))
                    .ok_or_else(|| Error::Cache(format!("reference has no snapshot at t = {}", cell.final_time)))?;
                rec.error_h0 = Some(error_norm(&snap.u, field, 0)?);
                rec.error_h1 = Some(error_norm(&snap.u, field, 1)?);
                rec.reference_hash = r.hash();
                let err = error_norm(&snap.u, field, spec.lambda)?;
                let stable = cell.diagnostics.as_ref().is_none_or(|d| d.stable);
                rec.stable_flag = if !stable {
                    StableFlag::Unstable
                } else if err <= EXACT_TOL {
                    StableFlag::Exact
                } else {
                    StableFlag::Stable
                };
            }
            (None, _) => {
                if rec.stable_flag == StableFlag::Stable {
                    rec.stable_flag = StableFlag::Skipped;
                }
            }
            _ => {}
        }
        records.push(rec);
    }

    if let Some(r) = &reference {
        let coarsest = records
            .iter()
            .filter_map(|rec| rec.error())
            .filter(|e| e.is_finite())
            .fold(0.0_f64, f64::max);
        if coarsest > EXACT_TOL {
            r.check_gate(coarsest)?;
        }
    }
    fill_orders(&mut records, spec.kind);
    Ok(RowResult { records })
}

/// Orders between adjacent cells of one row, `log(e_prev / e) / log(x_prev / x)`.
pub fn fill_orders(row: &mut [ConvergenceRecord], kind: StudyKind) {
    let x = |r: &ConvergenceRecord| match kind {
        StudyKind::Temporal => r.tau_or_k,
        StudyKind::Spatial => r.h,
    };
    let usable = |r: &ConvergenceRecord| {
        matches!(r.stable_flag, StableFlag::Stable | StableFlag::Unstable) && r.error().is_some_and(|e| e > 0.0 && e.is_finite())
    };
    for i in (1..row.len()).rev() {
        row[i].order = if usable(&row[i - 1]) && usable(&row[i]) {
            let (e0, e1) = (row[i - 1].error().unwrap(), row[i].error().unwrap());
            Some((e0 / e1).ln() / (x(&row[i - 1]) / x(&row[i])).ln())
        } else {
            None
        };
    }
    if let Some(first) = row.first_mut() {
        first.order = None;
    }
}

/// Sort order of reports: problem, beta, eps descending, step descending, h descending.
pub fn sort_records(records: &mut [ConvergenceRecord]) {
    records.sort_by(|a, b| {
        a.problem
            .as_str()
            .cmp(b.problem.as_str())
            .then(a.beta.total_cmp(&b.beta))
            .then(b.eps.total_cmp(&a.eps))
            .then(b.tau_or_k.total_cmp(&a.tau_or_k))
            .then(b.h.total_cmp(&a.h))
    });
}

fn run_study(spec: &StudySpec, cache: Option<&ReferenceCache>) -> Result<Vec<ConvergenceRecord>> {
    spec.validate()?;
    let rows = spec.eps.par_iter().map(|&e| run_row(spec, e, cache)).collect::<Result<Vec<_>>>()?;
    let mut records: Vec<ConvergenceRecord> = rows.into_iter().flat_map(|r| r.records).collect();
    sort_records(&mut records);
    Ok(records)
}

/// Step-ladder study at fixed mesh size.
pub fn temporal_study(spec: &StudySpec, cache: Option<&ReferenceCache>) -> Result<Vec<ConvergenceRecord>> {
    if spec.kind != StudyKind::Temporal {
        return Err(Error::InvalidParameter("temporal_study needs a temporal spec".into()));
    }
    run_study(spec, cache)
}

/// Mesh-ladder study at fixed step.
pub fn spatial_study(spec: &StudySpec, cache: Option<&ReferenceCache>) -> Result<Vec<ConvergenceRecord>> {
    if spec.kind != StudyKind::Spatial {
        return Err(Error::InvalidParameter("spatial_study needs a spatial spec".into()));
    }
    run_study(spec, cache)
}

/// Least-squares slope of `log e` against `log eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub beta: f64,
    pub step: f64,
    pub slope: Option<f64>,
    pub expected_slope: f64,
    /// `e(eps) / e(eps/2)` for adjacent ladder entries.
    pub adjacent_ratios: Vec<f64>,
    pub records: Vec<ConvergenceRecord>,
}

/// Slope and intercept of the least-squares line through `(x, y)`.
pub fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Runs a one-step temporal study over the `eps` ladder and fits the slope of
/// `log e` against `log eps`, expected to be `2 - beta`.
pub fn eps_scaling_study(spec: &StudySpec, cache: Option<&ReferenceCache>) -> Result<ScalingReport> {
    if spec.kind != StudyKind::Temporal || spec.steps.len() != 1 {
        return Err(Error::InvalidParameter("eps scaling needs a temporal spec with a single step".into()));
    }
    if spec.eps.len() < 2 {
        return Err(Error::InvalidParameter("eps scaling needs at least two eps values".into()));
    }
    let records = run_study(spec, cache)?;
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.stable_flag == StableFlag::Stable && r.eps > 0.0)
        .filter_map(|r| r.error().filter(|e| *e > 0.0).map(|e| (r.eps.ln(), e.ln())))
        .collect();
    let adjacent_ratios = records
        .windows(2)
        .filter_map(|w| match (w[0].error(), w[1].error()) {
            (Some(a), Some(b)) if b > 0.0 => Some(a / b),
            _ => None,
        })
        .collect();
    Ok(ScalingReport {
        beta: spec.beta,
        step: spec.steps[0],
        slope: fit_line(&points).map(|(s, _)| s),
        expected_slope: 2.0 - spec.beta,
        adjacent_ratios,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rec(tau: f64, err: Option<f64>, flag: StableFlag) -> ConvergenceRecord {
        ConvergenceRecord {
            problem: Problem::Weak,
            eps: 1.0,
            beta: 0.0,
            h: PI / 32.0,
            tau_or_k: tau,
            t0: 1.0,
            lambda: 1,
            error_h0: err,
            error_h1: err,
            order: None,
            stable_flag: flag,
            wall_seconds: 0.0,
            steps: 1,
            reference_hash: "x".into(),
        }
    }

    #[test]
    fn orders_between_neighbours() {
        let mut row = vec![
            rec(0.2, Some(4e-2), StableFlag::Stable),
            rec(0.1, Some(1e-2), StableFlag::Stable),
            rec(0.05, None, StableFlag::Skipped),
            rec(0.025, Some(1e-4), StableFlag::Stable),
        ];
        fill_orders(&mut row, StudyKind::Temporal);
        assert_eq!(row[0].order, None);
        assert!((row[1].order.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(row[2].order, None);
        assert_eq!(row[3].order, None);

        let mut quarter = vec![rec(0.1, Some(1.6e-3), StableFlag::Stable), rec(0.025, Some(1e-4), StableFlag::Stable)];
        fill_orders(&mut quarter, StudyKind::Temporal);
        assert!((quarter[1].order.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn line_fit() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 3.0 - 2.0 * i as f64)).collect();
        let (s, c) = fit_line(&pts).unwrap();
        assert!((s + 2.0).abs() < 1e-14 && (c - 3.0).abs() < 1e-14);
        assert!(fit_line(&pts[..1]).is_none());
    }

    fn small_spec() -> StudySpec {
        StudySpec::temporal(
            Problem::Weak,
            InitialDataTag::LongInitial,
            0.0,
            vec![1.0],
            vec![0.2, 0.1],
            PI / 8.0,
            ReferenceGrid { h: PI / 8.0, tau: 0.0125 },
        )
    }

    #[test]
    fn validation() {
        assert!(small_spec().validate().is_ok());
        let mut s = small_spec();
        s.steps = vec![0.1, 0.2];
        assert!(s.validate().is_err());
        let mut s = small_spec();
        s.reference.tau = 0.02;
        assert!(s.validate().is_err());
        let mut s = small_spec();
        s.reference.h = PI / 4.0;
        assert!(s.validate().is_err());
        let mut s = small_spec();
        s.eps = vec![0.0];
        s.beta = 1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn linear_rows_are_exact() {
        let mut s = small_spec();
        s.eps = vec![0.0];
        s.timing = false;
        let recs = temporal_study(&s, None).unwrap();
        assert_eq!(recs.len(), 2);
        for r in &recs {
            assert_eq!(r.stable_flag, StableFlag::Exact);
            assert!(r.error_h1.unwrap() <= 1e-10);
            assert!(r.order.is_none());
            assert!(!r.reference_hash.is_empty());
        }
    }

    #[test]
    fn step_budget_skips_cells() {
        let mut s = small_spec();
        s.max_steps = Some(7);
        let recs = temporal_study(&s, None).unwrap();
        assert_eq!(recs[0].stable_flag, StableFlag::Stable);
        assert_eq!(recs[1].stable_flag, StableFlag::Skipped);
        assert!(recs[1].error_h1.is_none());
    }
}
