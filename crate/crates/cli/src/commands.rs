use std::error::Error as StdError;
use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use kge_core::ewi::{
    exact_linear, run, EnergyObserver, InitialProjection, Observer, RunConfig, RunOutput, SnapshotObserver,
    SolverParams, StabilityPolicy,
};
use kge_core::experiments::{
    check_table, emit_report, eps_scaling_study, printed_table, preset, spatial_study, temporal_study,
    ConvergenceRecord, PrintedTable, ReferenceGrid, ReportFormat, ScalingReport, StudyKind, StudySpec,
};
use kge_core::experiments::presets::{WEAK_REFERENCE, WHOLE_SPACE_REFERENCE};
use kge_core::oscillatory::{run_oscillatory, OscParams};
use kge_core::reference::{Problem, ProblemSpec, ReferenceCache, ReferenceRequest};
use kge_core::spectral::{inverse_transform, make_grid, sobolev_norm};
use kge_core::stability::probe_stability;
use kge_core::{Error, Grid, InitialDataTag};

use crate::values::Ladder;
use crate::{Command, ProbeArgs, ReferenceArgs, SolveArgs, StudyArgs};

type CmdResult = Result<ExitCode, Box<dyn StdError>>;

pub fn dispatch(cmd: Command) -> CmdResult {
    match cmd {
        Command::Solve(a) => solve(a),
        Command::Reference(a) => reference(a),
        Command::ConvergeTime(a) => study(a, Some(StudyKind::Temporal), "converge-time"),
        Command::ConvergeSpace(a) => study(a, Some(StudyKind::Spatial), "converge-space"),
        Command::OscillatoryTable(a) => {
            match a.preset {
                Some(5..=8) => {}
                _ => return Err("oscillatory-table needs --preset table5 .. table8".into()),
            }
            study(a, None, "oscillatory-table")
        }
        Command::EpsScaling(a) => eps_scaling(a),
        Command::StabilityProbe(a) => stability_probe(a),
    }
}

fn default_data(problem: Problem) -> InitialDataTag {
    match problem {
        Problem::WholeSpaceOscillatory => InitialDataTag::WholeSpace,
        _ => InitialDataTag::LongInitial,
    }
}

fn default_reference(problem: Problem) -> ReferenceGrid {
    match problem {
        Problem::Weak => WEAK_REFERENCE,
        Problem::Oscillatory => ReferenceGrid { h: PI / 32.0, tau: WHOLE_SPACE_REFERENCE.tau },
        Problem::WholeSpaceOscillatory => WHOLE_SPACE_REFERENCE,
    }
}

fn refuse_overwrite(path: &Path, force: bool) -> Result<(), Error> {
    if path.exists() && !force {
        return Err(Error::Exists(path.to_path_buf()));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn solve(a: SolveArgs) -> CmdResult {
    let ps = ProblemSpec::new(a.problem, a.eps, a.beta, a.data.unwrap_or(default_data(a.problem)))?;
    let grid = make_grid(ps.a, ps.b, a.modes)?;
    let data = ps.initial_data();
    let config = RunConfig {
        projection: if a.spectral { InitialProjection::spectral() } else { InitialProjection::Interpolate },
        dealias: a.dealias,
        stability: if a.enforce_stability { StabilityPolicy::Enforce } else { StabilityPolicy::Warn },
        max_steps: a.max_steps,
        ..RunConfig::default()
    };
    let oscillatory = a.problem.is_oscillatory();
    let (steps, weak_params, osc_params) = if oscillatory {
        let p = OscParams::new(a.eps, a.beta, a.tau, a.t0)?;
        (p.steps(), None, Some(p))
    } else {
        let p = SolverParams::new(a.eps, a.beta, a.tau, a.t0)?;
        (p.steps(), Some(p), None)
    };
    if let Some(path) = &a.out {
        refuse_overwrite(path, a.force)?;
    }

    let stride = if a.snapshots >= 2 { (steps / (a.snapshots - 1)).max(1) } else { steps.max(1) };
    let mut snaps = SnapshotObserver::new(stride);
    let mut energy = EnergyObserver::new((steps / 100).max(1), a.eps * a.eps).with_time_scale(ps.time_scale());
    let out: RunOutput = {
        let mut observers: Vec<&mut dyn Observer> = vec![&mut snaps, &mut energy];
        match (weak_params, osc_params) {
            (Some(p), _) => run(&p, &grid, &data, &config, &mut observers)?,
            (_, Some(p)) => run_oscillatory(&p, &grid, &data, &config, &mut observers)?,
            _ => unreachable!(),
        }
    };
    let d = &out.diagnostics;

    println!("problem          {}", a.problem);
    println!("data             {}", data.name());
    println!("eps, beta        {}, {}", a.eps, a.beta);
    println!("modes, h         {}, {:.6e}", grid.modes(), grid.h());
    println!("step             {:.6e}", a.tau);
    println!("steps            {}", d.steps);
    println!("final time       {:.6e}", d.final_time);
    println!("sup norm         {:.6e}", out.final_field.sup_norm()?);
    println!("H1 norm          {:.6e}", sobolev_norm(&out.final_field, 1)?);
    println!("sigma_max        {:.6e} (a priori {:.6e})", d.sigma_max, d.sigma_estimate);
    println!("step bound       {:.6e} (a priori {:.6e})", d.running_bound, d.a_priori_bound);
    println!("stable           {}", d.stable);
    println!("energy drift     {:.3e}", energy.relative_drift());
    println!("wall seconds     {:.3}", d.wall_seconds);
    for w in &d.warnings {
        println!("warning          {w}");
    }

    let mut ok = d.stable;
    if a.eps == 0.0 && !oscillatory {
        let exact = exact_linear(&out.initial, &out.initial_velocity, d.final_time)?;
        let err = sobolev_norm(&out.final_field.sub(&exact)?, 1)?;
        println!("closed-form error {err:.3e}");
        if err > 1e-10 {
            ok = false;
            if a.check {
                println!("check failed: closed-form error {err:.3e} > 1e-10");
            }
        }
    }

    if let Some(path) = &a.out {
        if snaps.snapshots.last().map(|s| s.0) != Some(d.steps) {
            snaps.snapshots.push((d.steps, d.final_time, out.final_field.clone()));
        }
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "time,x,u")?;
        for (_, t, field) in &snaps.snapshots {
            let nodal = inverse_transform(field)?;
            for (x, u) in grid.nodes().iter().zip(nodal.values()) {
                writeln!(w, "{t},{x},{u}")?;
            }
        }
        w.flush()?;
        println!("snapshots        {} -> {}", snaps.snapshots.len(), path.display());
    }

    if a.check && !ok {
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn reference(a: ReferenceArgs) -> CmdResult {
    let ps = ProblemSpec::new(a.problem, a.eps, a.beta, a.data.unwrap_or(default_data(a.problem)))?;
    let defaults = default_reference(a.problem);
    let modes = match a.modes {
        Some(m) => m,
        None => Grid::with_max_spacing(ps.a, ps.b, a.h.unwrap_or(defaults.h))?.modes(),
    };
    let tau = a.tau.unwrap_or(defaults.tau);
    let horizon = if a.problem.is_oscillatory() { a.t0 } else { a.t0 / a.eps.powf(a.beta) };
    let times: Vec<f64> = match a.times {
        Some(Ladder(t)) => t,
        None => vec![(horizon / tau).round() * tau],
    };
    let req = ReferenceRequest::new(ps, modes, tau, times);
    let cache = a.cache_dir.map(ReferenceCache::new).unwrap_or_else(ReferenceCache::from_env);
    let started = Instant::now();
    let r = cache.get_or_compute(&req)?;
    println!("problem          {}", a.problem);
    println!("eps, beta        {}, {}", a.eps, a.beta);
    println!("modes, h         {}, {:.6e}", r.grid.modes(), r.grid.h());
    println!("step             {tau:.6e}");
    println!("residual (H1)    {:.3e}", r.residual);
    println!("hash             {}", r.hash());
    println!("cache file       {}", cache.path_for(&r.key).display());
    println!("wall seconds     {:.3}", started.elapsed().as_secs_f64());
    for s in &r.trajectory.snapshots {
        println!("snapshot         t = {:.6e}  H1 = {:.6e}", s.time, sobolev_norm(&s.u, 1)?);
    }
    Ok(ExitCode::SUCCESS)
}

fn single(l: &Option<Ladder>, name: &str) -> Result<Option<f64>, String> {
    match l {
        None => Ok(None),
        Some(Ladder(v)) if v.len() == 1 => Ok(Some(v[0])),
        Some(_) => Err(format!("--{name} takes a single value here")),
    }
}

/// Specs for a study command, and the printed table when a preset is used.
fn study_specs(a: &StudyArgs, kind: Option<StudyKind>, cmd: &str) -> Result<(Vec<StudySpec>, Option<PrintedTable>), Box<dyn StdError>> {
    let (mut specs, table) = if let Some(id) = a.preset {
        let table = printed_table(id)?;
        if let Some(k) = kind {
            if table.kind != k {
                return Err(format!("table{id} is a {} table; {cmd} runs {k} studies", table.kind).into());
            }
        }
        if a.problem.is_some() || a.data.is_some() {
            return Err("--problem and --data cannot be combined with --preset".into());
        }
        let mut specs = preset(id)?;
        if let Some(beta) = a.beta {
            specs.retain(|s| s.beta == beta);
            if specs.is_empty() {
                return Err(format!("table{id} has no beta = {beta} block").into());
            }
        }
        for s in &mut specs {
            match s.kind {
                StudyKind::Temporal => {
                    if let Some(Ladder(t)) = &a.tau {
                        s.steps = t.clone();
                    }
                    if let Some(h) = single(&a.h, "h")? {
                        s.spacings = vec![h];
                    }
                }
                StudyKind::Spatial => {
                    if let Some(Ladder(h)) = &a.h {
                        s.spacings = h.clone();
                    }
                    if let Some(t) = single(&a.tau, "tau")? {
                        s.steps = vec![t];
                        s.reference.tau = t / 8.0;
                    }
                }
            }
        }
        (specs, Some(table))
    } else {
        let kind = kind.ok_or("a preset is required")?;
        let problem = a.problem.unwrap_or(Problem::Weak);
        let data = a.data.unwrap_or(default_data(problem));
        let beta = a.beta.unwrap_or(0.0);
        let eps = a.eps.clone().map(|l| l.0).unwrap_or_else(|| vec![1.0]);
        let defaults = default_reference(problem);
        let study_h = if problem == Problem::WholeSpaceOscillatory { 1.0 / 16.0 } else { PI / 32.0 };
        let spec = match kind {
            StudyKind::Temporal => {
                let steps = a.tau.clone().ok_or("--tau ladder is required without --preset")?.0;
                let h = single(&a.h, "h")?.unwrap_or(study_h);
                let finest = steps.iter().cloned().fold(f64::INFINITY, f64::min);
                let reference = ReferenceGrid { h: defaults.h.min(h), tau: defaults.tau.min(finest / 8.0) };
                StudySpec::temporal(problem, data, beta, eps, steps, h, reference)
            }
            StudyKind::Spatial => {
                let spacings = a.h.clone().ok_or("--h ladder is required without --preset")?.0;
                let step = single(&a.tau, "tau")?.unwrap_or(defaults.tau);
                let finest = spacings.iter().cloned().fold(f64::INFINITY, f64::min);
                let reference = ReferenceGrid { h: defaults.h.min(finest), tau: step / 8.0 };
                StudySpec::spatial(problem, data, beta, eps, spacings, step, reference)
            }
        };
        (vec![spec], None)
    };

    for s in &mut specs {
        if let Some(Ladder(e)) = &a.eps {
            s.eps = e.clone();
        }
        if let Some(t0) = a.t0 {
            s.t0 = t0;
        }
        if let Some(l) = a.lambda {
            s.lambda = l;
        }
        if let Some(h) = a.ref_h {
            s.reference.h = h;
        }
        if let Some(t) = a.ref_tau {
            s.reference.tau = t;
        }
        s.max_steps = a.max_steps;
        if let Some(b) = a.budget_seconds {
            s.cell_budget = Duration::from_secs_f64(b);
        }
        s.timing = !a.no_timing;
        if a.spectral {
            s.projection = InitialProjection::spectral();
        }
        s.validate()?;
    }
    Ok((specs, table))
}

fn cache(a: &StudyArgs) -> Option<ReferenceCache> {
    if a.no_cache {
        return None;
    }
    Some(a.cache_dir.clone().map(ReferenceCache::new).unwrap_or_else(ReferenceCache::from_env))
}

fn report_format(a: &StudyArgs, path: &Path) -> ReportFormat {
    a.format.unwrap_or(match path.extension().and_then(|e| e.to_str()) {
        Some("json") => ReportFormat::Json,
        _ => ReportFormat::Csv,
    })
}

fn fmt_opt(x: Option<f64>, prec: usize) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.prec$e}"))
}

fn print_records(records: &[ConvergenceRecord]) {
    println!(
        "{:<24} {:>5} {:>10} {:>10} {:>10} {:>9} {:>10} {:>10} {:>6} {:>8} {:>9}",
        "problem", "beta", "eps", "h", "tau_or_k", "steps", "error_H0", "error_H1", "order", "flag", "seconds"
    );
    for r in records {
        println!(
            "{:<24} {:>5} {:>10.4e} {:>10.4e} {:>10.4e} {:>9} {:>10} {:>10} {:>6} {:>8} {:>9.2}",
            r.problem.as_str(),
            r.beta,
            r.eps,
            r.h,
            r.tau_or_k,
            r.steps,
            fmt_opt(r.error_h0, 3),
            fmt_opt(r.error_h1, 3),
            r.order.map_or_else(|| "-".to_string(), |o| format!("{o:.2}")),
            r.stable_flag.as_str(),
            r.wall_seconds
        );
    }
}

/// Prints a diff of every failing cell and returns whether all compared cells passed.
fn report_check(records: &[ConvergenceRecord], table: &PrintedTable) -> bool {
    let checks = check_table(records, table);
    let compared: Vec<_> = checks.iter().filter(|c| c.measured.is_some() || c.measured_order.is_some()).collect();
    let failed: Vec<_> = compared.iter().filter(|c| !c.passed()).collect();
    for c in &failed {
        let mut line = format!("  beta={} eps={} step={:.4e}:", c.beta, c.eps, c.step);
        if c.error_ok == Some(false) {
            line.push_str(&format!(
                " error {} vs printed {}",
                fmt_opt(c.measured, 3),
                c.printed.map_or_else(|| "<1e-7".to_string(), |p| format!("{p:.2e}"))
            ));
            if let Some(rel) = c.relative_error() {
                line.push_str(&format!(" (rel {rel:.2})"));
            }
        }
        if c.order_ok == Some(false) {
            line.push_str(&format!(
                " order {} vs printed {}",
                c.measured_order.map_or_else(|| "-".to_string(), |o| format!("{o:.2}")),
                c.printed_order.map_or_else(|| "-".to_string(), |o| format!("{o:.2}"))
            ));
        }
        println!("{line}");
    }
    println!(
        "check table{}: {} cells compared, {} outside tolerance (errors {:.0}%, orders 0.1)",
        table.id,
        compared.len(),
        failed.len(),
        100.0 * table.error_tolerance()
    );
    failed.is_empty()
}

fn study(a: StudyArgs, kind: Option<StudyKind>, cmd: &str) -> CmdResult {
    let (specs, table) = study_specs(&a, kind, cmd)?;
    if let Some(path) = &a.out {
        refuse_overwrite(path, a.force)?;
    }
    let cache = cache(&a);
    let mut all = Vec::new();
    for spec in &specs {
        let records = match spec.kind {
            StudyKind::Temporal => temporal_study(spec, cache.as_ref())?,
            StudyKind::Spatial => spatial_study(spec, cache.as_ref())?,
        };
        all.extend(records);
    }
    print_records(&all);
    if let Some(path) = &a.out {
        emit_report(&all, path, report_format(&a, path), a.force)?;
        println!("wrote {} records to {}", all.len(), path.display());
    }
    if a.check {
        let table = table.ok_or("--check compares against a preset; pass --preset")?;
        if !report_check(&all, &table) {
            return Ok(ExitCode::FAILURE);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn eps_scaling(a: StudyArgs) -> CmdResult {
    let (mut specs, _) = study_specs(&a, Some(StudyKind::Temporal), "eps-scaling")?;
    if let Some(path) = &a.out {
        refuse_overwrite(path, a.force)?;
    }
    for s in &mut specs {
        if s.steps.len() > 1 {
            s.steps = vec![*s.steps.last().expect("nonempty ladder")];
        }
    }
    let cache = cache(&a);
    let mut reports: Vec<ScalingReport> = Vec::new();
    let mut ok = true;
    for spec in &specs {
        let r = eps_scaling_study(spec, cache.as_ref())?;
        print_records(&r.records);
        let ratios: Vec<String> = r.adjacent_ratios.iter().map(|x| format!("{x:.2}")).collect();
        println!("beta {}  step {:.4e}", r.beta, r.step);
        println!("  adjacent ratios e(eps)/e(eps/2): {}", ratios.join(" "));
        match r.slope {
            Some(s) => {
                let pass = (s - r.expected_slope).abs() <= 0.3;
                println!("  fitted slope {s:.3}, expected {:.1} +- 0.3: {}", r.expected_slope, if pass { "ok" } else { "off" });
                ok &= pass;
            }
            None => {
                println!("  fitted slope unavailable (fewer than two usable cells)");
                ok = false;
            }
        }
        reports.push(r);
    }
    if let Some(path) = &a.out {
        match report_format(&a, path) {
            ReportFormat::Json => {
                let mut w = BufWriter::new(File::create(path)?);
                serde_json::to_writer_pretty(&mut w, &reports)?;
                w.flush()?;
            }
            ReportFormat::Csv => {
                let all: Vec<ConvergenceRecord> = reports.iter().flat_map(|r| r.records.clone()).collect();
                emit_report(&all, path, ReportFormat::Csv, true)?;
            }
        }
        println!("wrote {}", path.display());
    }
    if a.check && !ok {
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn stability_probe(a: ProbeArgs) -> CmdResult {
    let (x0, x1) = InitialDataTag::torus();
    let grid = Grid::with_max_spacing(x0, x1, a.h)?;
    let p = probe_stability(a.h, &grid, a.eps, a.beta, a.sigma, a.steps);
    let state = |bounded: bool| if bounded { "bounded" } else { "growing" };
    println!("h, eps, beta     {}, {}, {}", a.h, a.eps, a.beta);
    println!("sigma_max        {}", a.sigma);
    println!("modes            {}", grid.modes());
    println!("step bound       {:.6e}", p.bound);
    match p.threshold {
        Some(t) => println!("threshold        {t:.6e} ({:.4} x bound)", t / p.bound),
        None => println!("threshold        none up to {:.6e} (4 x bound)", p.search_limit),
    }
    println!("0.99 x bound     growth {:.3e} over {} steps: {}", p.growth_below, p.steps, state(p.bounded_below()));
    println!("1.01 x bound     growth {:.3e} over {} steps: {}", p.growth_above, p.steps, state(p.bounded_above()));
    if p.dichotomy() {
        println!("dichotomy        observed");
    } else {
        println!("dichotomy        not observed; the bound is conservative at this sigma");
    }
    if a.check && !p.dichotomy() {
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}
