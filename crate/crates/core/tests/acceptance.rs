//! Reproduction and property criteria C1 to C6. Prints one PASS/FAIL line per
//! criterion after its sub-checks. Exits 0 unless `KGE_ACCEPTANCE_STRICT=1` is
//! set and a criterion fails. `KGE_ACCEPTANCE_ONLY=C1,C5` runs a subset.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{h1_distance, initial, max_coeff_diff, reference_at, torus_grid};
use kge_core::ewi::{
    amplitude_rescale, energy, ewi_coefficients, exact_linear, integrate, run, EwiCoefficients, EwiState, RunConfig,
    SnapshotObserver, SolverParams,
};
use kge_core::experiments::{
    check_table, eps_scaling_study, printed_table, preset, spatial_study, temporal_study, CellCheck, ConvergenceRecord,
    StableFlag, StudyKind, StudySpec, FLOOR,
};
use kge_core::oscillatory::{run_oscillatory, OscParams};
use kge_core::reference::{PhaseState, ProblemSpec, ReferenceCache, SplittingIntegrator};
use kge_core::spectral::{forward_coefficients, inverse_transform, make_grid, sobolev_norm};
use kge_core::stability::probe_stability;
use kge_core::{Grid, InitialData, NodalField, SpectralField};
use num_complex::Complex64;

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), pass, detail: detail.into() }
    }
}

struct Criterion {
    id: &'static str,
    title: &'static str,
    budget: Duration,
    checks: Vec<Check>,
}

impl Criterion {
    fn new(id: &'static str, title: &'static str, budget_seconds: u64) -> Self {
        Criterion { id, title, budget: Duration::from_secs(budget_seconds), checks: Vec::new() }
    }

    fn push(&mut self, c: Check) {
        println!("    [{}] {}: {}", if c.pass { "ok" } else { "FAIL" }, c.name, c.detail);
        self.checks.push(c);
    }

    fn finish(mut self, elapsed: Duration) -> bool {
        self.push(Check::new(
            "runtime",
            elapsed <= self.budget,
            format!("{:.1} s (limit {} s)", elapsed.as_secs_f64(), self.budget.as_secs()),
        ));
        let pass = self.checks.iter().all(|c| c.pass);
        println!("{} {} {}", self.id, if pass { "PASS" } else { "FAIL" }, self.title);
        pass
    }
}

fn cache() -> ReferenceCache {
    ReferenceCache::from_env()
}

fn run_specs(specs: Vec<StudySpec>) -> Vec<ConvergenceRecord> {
    let cache = cache();
    let mut out = Vec::new();
    for s in specs {
        let recs = match s.kind {
            StudyKind::Temporal => temporal_study(&s, Some(&cache)),
            StudyKind::Spatial => spatial_study(&s, Some(&cache)),
        };
        out.extend(recs.expect("study runs"));
    }
    out
}

fn cell_label(c: &CellCheck) -> String {
    format!("beta {} eps {:.5} step {:.5}", c.beta, c.eps, c.step)
}

/// Error-magnitude and printed-order sub-checks for one table.
fn table_checks(crit: &mut Criterion, id: u8, records: &[ConvergenceRecord]) {
    let table = printed_table(id).unwrap();
    let checks = check_table(records, &table);
    let errs: Vec<&CellCheck> = checks.iter().filter(|c| c.error_ok.is_some()).collect();
    let good = errs.iter().filter(|c| c.error_ok == Some(true)).count();
    let missing = checks.iter().filter(|c| c.measured.is_none()).count();
    let worst = errs
        .iter()
        .filter_map(|c| c.relative_error().map(|r| (r, *c)))
        .max_by(|a, b| a.0.total_cmp(&b.0));
    let detail = match worst {
        Some((r, c)) => format!(
            "{good}/{} within {:.0}%, {missing} unmeasured; worst rel {r:.3} at {} (printed {:.3e}, measured {:.3e})",
            checks.len(),
            table.error_tolerance() * 100.0,
            cell_label(c),
            c.printed.unwrap_or(f64::NAN),
            c.measured.unwrap_or(f64::NAN)
        ),
        None => format!("no comparable cells, {missing} unmeasured"),
    };
    crit.push(Check::new(format!("table {id} errors"), good == checks.len() && missing == 0, detail));

    let ords: Vec<&CellCheck> = checks.iter().filter(|c| c.order_ok.is_some()).collect();
    let good = ords.iter().filter(|c| c.order_ok == Some(true)).count();
    let worst = ords
        .iter()
        .map(|c| ((c.measured_order.unwrap_or(f64::INFINITY) - c.printed_order.unwrap()).abs(), *c))
        .max_by(|a, b| a.0.total_cmp(&b.0));
    let detail = match worst {
        Some((d, c)) => format!("{good}/{} within 0.1; worst |diff| {d:.3} at {}", ords.len(), cell_label(c)),
        None => "no printed orders".into(),
    };
    crit.push(Check::new(format!("table {id} orders"), !ords.is_empty() && good == ords.len(), detail));
}

fn error_at(records: &[ConvergenceRecord], eps: f64, step: f64) -> Option<f64> {
    records
        .iter()
        .find(|r| (r.eps - eps).abs() <= 1e-12 * eps && (r.tau_or_k - step).abs() <= 1e-12 * step)
        .and_then(|r| r.error())
}

fn c1() -> (bool, Vec<ConvergenceRecord>) {
    let start = Instant::now();
    let mut crit = Criterion::new("C1", "Table 2 reproduction (beta = 0)", 120);
    let records = run_specs(preset(2).unwrap());
    table_checks(&mut crit, 2, &records);
    (crit.finish(start.elapsed()), records)
}

fn c2(table2: Option<&[ConvergenceRecord]>) -> bool {
    let start = Instant::now();
    let mut crit = Criterion::new("C2", "Tables 3 and 4 reproduction (beta = 1, 2)", 900);
    let t3 = run_specs(preset(3).unwrap());
    table_checks(&mut crit, 3, &t3);
    let t4 = run_specs(preset(4).unwrap());
    table_checks(&mut crit, 4, &t4);

    let block = printed_table(4).unwrap().blocks[0].clone();
    let mut worst = (0.0f64, 0.0);
    let mut complete = true;
    for &tau in &block.ladder {
        let col: Vec<f64> = block.eps.iter().filter_map(|&e| error_at(&t4, e, tau)).collect();
        complete &= col.len() == block.eps.len();
        let spread = col.iter().cloned().fold(0.0, f64::max) / col.iter().cloned().fold(f64::INFINITY, f64::min);
        if spread > worst.0 {
            worst = (spread, tau);
        }
    }
    crit.push(Check::new(
        "beta = 2 columns vary <= 2x across eps",
        complete && worst.0 <= 2.0,
        format!("largest max/min {:.3} at tau {:.5}", worst.0, worst.1),
    ));

    let owned;
    let t2 = match table2 {
        Some(r) => r,
        None => {
            owned = run_specs(preset(2).unwrap());
            &owned
        }
    };
    let b2 = printed_table(2).unwrap().blocks[0].clone();
    let tau = *b2.ladder.last().unwrap();
    let n = b2.eps.len();
    let ratio = match (error_at(t2, b2.eps[n - 2], tau), error_at(t2, b2.eps[n - 1], tau)) {
        (Some(a), Some(b)) => a / b,
        _ => f64::NAN,
    };
    crit.push(Check::new(
        "beta = 0 smallest-eps adjacent ratio = 4 +- 10%",
        (ratio - 4.0).abs() <= 0.4,
        format!("e(eps {}) / e(eps {}) at tau {tau:.5} = {ratio:.4}", b2.eps[n - 2], b2.eps[n - 1]),
    ));
    crit.finish(start.elapsed())
}

fn c3() -> bool {
    let start = Instant::now();
    let mut crit = Criterion::new("C3", "Table 1 spatial study", 300);
    let mut spec = preset(1).unwrap().remove(0);
    spec.eps = vec![1.0];
    let records = run_specs(vec![spec.clone()]);
    let printed = [4.05e-2, 8.80e-3, 1.53e-4];
    for (h, p) in spec.spacings.iter().zip(printed) {
        let m = records.iter().find(|r| (r.h - h).abs() <= 1e-12).and_then(|r| r.error());
        let rel = m.map(|m| (m - p).abs() / p).unwrap_or(f64::INFINITY);
        crit.push(Check::new(
            format!("eps = 1, h = {h:.5}"),
            rel <= 0.2,
            format!("measured {:.3e}, printed {p:.3e}, rel {rel:.3}", m.unwrap_or(f64::NAN)),
        ));
    }
    let h = spec.spacings[3];
    let m = records.iter().find(|r| (r.h - h).abs() <= 1e-12).and_then(|r| r.error());
    crit.push(Check::new(
        format!("eps = 1, h = {h:.5} at the reference floor"),
        m.is_some_and(|m| m <= FLOOR),
        format!("measured {:.3e} (limit {FLOOR:e})", m.unwrap_or(f64::NAN)),
    ));
    crit.finish(start.elapsed())
}

/// Cells above this step count are skipped in the oscillatory tables.
const OSC_MAX_STEPS: usize = 2_000_000;
const OSC_CELL_BUDGET: Duration = Duration::from_secs(240);

fn osc_specs(id: u8) -> Vec<StudySpec> {
    preset(id)
        .unwrap()
        .into_iter()
        .map(|mut s| {
            s.eps.retain(|&e| e >= 1.0 / 16.0);
            s.max_steps = Some(OSC_MAX_STEPS);
            s.cell_budget = OSC_CELL_BUDGET;
            s
        })
        .collect()
}

fn c4() -> bool {
    let start = Instant::now();
    let mut crit = Criterion::new("C4", "Oscillatory tables 5 to 8, eps >= 1/16", 1200);

    let t5 = run_specs(osc_specs(5));
    let skipped = t5.iter().filter(|r| r.stable_flag == StableFlag::Skipped).count();
    let mut rows = 0;
    let mut bad = Vec::new();
    let mut keys: Vec<(f64, f64)> = t5.iter().map(|r| (r.beta, r.eps)).collect();
    keys.dedup();
    for (beta, eps) in keys {
        let errs: Vec<f64> =
            t5.iter().filter(|r| r.beta == beta && r.eps == eps).filter_map(|r| r.error()).collect();
        if errs.len() < 2 {
            continue;
        }
        rows += 1;
        if errs.windows(2).any(|w| w[1] > w[0] && w[1] > FLOOR) {
            let list: Vec<String> = errs.iter().map(|e| format!("{e:.2e}")).collect();
            bad.push(format!("beta {beta} eps {eps}: {}", list.join(" ")));
        }
    }
    crit.push(Check::new(
        "table 5 errors decrease under refinement to the floor",
        rows > 0 && bad.is_empty(),
        format!("{rows} rows, {skipped} cells skipped{}", if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }),
    ));

    for id in 6..=8 {
        let records = run_specs(osc_specs(id));
        let table = printed_table(id).unwrap();
        let block = &table.blocks[0];
        let skipped = records.iter().filter(|r| r.stable_flag == StableFlag::Skipped).count();
        let mut cells = 0;
        let mut bad = Vec::new();
        for (i, &eps) in block.eps.iter().enumerate().filter(|(_, &e)| e >= 1.0 / 16.0) {
            let first = block.diagonal.as_ref().map_or(1, |d| d[i].max(1));
            for (j, &k) in block.ladder.iter().enumerate().skip(first) {
                let Some(printed) = block.orders[i][j] else {
                    continue;
                };
                let Some(r) = records.iter().find(|r| r.eps == eps && (r.tau_or_k - k).abs() <= 1e-12 * k) else {
                    continue;
                };
                if r.stable_flag == StableFlag::Skipped {
                    continue;
                }
                cells += 1;
                match r.order {
                    Some(o) if (1.9..=2.1).contains(&o) => {}
                    o => bad.push(format!("eps {eps} k {k}: {} (printed {printed:.2})", o.map_or("-".into(), |o| format!("{o:.3}")))),
                }
            }
        }
        crit.push(Check::new(
            format!("table {id} printed orders on and above the diagonal in [1.9, 2.1]"),
            cells > 0 && bad.is_empty(),
            format!(
                "{cells} cells, {skipped} skipped{}",
                if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }
            ),
        ));

        if id == 6 {
            let n = block.eps.len();
            let mut worst = (0.0f64, 0.0, 0.0);
            let mut complete = true;
            for &k in &block.ladder {
                match (error_at(&records, block.eps[n - 2], k), error_at(&records, block.eps[n - 1], k)) {
                    (Some(a), Some(b)) => {
                        let dev = (a / b - 4.0).abs();
                        if dev >= worst.0 {
                            worst = (dev, a / b, k);
                        }
                    }
                    _ => complete = false,
                }
            }
            crit.push(Check::new(
                "table 6 smallest-eps column ratios = 4 +- 10%",
                complete && worst.0 <= 0.4,
                format!("worst ratio {:.4} at k {:.5}", worst.1, worst.2),
            ));
        }
    }
    crit.finish(start.elapsed())
}

/// Deterministic pseudo-random values in [-1, 1).
fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..n)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect()
}

fn c5() -> bool {
    let start = Instant::now();
    let mut crit = Criterion::new("C5", "Property suite", 180);
    let data = InitialData::long_time();
    let grid = torus_grid(64);

    // (a) linear limit
    let params = SolverParams::new(0.0, 0.0, 1e-3, 10.0).unwrap();
    let out = run(&params, &grid, &data, &RunConfig::default(), &mut []).unwrap();
    let exact = exact_linear(&out.initial, &out.initial_velocity, out.diagnostics.final_time).unwrap();
    let e = sobolev_norm(&out.final_field.sub(&exact).unwrap(), 1).unwrap();
    crit.push(Check::new(
        "(a) eps = 0 matches the closed form over 1e4 steps",
        params.steps() == 10_000 && e <= 1e-10,
        format!("H1 error {e:.2e}"),
    ));

    // (b) reversibility
    let (phi, gamma) = initial(&data, &grid);
    let mut state = EwiState::start(&phi, &gamma, Arc::new(ewi_coefficients(0.01, &grid, 1.0)), false).unwrap();
    let u1 = state.curr();
    while state.n() < 101 {
        state.leapfrog_step().unwrap();
    }
    let mut back = state.reversed().unwrap();
    while back.n() > 1 {
        back.leapfrog_step().unwrap();
    }
    let e = sobolev_norm(&back.curr().sub(&u1).unwrap(), 1).unwrap();
    crit.push(Check::new("(b) 100 steps forward and back", e <= 1e-10, format!("H1 difference {e:.2e}")));

    // (c), (d) transforms
    let mut worst_rt: f64 = 0.0;
    let mut worst_pv: f64 = 0.0;
    for (i, m) in [4usize, 8, 16, 32, 64, 128, 256].into_iter().enumerate() {
        for trial in 0..8u64 {
            let g: Arc<Grid> = make_grid(-1.0 - trial as f64, 2.0 + 3.0 * trial as f64, m).unwrap();
            let values = noise(m, 100 * i as u64 + trial);
            let f = NodalField::new(g.clone(), values.clone()).unwrap();
            let c = forward_coefficients(&f);
            let back = inverse_transform(&c).unwrap();
            let scale = values.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            let rt = back.values().iter().zip(&values).fold(0.0f64, |s, (x, y)| s.max((x - y).abs())) / scale;
            worst_rt = worst_rt.max(rt);

            let raw = noise(m, 7 + 100 * i as u64 + trial);
            let mut s = SpectralField::zeros(g.clone());
            s.set_mode(0, Complex64::new(raw[0], 0.0)).unwrap();
            for l in 1..m / 2 {
                let z = Complex64::new(raw[2 * l - 1], raw[2 * l]);
                s.set_mode(l as i64, z).unwrap();
                s.set_mode(-(l as i64), z.conj()).unwrap();
            }
            let u = inverse_transform(&s).unwrap();
            let quad = g.h() * u.values().iter().map(|v| v * v).sum::<f64>();
            let n0 = sobolev_norm(&s, 0).unwrap();
            worst_pv = worst_pv.max((n0 * n0 * g.len() - quad).abs() / quad);
        }
    }
    crit.push(Check::new("(c) transform roundtrip, M = 4 .. 256", worst_rt <= 1e-13, format!("worst relative {worst_rt:.2e}")));
    crit.push(Check::new("(d) Parseval, M = 4 .. 256", worst_pv <= 1e-11, format!("worst relative {worst_pv:.2e}")));

    // (e) stability dichotomy where the cubic term dominates the bound
    for (label, m, eps, beta, sigma) in [("weak", 16, 1.0, 0.0, 1e4), ("oscillatory", 32, 0.25, 1.0, 1e6)] {
        let g = Grid::new(0.0, 2.0 * PI, m).unwrap();
        let p = probe_stability(g.h(), &g, eps, beta, sigma, 10_000);
        crit.push(Check::new(
            format!("(e) {label} dichotomy at +-1% of the bound"),
            p.dichotomy(),
            format!(
                "M {m} eps {eps} beta {beta} sigma {sigma:e}: bound {:.6}, threshold {:?}, growth {:.3e} / {:.3e}",
                p.bound, p.threshold, p.growth_below, p.growth_above
            ),
        ));
    }

    // (f) weak and oscillatory forms
    let mut worst: f64 = 0.0;
    for (eps, beta, k) in [(0.5, 1.0, 0.0125), (0.5, 2.0, 0.01), (0.25, 0.5, 0.02)] {
        let p = OscParams::new(eps, beta, k, 1.0).unwrap();
        let mut osc = SnapshotObserver::new(1);
        run_oscillatory(&p, &grid, &data, &RunConfig::default(), &mut [&mut osc]).unwrap();
        let w = SolverParams::new(eps, beta, p.weak_step(), 1.0).unwrap();
        let mut weak = SnapshotObserver::new(1);
        run(&w, &grid, &data, &RunConfig::default(), &mut [&mut weak]).unwrap();
        assert_eq!(osc.snapshots.len(), weak.snapshots.len());
        for (a, b) in osc.snapshots.iter().zip(&weak.snapshots) {
            worst = worst.max(max_coeff_diff(&a.2, &b.2));
        }
    }
    crit.push(Check::new("(f) oscillatory run equals weak run with tau = k eps^-beta", worst <= 1e-12, format!("max difference {worst:.2e}")));

    // (g) reference energy and self-convergence
    let eps = 0.5;
    let (u, v) = initial(&data, &grid);
    let s0 = PhaseState::new(u, v, 0.0).unwrap();
    let e0 = energy(&s0.u, &s0.v, eps).unwrap();
    let mut integ = SplittingIntegrator::new(&s0, 1e-4, eps);
    let mut drift: f64 = 0.0;
    for _ in 0..100 {
        integ.advance(1000).unwrap();
        let s = integ.state();
        drift = drift.max(((energy(&s.u, &s.v, eps).unwrap() - e0) / e0).abs());
    }
    crit.push(Check::new(
        "(g) reference energy drift over T = 10",
        (integ.state().t - 10.0).abs() < 1e-9 && drift <= 1e-6,
        format!("eps {eps}, tau 1e-4: relative drift {drift:.2e}"),
    ));
    let spec = ProblemSpec::weak(1.0, 0.0).unwrap();
    let tau = 0.01;
    let at = |t: f64| reference_at(spec, 64, t, 1.0);
    let (a, b, c, d) = (at(tau), at(tau / 2.0), at(tau / 8.0), at(tau / 16.0));
    let limit = d.scaled(4.0 / 3.0).sub(&c.scaled(1.0 / 3.0)).unwrap();
    let ratio = h1_distance(&limit, &a) / h1_distance(&limit, &b);
    let raw = h1_distance(&c, &a) / h1_distance(&c, &b);
    crit.push(Check::new(
        "(g) Strang self-convergence ratio in [3.8, 4.2]",
        (3.8..=4.2).contains(&ratio),
        format!("tau {tau}: ratio {ratio:.4} against the extrapolated limit ({raw:.4} against tau/8)"),
    ));

    // (h) small-initial-data dual run
    let mut worst: f64 = 0.0;
    for eps in [0.5, 0.125] {
        let params = SolverParams::new(eps, 0.0, 0.01, 2.0).unwrap();
        let mut weak = SnapshotObserver::new(1);
        run(&params, &grid, &data, &RunConfig::default(), &mut [&mut weak]).unwrap();
        let sie = Arc::new(EwiCoefficients::with_strength(0.01, &grid, 1.0));
        let mut small = SnapshotObserver::new(1);
        integrate(sie, params.steps(), &grid, &data.scaled(eps), &RunConfig::default(), &mut [&mut small]).unwrap();
        let u: Vec<_> = weak.snapshots.iter().map(|s| s.2.clone()).collect();
        let w = amplitude_rescale(&u, eps).unwrap();
        assert_eq!(w.len(), small.snapshots.len());
        for (x, y) in w.iter().zip(&small.snapshots) {
            worst = worst.max(max_coeff_diff(x, &y.2));
        }
    }
    crit.push(Check::new("(h) rescaled weak run equals the small-data run", worst <= 1e-12, format!("max difference {worst:.2e}")));
    crit.finish(start.elapsed())
}

fn c6() -> bool {
    let start = Instant::now();
    let mut crit = Criterion::new("C6", "eps-scaling slopes 2 - beta", 300);
    let cache = cache();
    for id in 2..=4 {
        let mut spec = preset(id).unwrap().remove(0);
        spec.steps = vec![*spec.steps.last().unwrap()];
        let r = eps_scaling_study(&spec, Some(&cache)).expect("scaling study runs");
        let slope = r.slope.unwrap_or(f64::NAN);
        crit.push(Check::new(
            format!("beta = {} slope", r.beta),
            (slope - r.expected_slope).abs() <= 0.3,
            format!(
                "h {:.5}, tau {:.5}, {} eps values: slope {slope:.3}, expected {}",
                spec.spacings[0],
                r.step,
                spec.eps.len(),
                r.expected_slope
            ),
        ));
    }
    crit.finish(start.elapsed())
}

fn main() -> ExitCode {
    let only: Option<Vec<String>> =
        std::env::var("KGE_ACCEPTANCE_ONLY").ok().map(|s| s.split(',').map(|p| p.trim().to_uppercase()).collect());
    let selected = |id: &str| only.as_ref().is_none_or(|o| o.iter().any(|p| p == id));
    println!("reference cache: {}", cache().dir().display());

    let mut results = Vec::new();
    let mut table2 = None;
    if selected("C1") {
        let (pass, records) = c1();
        results.push(("C1", pass));
        table2 = Some(records);
    }
    if selected("C2") {
        results.push(("C2", c2(table2.as_deref())));
    }
    if selected("C3") {
        results.push(("C3", c3()));
    }
    if selected("C4") {
        results.push(("C4", c4()));
    }
    if selected("C5") {
        results.push(("C5", c5()));
    }
    if selected("C6") {
        results.push(("C6", c6()));
    }

    let failed: Vec<&str> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    println!("summary: {} of {} criteria pass{}", results.len() - failed.len(), results.len(), if failed.is_empty() {
        String::new()
    } else {
        format!(" (failing: {})", failed.join(", "))
    });
    let strict = std::env::var("KGE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && !failed.is_empty() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
