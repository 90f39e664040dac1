//! `kge`: single runs, reference solutions, convergence studies and stability
//! probes for the nonlinear Klein-Gordon solvers.

mod commands;
mod config;
mod values;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kge_core::experiments::ReportFormat;
use kge_core::reference::Problem;
use kge_core::InitialDataTag;

use values::Ladder;

#[derive(Debug, Parser)]
#[command(name = "kge", version, about = "EWI-FP solvers for the nonlinear Klein-Gordon equation")]
pub struct Cli {
    /// Log level filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    log: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the solver once and report diagnostics.
    Solve(SolveArgs),
    /// Build (or load from the cache) a splitting reference solution.
    Reference(ReferenceArgs),
    /// Temporal convergence study at fixed mesh size.
    ConvergeTime(StudyArgs),
    /// Spatial convergence study at fixed time step.
    ConvergeSpace(StudyArgs),
    /// Fit the error against eps at a fixed step.
    EpsScaling(StudyArgs),
    /// Oscillatory table presets (table5 .. table8).
    OscillatoryTable(StudyArgs),
    /// Linearized stability around the step-size bound.
    StabilityProbe(ProbeArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SolveArgs {
    #[arg(long, default_value = "1", value_parser = values::number)]
    pub eps: f64,
    #[arg(long, default_value = "0", value_parser = values::number)]
    pub beta: f64,
    /// Time step (`k` for oscillatory problems).
    #[arg(long, default_value = "0.01", value_parser = values::number)]
    pub tau: f64,
    #[arg(long, default_value_t = 64)]
    pub modes: usize,
    #[arg(long, default_value = "1", value_parser = values::number)]
    pub t0: f64,
    #[arg(long, default_value = "weak")]
    pub problem: Problem,
    /// Initial data; defaults to the problem's own.
    #[arg(long)]
    pub data: Option<InitialDataTag>,
    /// Snapshot CSV (`time,x,u`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of evenly spaced snapshots written to `--out`, including the initial level.
    #[arg(long, default_value_t = 2)]
    pub snapshots: usize,
    /// L2-project the initial data instead of interpolating them.
    #[arg(long)]
    pub spectral: bool,
    /// Evaluate the cubic term without aliasing.
    #[arg(long)]
    pub dealias: bool,
    /// Fail instead of warning when the step exceeds the stability bound.
    #[arg(long)]
    pub enforce_stability: bool,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub force: bool,
    /// Exit 1 unless the run is stable (and, for eps = 0, matches the closed form to 1e-10).
    #[arg(long)]
    pub check: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ReferenceArgs {
    #[arg(long, default_value = "1", value_parser = values::number)]
    pub eps: f64,
    #[arg(long, default_value = "0", value_parser = values::number)]
    pub beta: f64,
    #[arg(long, default_value = "weak")]
    pub problem: Problem,
    #[arg(long)]
    pub data: Option<InitialDataTag>,
    /// Mesh size; defaults to the reference mesh of the problem.
    #[arg(long, value_parser = values::number)]
    pub h: Option<f64>,
    /// Mode count; overrides `--h`.
    #[arg(long)]
    pub modes: Option<usize>,
    /// Reference step in the problem's own time variable.
    #[arg(long, value_parser = values::number)]
    pub tau: Option<f64>,
    /// Horizon; output at `t0 / eps^beta` (weak) or `s = t0` (oscillatory).
    #[arg(long, default_value = "1", value_parser = values::number)]
    pub t0: f64,
    /// Explicit output times, overriding `--t0`.
    #[arg(long, value_parser = values::ladder)]
    pub times: Option<Ladder>,
    #[arg(long, env = "KGE_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct StudyArgs {
    /// Load a table's ladders (table1 .. table8).
    #[arg(long, value_parser = values::table_id)]
    pub preset: Option<u8>,
    #[arg(long)]
    pub problem: Option<Problem>,
    #[arg(long)]
    pub data: Option<InitialDataTag>,
    /// With a preset, selects one block.
    #[arg(long, value_parser = values::number)]
    pub beta: Option<f64>,
    /// Comma-separated eps ladder.
    #[arg(long, value_parser = values::ladder)]
    pub eps: Option<Ladder>,
    /// Time steps: the ladder of a temporal study, the fixed step of a spatial one.
    #[arg(long, value_parser = values::ladder)]
    pub tau: Option<Ladder>,
    /// Mesh sizes: the ladder of a spatial study, the fixed mesh of a temporal one.
    #[arg(long, value_parser = values::ladder)]
    pub h: Option<Ladder>,
    #[arg(long, value_parser = values::number)]
    pub t0: Option<f64>,
    /// Norm index, 0 or 1.
    #[arg(long)]
    pub lambda: Option<i32>,
    #[arg(long, value_parser = values::number)]
    pub ref_h: Option<f64>,
    #[arg(long, value_parser = values::number)]
    pub ref_tau: Option<f64>,
    /// Skip cells with more steps than this.
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Wall-clock budget per cell.
    #[arg(long)]
    pub budget_seconds: Option<f64>,
    /// Write zero wall times so reports are byte-stable.
    #[arg(long)]
    pub no_timing: bool,
    /// L2-project the initial data instead of interpolating them.
    #[arg(long)]
    pub spectral: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report format; defaults to the extension of `--out`.
    #[arg(long)]
    pub format: Option<ReportFormat>,
    #[arg(long)]
    pub force: bool,
    /// Compare against the preset's printed values; exit 1 with a diff on mismatch.
    #[arg(long)]
    pub check: bool,
    #[arg(long, env = "KGE_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Recompute references without reading or writing the cache.
    #[arg(long)]
    pub no_cache: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ProbeArgs {
    #[arg(long, value_parser = values::number)]
    pub h: f64,
    #[arg(long, default_value = "1", value_parser = values::number)]
    pub eps: f64,
    #[arg(long, default_value = "0", value_parser = values::number)]
    pub beta: f64,
    #[arg(long, default_value = "0", value_parser = values::number)]
    pub sigma: f64,
    /// Length of the linearized runs.
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    /// Exit 1 unless the bound separates bounded from growing runs.
    #[arg(long)]
    pub check: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(argv);
    env_logger::Builder::new().parse_filters(&cli.log).parse_default_env().init();
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
