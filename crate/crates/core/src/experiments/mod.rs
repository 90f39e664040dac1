//! Convergence studies, reporting and the table presets.

pub mod presets;
pub mod report;
pub mod study;

pub use presets::{check_against_table, check_table, printed_table, preset, CellCheck, PrintedBlock, PrintedTable, FLOOR};
pub use report::{emit_report, read_csv, read_json, write_csv, write_json, ReportFormat, CSV_COLUMNS};
pub use study::{
    eps_scaling_study, fill_orders, fit_line, row_reference, sort_records, spatial_study, temporal_study,
    ConvergenceRecord, ReferenceGrid, ScalingReport, StableFlag, StudyKind, StudySpec, EXACT_TOL,
};

use crate::error::Result;
use crate::spectral::{sobolev_norm, SpectralField};

/// `|| P u_ref - u ||_lambda` with `P` the spectral truncation of the reference
/// onto the numeric field's modes. Both grids must cover the same interval and
/// the reference must be at least as fine.
pub fn error_norm(reference: &SpectralField, numeric: &SpectralField, lambda: i32) -> Result<f64> {
    let restricted = reference.restrict_to(numeric.grid())?;
    sobolev_norm(&restricted.sub(numeric)?, lambda)
}
