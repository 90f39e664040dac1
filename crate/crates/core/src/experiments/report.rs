//! CSV and JSON reports of convergence records.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::study::{sort_records, ConvergenceRecord};

pub const CSV_COLUMNS: [&str; 14] = [
    "problem",
    "eps",
    "beta",
    "h",
    "tau_or_k",
    "T0",
    "lambda",
    "error_H0",
    "error_H1",
    "order",
    "stable_flag",
    "wall_seconds",
    "steps",
    "reference_hash",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        })
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidParameter(format!("unknown report format '{other}'"))),
        }
    }
}

/// Header plus one row per record, in the order given.
pub fn write_csv(records: &[ConvergenceRecord], w: impl Write) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(CSV_COLUMNS)?;
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv(r: impl Read) -> Result<Vec<ConvergenceRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(Error::Config(format!("unexpected CSV header: {headers:?}")));
    }
    rdr.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_json(records: &[ConvergenceRecord], mut w: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, records)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_json(r: impl Read) -> Result<Vec<ConvergenceRecord>> {
    Ok(serde_json::from_reader(r)?)
}

/// Writes the records, sorted by problem, beta, eps and step (both descending),
/// to `path`. An existing file is only replaced when `force` is set.
pub fn emit_report(records: &[ConvergenceRecord], path: &Path, format: ReportFormat, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(Error::Exists(path.to_path_buf()));
    }
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let mut buf = Vec::new();
    match format {
        ReportFormat::Csv => write_csv(&sorted, &mut buf)?,
        ReportFormat::Json => write_json(&sorted, &mut buf)?,
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, buf)?;
    Ok(())
}
