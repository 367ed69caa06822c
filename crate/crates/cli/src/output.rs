//! CSV and JSON artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::run::{ResultRow, RunRecord, Trace};
use crate::CliError;

pub const RESULTS_FILE: &str = "results.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const TRACE_DIR: &str = "traces";

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let err = |e: csv::Error| CliError::Csv(path.to_path_buf(), e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::Io(path.to_path_buf(), e))
}

#[derive(Serialize)]
struct TimingRow<'a> {
    seed: u64,
    algorithm: &'a str,
    sinr_db: f64,
    millis: u128,
}

/// `traces/<algorithm>_<target>dB.csv`, with a seed prefix for sweeps.
pub fn trace_path(out: &Path, row: &ResultRow, with_seed: bool) -> PathBuf {
    let name = if with_seed {
        format!("seed{}_{}_{}dB.csv", row.seed, row.algorithm, row.sinr_db)
    } else {
        format!("{}_{}dB.csv", row.algorithm, row.sinr_db)
    };
    out.join(TRACE_DIR).join(name)
}

/// Writes the result rows, the wall-clock timings and every trace.
pub fn write_records(out: &Path, records: &[RunRecord], results_file: &str, with_seed: bool) -> Result<(), CliError> {
    ensure_dir(out)?;
    let rows: Vec<&ResultRow> = records.iter().map(|r| &r.row).collect();
    write_csv(&out.join(results_file), &rows)?;
    let timings: Vec<TimingRow> = records
        .iter()
        .map(|r| TimingRow { seed: r.row.seed, algorithm: r.row.algorithm, sinr_db: r.row.sinr_db, millis: r.millis })
        .collect();
    write_csv(&out.join(TIMINGS_FILE), &timings)?;
    if records.iter().any(|r| r.trace.is_some()) {
        ensure_dir(&out.join(TRACE_DIR))?;
    }
    for r in records {
        let path = trace_path(out, &r.row, with_seed);
        match &r.trace {
            Some(Trace::Benders(t)) => write_csv(&path, t)?,
            Some(Trace::Subgrad(t)) => write_csv(&path, t)?,
            Some(Trace::Oracle(t)) => write_csv(&path, t)?,
            None => {}
        }
    }
    Ok(())
}
