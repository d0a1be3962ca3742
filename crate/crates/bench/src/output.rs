//! CSV and JSON emission of result rows.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::experiment::ResultRow;

pub const COLUMNS: [&str; 22] = [
    "dataset",
    "task",
    "selector",
    "arm",
    "seed",
    "k",
    "accuracy",
    "delta_sp",
    "delta_eo",
    "raw_sp",
    "rho_norm",
    "alpha1",
    "alpha2",
    "residual_norm",
    "worstcase_bound",
    "certified",
    "wall_time",
    "row",
    "setting",
    "val_accuracy",
    "rho_norm_x",
    "sp_bound",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(BenchError::Config(format!("unknown output format `{other}`"))),
        }
    }
}

/// Four decimals; magnitudes below `1e-3` switch to four-decimal
/// scientific notation so residuals stay readable.
pub fn format_float(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:.4e}")
    } else {
        format!("{v:.4}")
    }
}

fn round(v: f64) -> f64 {
    format_float(v).parse().unwrap_or(v)
}

/// The row as it appears in an emitted file.
pub fn rounded(row: &ResultRow) -> ResultRow {
    let opt = |v: Option<f64>| v.map(round);
    ResultRow {
        accuracy: round(row.accuracy),
        delta_sp: round(row.delta_sp),
        delta_eo: round(row.delta_eo),
        raw_sp: round(row.raw_sp),
        rho_norm: round(row.rho_norm),
        alpha1: opt(row.alpha1),
        alpha2: opt(row.alpha2),
        residual_norm: opt(row.residual_norm),
        worstcase_bound: opt(row.worstcase_bound),
        wall_time: round(row.wall_time),
        val_accuracy: round(row.val_accuracy),
        rho_norm_x: round(row.rho_norm_x),
        sp_bound: round(row.sp_bound),
        ..row.clone()
    }
}

fn record(row: &ResultRow) -> Vec<String> {
    let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
    vec![
        row.dataset.clone(),
        row.task.clone(),
        row.selector.clone(),
        row.arm.clone(),
        row.seed.map(|s| s.to_string()).unwrap_or_default(),
        row.k.to_string(),
        format_float(row.accuracy),
        format_float(row.delta_sp),
        format_float(row.delta_eo),
        format_float(row.raw_sp),
        format_float(row.rho_norm),
        opt(row.alpha1),
        opt(row.alpha2),
        opt(row.residual_norm),
        opt(row.worstcase_bound),
        row.certified.map(|c| c.to_string()).unwrap_or_default(),
        format_float(row.wall_time),
        row.row.name().to_string(),
        row.setting.clone(),
        format_float(row.val_accuracy),
        format_float(row.rho_norm_x),
        format_float(row.sp_bound),
    ]
}

pub fn write_rows<W: Write>(rows: &[ResultRow], format: Format, mut out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(BenchError::Config("no result rows to emit".into()));
    }
    let io_err = |e: io::Error| BenchError::io("<output>", e);
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let csv_err = |e: csv::Error| io_err(e.into());
            w.write_record(COLUMNS).map_err(csv_err)?;
            for row in rows {
                w.write_record(record(row)).map_err(csv_err)?;
            }
            w.flush().map_err(io_err)?;
        }
        Format::Json => {
            let rounded: Vec<ResultRow> = rows.iter().map(rounded).collect();
            serde_json::to_writer_pretty(&mut out, &rounded).map_err(|e| io_err(e.into()))?;
            writeln!(out).map_err(io_err)?;
        }
    }
    Ok(())
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn emit_results(rows: &[ResultRow], format: Format, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| BenchError::io(p, e))?;
            write_rows(rows, format, io::BufWriter::new(file)).map_err(|e| match e {
                BenchError::Io { source, .. } => BenchError::io(p, source),
                other => other,
            })
        }
        None => write_rows(rows, format, io::stdout().lock()),
    }
}

pub fn read_json(path: &Path) -> Result<Vec<ResultRow>> {
    let file = File::open(path).map_err(|e| BenchError::io(path, e))?;
    serde_json::from_reader(io::BufReader::new(file))
        .map_err(|e| BenchError::DataValidation(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(0.123456), "0.1235");
        assert_eq!(format_float(0.0), "0.0000");
        assert_eq!(format_float(2.5e-7), "2.5000e-7");
        assert_eq!(round(2.5e-7), 2.5e-7);
    }

    #[test]
    fn formats_parse() {
        assert_eq!("CSV".parse::<Format>().unwrap(), Format::Csv);
        assert!("xml".parse::<Format>().is_err());
    }
}
