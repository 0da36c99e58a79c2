//! CSV reports. Floats are written with 17 significant digits so every value
//! parses back to the same bits.

use crate::error::{CliError, Result};
use kinetic::averaging::RatioRow;
use kinetic::solver::{Scenario, SimOutput};
use std::path::Path;

pub const REPORT_HEADER: [&str; 5] = ["time", "quantity", "params", "value", "resolution"];
pub const RATIO_HEADER: [&str; 5] = ["mode", "ratio", "kernel_id", "t", "quadrature_level"];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub time: f64,
    pub quantity: String,
    pub params: String,
    pub value: f64,
    pub resolution: String,
}

impl ReportRow {
    pub fn new(
        time: f64,
        quantity: impl Into<String>,
        params: impl Into<String>,
        value: f64,
        resolution: impl Into<String>,
    ) -> Self {
        ReportRow {
            time,
            quantity: quantity.into(),
            params: params.into(),
            value,
            resolution: resolution.into(),
        }
    }
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Norm rows per snapshot, then one `contraction_ratio` row per sweep ratio.
pub fn simulation_rows(scenario: &Scenario, out: &SimOutput) -> Vec<ReportRow> {
    let tag = scenario.grid.tag();
    let mut rows: Vec<ReportRow> = out
        .norms
        .entries
        .iter()
        .map(|e| ReportRow::new(e.time, e.kind.as_str(), e.params.as_str(), e.value, tag.as_str()))
        .collect();
    rows.extend(out.ratios.iter().enumerate().map(|(k, &r)| {
        ReportRow::new(
            out.t_final,
            "contraction_ratio",
            format!("sweep={}", k + 2),
            r,
            tag.as_str(),
        )
    }));
    rows
}

pub fn write_report_to<W: std::io::Write>(w: W, rows: &[ReportRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(REPORT_HEADER)?;
    for r in rows {
        if !r.value.is_finite() || !r.time.is_finite() {
            return Err(CliError::invalid(
                "report",
                format!("row {} at t = {} is not finite", r.quantity, r.time),
            ));
        }
        out.write_record([
            fmt_float(r.time),
            r.quantity.clone(),
            r.params.clone(),
            fmt_float(r.value),
            r.resolution.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn emit_report(rows: &[ReportRow], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())
        .map_err(|e| CliError::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_report_to(file, rows)
}

fn parse_float(field: &str, what: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| CliError::invalid("report", format!("{what} '{field}' is not a number")))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let mut rd = csv::Reader::from_path(path)?;
    let header = rd.headers()?.clone();
    if header.iter().ne(REPORT_HEADER) {
        return Err(CliError::invalid("report", "unexpected header"));
    }
    rd.records()
        .map(|rec| {
            let rec = rec?;
            Ok(ReportRow {
                time: parse_float(&rec[0], "time")?,
                quantity: rec[1].to_string(),
                params: rec[2].to_string(),
                value: parse_float(&rec[3], "value")?,
                resolution: rec[4].to_string(),
            })
        })
        .collect()
}

pub fn emit_ratio_table(rows: &[RatioRow], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())
        .map_err(|e| CliError::Io(format!("{}: {e}", path.as_ref().display())))?;
    let mut out = csv::Writer::from_writer(file);
    out.write_record(RATIO_HEADER)?;
    for r in rows {
        out.write_record([
            r.mode.to_string(),
            fmt_float(r.ratio),
            r.kernel_id.clone(),
            fmt_float(r.t),
            r.quadrature_level.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
