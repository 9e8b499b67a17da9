//! Versioned JSON envelopes and plot-ready text outputs.

use std::fs;
use std::io::Write;
use std::path::Path;

use panelbreak::simulate::HistogramReport;
use panelbreak::CoverageReport;
use serde::Serialize;

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Every JSON output: what produced it, with which inputs, and the result.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope<C: Serialize, R: Serialize> {
    pub schema: String,
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config: C,
    pub result: R,
}

impl<C: Serialize, R: Serialize> Envelope<C, R> {
    pub fn new(command: &'static str, seed: Option<u64>, config: C, result: R) -> Self {
        Self {
            schema: format!("panelbreak.{command}"),
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            config,
            result,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Output(e.to_string()))
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

/// `probability,quantile,coverage_pct` per level.
pub fn coverage_csv(report: &CoverageReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(["probability", "quantile", "coverage_pct"]).map_err(err)?;
    for level in &report.levels {
        w.write_record([
            level.probability.to_string(),
            level.quantile.to_string(),
            level.coverage_pct.to_string(),
        ])
        .map_err(err)?;
    }
    finish(w)
}

/// `offset,empirical,limit_density` per histogram bin.
pub fn histogram_csv(report: &HistogramReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(["offset", "empirical", "limit_density"]).map_err(err)?;
    for row in &report.rows {
        w.write_record([
            row.offset.to_string(),
            row.empirical.to_string(),
            row.limit_density.to_string(),
        ])
        .map_err(err)?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}

/// Whitespace-separated columns for gnuplot: one block for the histogram,
/// one for the limit density, separated by two blank lines (`index 0/1`).
pub fn histogram_dat(report: &HistogramReport) -> String {
    let mut out = Vec::new();
    let _ = writeln!(out, "# t_hat - t0 vs empirical frequency");
    let _ = writeln!(out, "# offset empirical");
    for row in &report.rows {
        let _ = writeln!(out, "{} {}", row.offset, row.empirical);
    }
    let _ = writeln!(out, "\n\n# rescaled limit density, scale = {}", report.scale);
    let _ = writeln!(out, "# offset limit_density");
    for row in &report.rows {
        let _ = writeln!(out, "{} {}", row.offset, row.limit_density);
    }
    String::from_utf8(out).expect("ascii output")
}
