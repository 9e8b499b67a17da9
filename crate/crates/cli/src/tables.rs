//! Quantile tables of the continuous limit law: the bundled set and
//! user-supplied files.

use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use panelbreak::limitdist::{
    build_default_table, quantiles, simulate_argmax_continuous, TableSet,
};
use panelbreak::QuantileTable;

use crate::error::{CliError, Result};

const BUNDLED: &str = include_str!("../tables/continuous.json");

/// Tables for theta = 0.05, 0.10, ..., 0.95, each from 10^6 draws.
pub fn bundled() -> &'static TableSet {
    static SET: OnceLock<TableSet> = OnceLock::new();
    SET.get_or_init(|| serde_json::from_str(BUNDLED).expect("bundled tables are valid JSON"))
}

/// Reads a table set, or a single table, from a JSON file.
pub fn load(path: &Path) -> Result<TableSet> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if let Ok(set) = serde_json::from_str::<TableSet>(&text) {
        return Ok(set);
    }
    serde_json::from_str::<QuantileTable>(&text)
        .map(|t| TableSet { tables: vec![t] })
        .map_err(|e| CliError::Table(format!("{}: {e}", path.display())))
}

/// The table whose theta is closest to `theta`.
pub fn nearest(set: &TableSet, theta: f64) -> Result<QuantileTable> {
    set.nearest(theta)
        .cloned()
        .ok_or_else(|| CliError::Table("table set is empty".into()))
}

/// Table at exactly `theta`, or an error naming the closest available one.
pub fn exact(set: &TableSet, theta: f64) -> Result<QuantileTable> {
    let table = nearest(set, theta)?;
    if (table.theta - theta).abs() > 1e-9 {
        return Err(CliError::Table(format!(
            "no table at theta = {theta}; closest is {}",
            table.theta
        )));
    }
    Ok(table)
}

/// Simulated on demand on the scaled default grid.
pub fn simulate(theta: f64, n_rep: usize, seed: u64) -> Result<QuantileTable> {
    Ok(build_default_table(theta, n_rep, seed)?)
}

/// Simulated on a symmetric `{-C, ..., C}` grid with step `h`.
pub fn simulate_symmetric(
    theta: f64,
    halfwidth: f64,
    step: f64,
    n_rep: usize,
    seed: u64,
    probabilities: &[f64],
) -> Result<QuantileTable> {
    let samples = simulate_argmax_continuous(theta, halfwidth, step, n_rep, seed)?;
    Ok(quantiles(&samples, probabilities)?)
}
