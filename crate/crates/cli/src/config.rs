//! Declarative experiment configuration (TOML).
//!
//! ```toml
//! [simulation]
//! n = 25
//! t = 100
//! theta = 0.5
//! delta = 0.15
//! n_rep = 1000
//! seed = 1
//!
//! [simulation.error]
//! kind = "iid_normal"
//! sigma = 1.0
//!
//! [coverage]
//! use_true_norming = true
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use panelbreak::error::Error as CoreError;
use panelbreak::limitdist::DEFAULT_PROBABILITIES;
use panelbreak::SimulationConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub simulation: Option<SimulationConfig>,
    pub coverage: Option<CoverageSection>,
    pub histogram: Option<HistogramSection>,
    pub quantile_table: Option<QuantileTableSection>,
}

/// Where coverage quantiles come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum TableSource {
    /// The tables shipped with the binary.
    #[default]
    Bundled,
    /// A JSON file holding one table or a table set.
    File { path: PathBuf },
    /// Simulated on the fly at the configured theta.
    Simulate { n_rep: usize, seed: u64 },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageSection {
    #[serde(default = "yes")]
    pub use_true_norming: bool,
    #[serde(default)]
    pub table: TableSource,
}

fn default_limit_reps() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramSection {
    #[serde(default = "default_limit_reps")]
    pub limit_reps: usize,
    /// Seed of the limit-law draws; derived from the simulation seed if absent.
    pub limit_seed: Option<u64>,
    pub halfwidth: Option<f64>,
    pub step: Option<f64>,
}

fn default_probabilities() -> Vec<f64> {
    DEFAULT_PROBABILITIES.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantileTableSection {
    pub theta: f64,
    pub n_rep: usize,
    pub seed: u64,
    /// Symmetric grid `{-C, ..., C}`; the per-side scaled grid when both
    /// `halfwidth` and `step` are absent.
    pub halfwidth: Option<f64>,
    pub step: Option<f64>,
    #[serde(default = "default_probabilities")]
    pub probabilities: Vec<f64>,
}

/// Field path of a core validation error raised inside `section`.
fn config_error(section: &str, err: CoreError) -> CliError {
    match err {
        CoreError::InvalidParameter { name, reason } => CliError::Config {
            field: format!("{section}.{name}"),
            message: reason,
        },
        CoreError::GridTooCoarse { step } => CliError::Config {
            field: format!("{section}.step"),
            message: format!("grid step {step} exceeds 0.1"),
        },
        other => CliError::Config {
            field: section.to_string(),
            message: other.to_string(),
        },
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config {
            field: e
                .span()
                .map(|s| locate(text, s.start))
                .unwrap_or_else(|| "<file>".into()),
            message: e.message().to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(sim) = &self.simulation {
            sim.validate().map_err(|e| config_error("simulation", e))?;
        }
        if let Some(h) = &self.histogram {
            if h.limit_reps == 0 {
                return Err(CliError::Config {
                    field: "histogram.limit_reps".into(),
                    message: "must be at least 1".into(),
                });
            }
        }
        if let Some(q) = &self.quantile_table {
            if !(q.theta > 0.0 && q.theta < 1.0) {
                return Err(CliError::Config {
                    field: "quantile_table.theta".into(),
                    message: format!("must lie in (0, 1), got {}", q.theta),
                });
            }
            if q.n_rep == 0 {
                return Err(CliError::Config {
                    field: "quantile_table.n_rep".into(),
                    message: "must be at least 1".into(),
                });
            }
            if q.halfwidth.is_some() != q.step.is_some() {
                return Err(CliError::Config {
                    field: "quantile_table.step".into(),
                    message: "give both halfwidth and step, or neither".into(),
                });
            }
            if let Some(p) = q.probabilities.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
                return Err(CliError::Config {
                    field: "quantile_table.probabilities".into(),
                    message: format!("{p} is outside (0, 1)"),
                });
            }
        }
        Ok(())
    }

    pub fn simulation(&self, experiment: &str) -> Result<&SimulationConfig> {
        self.simulation.as_ref().ok_or_else(|| CliError::Config {
            field: "simulation".into(),
            message: format!("the {experiment} experiment needs a [simulation] section"),
        })
    }
}

/// Dotted key path of the table or key enclosing byte `offset`.
fn locate(text: &str, offset: usize) -> String {
    let before = &text[..offset.min(text.len())];
    let mut section = String::new();
    for line in before.lines() {
        let line = line.trim();
        if line.starts_with('[') && line.ends_with(']') {
            section = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
        }
    }
    let line = before.lines().last().unwrap_or("").trim();
    let key = line.split('=').next().unwrap_or("").trim();
    let line_no = before.lines().count().max(1);
    match (section.is_empty(), key.is_empty() || key.starts_with('[')) {
        (true, true) => format!("line {line_no}"),
        (true, false) => key.to_string(),
        (false, true) => section,
        (false, false) => format!("{section}.{key}"),
    }
}
