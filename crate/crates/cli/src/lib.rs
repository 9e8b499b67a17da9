//! Command-line front end for `panelbreak`: panel ingestion and transforms,
//! break estimation, confidence intervals, segmentation and simulation
//! experiments, with JSON, CSV and gnuplot outputs.

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod report;
pub mod tables;

pub use commands::{run, Cli};
pub use error::{exit, CliError};
