use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("missing value at row {row}, column {column}")]
    MissingValues { row: usize, column: usize },

    #[error("log_diff needs positive values; panel {panel} has {value} at time {time}")]
    NonPositiveForLog {
        panel: String,
        time: usize,
        value: f64,
    },

    #[error("rescale_by_first: panel {panel} starts at 0")]
    ZeroFirstValue { panel: String },

    #[error("every panel has missing values; nothing left after drop_panel")]
    NoPanelsLeft,

    #[error("config error in {field}: {message}")]
    Config { field: String, message: String },

    #[error("table error: {0}")]
    Table(String),

    #[error(transparent)]
    Core(#[from] panelbreak::error::Error),

    #[error("cannot write output: {0}")]
    Output(String),
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const DATA: i32 = 2;
    pub const NUMERIC: i32 = 3;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use panelbreak::error::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config { .. } | CliError::Table(_) => exit::USAGE,
            CliError::Io { .. }
            | CliError::Parse { .. }
            | CliError::MissingValues { .. }
            | CliError::NonPositiveForLog { .. }
            | CliError::ZeroFirstValue { .. }
            | CliError::NoPanelsLeft
            | CliError::Output(_) => exit::DATA,
            CliError::Core(e) => match e {
                E::InvalidShape { .. } | E::DimensionMismatch { .. } | E::NonFinite { .. } => {
                    exit::DATA
                }
                E::DegenerateProfile
                | E::WindowOutOfRange { .. }
                | E::CovarianceNotPsd(_)
                | E::EmptySamples => exit::NUMERIC,
                _ => exit::USAGE,
            },
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }
}
