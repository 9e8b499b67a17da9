use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("panel must have N >= 1 and T >= 3, got N={n}, T={t}")]
    InvalidShape { n: usize, t: usize },
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite observation in panel {panel} at time {time}")]
    NonFinite { panel: usize, time: usize },
    #[error("CUSUM profile is identically zero; every panel is constant")]
    DegenerateProfile,
    #[error("invalid segment: {0}")]
    InvalidSegment(String),
    #[error("window m1={m1}, m2={m2} does not fit around the break (need m1 >= 1, m1 < m2 < {limit})")]
    WindowOutOfRange { m1: usize, m2: usize, limit: usize },
    #[error("bandwidth {bandwidth} must be smaller than the series length {len}")]
    InvalidBandwidth { bandwidth: usize, len: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("grid step {step} is coarser than 0.1")]
    GridTooCoarse { step: f64 },
    #[error("covariance matrix is not symmetric positive semidefinite: {0}")]
    CovarianceNotPsd(String),
    #[error("no samples to compute quantiles from")]
    EmptySamples,
    #[error("quantile table has no entry for probability {p}")]
    MissingQuantiles { p: f64 },
    #[error("quantile table is for theta={table} but the experiment uses theta={config}")]
    ThetaMismatch { table: f64, config: f64 },
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
