//! Estimation of a common time of change in the means of panel time series.
//!
//! The estimator is the location of the maximum of the sum of the squared
//! CUSUM processes of the panels. Around it the crate provides estimators of
//! the norming sequences, Monte Carlo samplers for the argmax limit laws,
//! confidence intervals built from tabulated quantiles, and a simulation
//! harness for coverage studies.
//!
//! The crate is `no_std` with `alloc`. The default `std` feature only adds
//! replicate-level parallelism through rayon; results are identical with and
//! without it.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod cusum;
pub mod error;
pub mod limitdist;
pub mod matrix;
pub mod norming;
pub mod panel;
pub mod rng;
pub mod segment;
pub mod simulate;
pub mod stats;

mod par;
mod sum;

pub use cusum::{
    cusum_profile, decompose, estimate, estimate_changepoint, estimate_changepoint_bai,
    partial_sums, ChangePointEstimate, CusumProfile, Decomposition, Method,
};
pub use error::{Error, Result};
pub use limitdist::{
    confidence_interval, quantiles, simulate_argmax_continuous, simulate_argmax_discrete,
    ArgmaxSamples, ConfidenceInterval, Covariance, LimitLawSpec, QuantileTable, Regime,
    WienerGrid,
};
pub use matrix::Matrix;
pub use norming::{
    default_windows, estimate_delta, estimate_xi, estimate_xi_weak, long_run_variance, r_hat,
    Kernel, NormingQuantities, WindowConfig,
};
pub use panel::{GroundTruth, PanelData};
pub use segment::{binary_segmentation, SegmentationConfig};
pub use simulate::{
    gen_errors, gen_panel, run_coverage_experiment, run_histogram_experiment, CoverageReport,
    ErrorKind, ErrorProcessSpec, HistogramReport, PerPanel, SimulationConfig,
};
