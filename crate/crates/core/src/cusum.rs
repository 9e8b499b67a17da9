//! CUSUM statistics and the argmax change-point estimators.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::norming::r_hat;
use crate::panel::{GroundTruth, PanelData};
use crate::sum::Accumulator;

/// Partial sums `S_i(t)`; column `t - 1` holds `S_i(t)` for `t = 1..=T`.
pub fn partial_sums(panel: &PanelData) -> Matrix {
    let (n, t) = (panel.n_panels(), panel.len());
    let mut out = Matrix::zeros(n, t);
    for i in 0..n {
        let mut acc = Accumulator::default();
        for (dst, &x) in out.row_mut(i).iter_mut().zip(panel.row(i)) {
            acc.add(x);
            *dst = acc.value();
        }
    }
    out
}

/// `U_N(t) = sum_i (S_i(t) - t/T S_i(T))^2` for `t = 1..T-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CusumProfile {
    u: Vec<f64>,
    d: Option<Matrix>,
}

impl CusumProfile {
    /// Series length `T` the profile was computed for.
    pub fn series_len(&self) -> usize {
        self.u.len() + 1
    }

    /// `U_N(t)` for `1 <= t <= T - 1`; zero at the endpoints `0` and `T`.
    pub fn at(&self, t: usize) -> f64 {
        if t == 0 || t > self.u.len() {
            0.0
        } else {
            self.u[t - 1]
        }
    }

    /// Values for `t = 1..T-1`; element `k` is `U_N(k + 1)`.
    pub fn values(&self) -> &[f64] {
        &self.u
    }

    /// Centred partial sums `D_i(t)`, column `t - 1`, when retained.
    pub fn per_panel(&self) -> Option<&Matrix> {
        self.d.as_ref()
    }

    pub fn is_degenerate(&self) -> bool {
        self.u.iter().all(|&x| x == 0.0)
    }
}

/// Centred partial sums of one series over the time range `start..end`,
/// written to `out[0..len-1]` for `t = 1..len-1`.
///
/// The series is anchored at its first value before summing, which leaves
/// the statistic unchanged and makes constant series exactly zero.
pub(crate) fn centred_sums(series: &[f64], out: &mut [f64]) {
    let len = series.len();
    debug_assert_eq!(out.len() + 1, len);
    let anchor = series[0];
    let mut acc = Accumulator::default();
    for (k, &x) in series.iter().enumerate().take(len - 1) {
        acc.add(x - anchor);
        out[k] = acc.value();
    }
    let mut total = Accumulator::default();
    for &x in series {
        total.add(x - anchor);
    }
    let total = total.value();
    if total != 0.0 {
        let tf = len as f64;
        for (k, d) in out.iter_mut().enumerate() {
            *d -= (k + 1) as f64 / tf * total;
        }
    }
}

/// Sum over panels of squared centred partial sums on the columns
/// `start..end` of the panel.
pub(crate) fn profile_range(panel: &PanelData, start: usize, end: usize) -> Vec<f64> {
    let len = end - start;
    let mut u = alloc::vec![0.0; len - 1];
    let mut d = alloc::vec![0.0; len - 1];
    for row in panel.rows() {
        centred_sums(&row[start..end], &mut d);
        for (acc, &x) in u.iter_mut().zip(&d) {
            *acc += x * x;
        }
    }
    u
}

pub fn cusum_profile(panel: &PanelData, keep_per_panel: bool) -> CusumProfile {
    let (n, t) = (panel.n_panels(), panel.len());
    if !keep_per_panel {
        return CusumProfile {
            u: profile_range(panel, 0, t),
            d: None,
        };
    }
    let mut d = Matrix::zeros(n, t - 1);
    for i in 0..n {
        centred_sums(panel.row(i), d.row_mut(i));
    }
    let mut u = alloc::vec![0.0; t - 1];
    for row in d.iter_rows() {
        for (acc, &x) in u.iter_mut().zip(row) {
            *acc += x * x;
        }
    }
    CusumProfile { u, d: Some(d) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// argmax of `U_N(t)`.
    CusumSum,
    /// argmax of `U_N(t) / (t (T - t))`.
    BaiWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChangePointEstimate {
    /// Last time index (one-based) of the first regime.
    pub t_hat: usize,
    pub method: Method,
    pub objective_at_t_hat: f64,
}

/// Index of the first maximum, one-based.
pub(crate) fn first_argmax(values: impl IntoIterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (k + 1, v);
        }
    }
    best
}

pub fn estimate_changepoint(panel: &PanelData) -> Result<ChangePointEstimate> {
    estimate(panel, Method::CusumSum)
}

pub fn estimate_changepoint_bai(panel: &PanelData) -> Result<ChangePointEstimate> {
    estimate(panel, Method::BaiWeighted)
}

pub fn estimate(panel: &PanelData, method: Method) -> Result<ChangePointEstimate> {
    let profile = cusum_profile(panel, false);
    estimate_from_profile(&profile, method)
}

pub fn estimate_from_profile(profile: &CusumProfile, method: Method) -> Result<ChangePointEstimate> {
    if profile.is_degenerate() {
        return Err(Error::DegenerateProfile);
    }
    let t = profile.series_len() as f64;
    let (t_hat, objective_at_t_hat) = match method {
        Method::CusumSum => first_argmax(profile.values().iter().copied()),
        Method::BaiWeighted => first_argmax(profile.values().iter().enumerate().map(|(k, &u)| {
            let s = (k + 1) as f64;
            u / (s * (t - s))
        })),
    };
    Ok(ChangePointEstimate {
        t_hat,
        method,
        objective_at_t_hat,
    })
}

/// Terms of `D_i(t) = Q_i(t) + gamma_i V(t) + delta_i r(t)`; all vectors are
/// indexed by `t - 1` for `t = 1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub q: Matrix,
    pub v: Vec<f64>,
    pub r: Vec<f64>,
}

fn bridge(series: &[f64], out: &mut [f64]) {
    let tf = series.len() as f64;
    let mut acc = Accumulator::default();
    for (dst, &x) in out.iter_mut().zip(series) {
        acc.add(x);
        *dst = acc.value();
    }
    let total = acc.value();
    for (k, dst) in out.iter_mut().enumerate() {
        *dst -= (k + 1) as f64 / tf * total;
    }
}

pub fn decompose(truth: &GroundTruth) -> Result<Decomposition> {
    truth.validate()?;
    let (n, t) = (truth.n_panels(), truth.len());
    let mut q = Matrix::zeros(n, t);
    for i in 0..n {
        bridge(truth.e.row(i), q.row_mut(i));
    }
    let mut v = alloc::vec![0.0; t];
    bridge(&truth.eta, &mut v);
    let r = (1..=t).map(|s| r_hat(s, truth.t0, t)).collect();
    Ok(Decomposition { q, v, r })
}
