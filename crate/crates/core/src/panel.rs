//! Panel observations and the generating quantities behind simulated panels.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// `N` parallel series of common length `T`, stored row-major (one row per
/// panel). Every value is finite and `N >= 1`, `T >= 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelData {
    values: Matrix,
    panel_ids: Vec<String>,
    time_ids: Vec<String>,
}

impl PanelData {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let t = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * t);
        for row in &rows {
            if row.len() != t {
                return Err(Error::DimensionMismatch {
                    what: "panel length",
                    expected: t,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(n, t, data)
    }

    pub fn from_row_major(n: usize, t: usize, data: Vec<f64>) -> Result<Self> {
        if n < 1 || t < 3 {
            return Err(Error::InvalidShape { n, t });
        }
        if data.len() != n * t {
            return Err(Error::DimensionMismatch {
                what: "panel values",
                expected: n * t,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                panel: pos / t,
                time: pos % t,
            });
        }
        Ok(Self {
            values: Matrix::from_row_major(n, t, data),
            panel_ids: (1..=n).map(|i| i.to_string()).collect(),
            time_ids: (1..=t).map(|s| s.to_string()).collect(),
        })
    }

    pub fn from_matrix(values: Matrix) -> Result<Self> {
        let (n, t) = (values.rows(), values.cols());
        Self::from_row_major(n, t, values.into_vec())
    }

    /// Replaces the default `1..=N` / `1..=T` labels.
    pub fn with_ids(mut self, panel_ids: Vec<String>, time_ids: Vec<String>) -> Result<Self> {
        if panel_ids.len() != self.n_panels() {
            return Err(Error::DimensionMismatch {
                what: "panel ids",
                expected: self.n_panels(),
                found: panel_ids.len(),
            });
        }
        if time_ids.len() != self.len() {
            return Err(Error::DimensionMismatch {
                what: "time ids",
                expected: self.len(),
                found: time_ids.len(),
            });
        }
        self.panel_ids = panel_ids;
        self.time_ids = time_ids;
        Ok(self)
    }

    /// Number of panels `N`.
    pub fn n_panels(&self) -> usize {
        self.values.rows()
    }

    /// Number of time points `T`.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.values.cols()
    }

    /// Observation of panel `i` at time `t`, both zero-based.
    pub fn get(&self, i: usize, t: usize) -> f64 {
        self.values.get(i, t)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.iter_rows()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn panel_ids(&self) -> &[String] {
        &self.panel_ids
    }

    pub fn time_ids(&self) -> &[String] {
        &self.time_ids
    }

    /// The same panels with the time axis reversed.
    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        for i in 0..values.rows() {
            values.row_mut(i).reverse();
        }
        let mut time_ids = self.time_ids.clone();
        time_ids.reverse();
        Self {
            values,
            panel_ids: self.panel_ids.clone(),
            time_ids,
        }
    }

    /// Applies `f` to every observation. Fails if the result is not finite.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        let data = self.values.as_slice().iter().map(|&x| f(x)).collect();
        Self::from_row_major(self.n_panels(), self.len(), data)?
            .with_ids(self.panel_ids.clone(), self.time_ids.clone())
    }
}

/// The quantities of the mean-shift model with one common factor:
/// `X[i][t] = mu[i] + delta[i] * 1{t > t0} + gamma[i] * eta[t] + e[i][t]`
/// with one-based `t`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GroundTruth {
    pub mu: Vec<f64>,
    pub delta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub t0: usize,
    pub eta: Vec<f64>,
    pub e: Matrix,
}

impl GroundTruth {
    pub fn n_panels(&self) -> usize {
        self.e.rows()
    }

    pub fn len(&self) -> usize {
        self.e.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.e.rows() == 0 || self.e.cols() == 0
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_panels();
        let t = self.len();
        for (what, len) in [
            ("mu", self.mu.len()),
            ("delta", self.delta.len()),
            ("gamma", self.gamma.len()),
        ] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: n,
                    found: len,
                });
            }
        }
        if self.eta.len() != t {
            return Err(Error::DimensionMismatch {
                what: "eta",
                expected: t,
                found: self.eta.len(),
            });
        }
        if self.t0 > t {
            return Err(Error::param("t0", format!("{} exceeds T={t}", self.t0)));
        }
        Ok(())
    }

    /// Observation of panel `i` at one-based time `t`.
    #[inline]
    pub fn observation(&self, i: usize, t: usize) -> f64 {
        let shift = if t > self.t0 { self.delta[i] } else { 0.0 };
        self.mu[i] + shift + self.gamma[i] * self.eta[t - 1] + self.e.get(i, t - 1)
    }

    pub fn reconstruct(&self) -> Result<PanelData> {
        self.validate()?;
        let (n, t) = (self.n_panels(), self.len());
        let mut data = Vec::with_capacity(n * t);
        for i in 0..n {
            for s in 1..=t {
                data.push(self.observation(i, s));
            }
        }
        PanelData::from_row_major(n, t, data)
    }
}
