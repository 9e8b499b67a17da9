//! Estimators of the norming sequences `Delta_{N,T}` and `Xi_{N,T}`.
//!
//! `Delta` is the sum of squared mean shifts and `Xi` collects the
//! long-run-variance weighted shifts plus the squared break/loading cross
//! products. With `Delta^2 (t_hat - t0) / Xi` converging to the argmax limit
//! law, plugging the estimates in gives confidence intervals for `t0`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::panel::PanelData;
use crate::sum::{self, Accumulator};

/// Lower bound applied to every variance estimate.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Piecewise-linear break function `-t (T - t_hat) / T + (t - t_hat) 1{t > t_hat}`.
pub fn r_hat(t: usize, t_hat: usize, series_len: usize) -> f64 {
    let tf = t as f64;
    let len = series_len as f64;
    let mut r = -tf * (len - t_hat as f64) / len;
    if t > t_hat {
        r += (t - t_hat) as f64;
    }
    r
}

fn check_t_hat(t_hat: usize, series_len: usize) -> Result<()> {
    if t_hat == 0 || t_hat >= series_len {
        return Err(Error::param(
            "t_hat",
            format!("{t_hat} is outside 1..={}", series_len - 1),
        ));
    }
    Ok(())
}

/// Means of `row[..t_hat]` and `row[t_hat..]`.
pub(crate) fn segment_means(row: &[f64], t_hat: usize) -> (f64, f64) {
    (sum::mean(&row[..t_hat]), sum::mean(&row[t_hat..]))
}

/// `sum_i (mean before - mean after)^2` with the split after `t_hat`.
pub fn estimate_delta(panel: &PanelData, t_hat: usize) -> Result<f64> {
    check_t_hat(t_hat, panel.len())?;
    Ok(sum::sum(panel.rows().map(|row| {
        let (a, b) = segment_means(row, t_hat);
        (a - b) * (a - b)
    })))
}

/// Window `M1 < |v| <= M2` of offsets around `t_hat` used by [`estimate_xi`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct WindowConfig {
    pub m1: usize,
    pub m2: usize,
}

impl WindowConfig {
    pub fn new(m1: usize, m2: usize) -> Result<Self> {
        if m1 < 1 || m2 <= m1 {
            return Err(Error::WindowOutOfRange { m1, m2, limit: m2 });
        }
        Ok(Self { m1, m2 })
    }

    /// Checks that every `t_hat + v` stays inside `1..=T-1`.
    pub fn check(&self, t_hat: usize, series_len: usize) -> Result<()> {
        let limit = t_hat.min(series_len.saturating_sub(t_hat));
        if self.m1 < 1 || self.m2 <= self.m1 || self.m2 >= limit {
            return Err(Error::WindowOutOfRange {
                m1: self.m1,
                m2: self.m2,
                limit,
            });
        }
        Ok(())
    }
}

/// `m1 = max(1, floor(ln T))`, `m2 = m1 + max(2, floor(sqrt(T) / delta_hat))`,
/// with `m2` clipped below `min(t_hat, T - t_hat)`.
pub fn default_windows(series_len: usize, t_hat: usize, delta_hat: f64) -> Result<WindowConfig> {
    if !(delta_hat > 0.0 && delta_hat.is_finite()) {
        return Err(Error::param(
            "delta_hat",
            format!("must be positive and finite, got {delta_hat}"),
        ));
    }
    let len = series_len as f64;
    let m1 = (libm::floor(libm::log(len)) as usize).max(1);
    let width = libm::floor(libm::sqrt(len) / delta_hat).min(len);
    let width = (width as usize).max(2);
    let limit = t_hat.min(series_len.saturating_sub(t_hat));
    let m2 = (m1 + width).min(limit.saturating_sub(1));
    if m2 <= m1 {
        return Err(Error::WindowOutOfRange { m1, m2, limit });
    }
    Ok(WindowConfig { m1, m2 })
}

/// Window average of squared, drift-corrected increments of `U_N` around
/// `t_hat`:
///
/// `1/(2(M2-M1)) sum_{M1<|v|<=M2} (U(t+v) - U(t) - D (r(t+v)^2 - r^2))^2 / (4|v| r^2)`.
///
/// Each panel is split into its segment-mean step `d_i r(t)` and the centred
/// partial sums `R_i(t)` of the residuals about the two segment means, so the
/// drift-corrected increment is accumulated as
/// `sum_i R_i(t+v)^2 + 2 d_i r(t+v) R_i(t+v) - (same at t_hat)`. This is the
/// same quantity without cancelling large terms, and it is exactly zero for
/// a noiseless step.
pub fn estimate_xi(panel: &PanelData, t_hat: usize, windows: WindowConfig) -> Result<f64> {
    let len = panel.len();
    check_t_hat(t_hat, len)?;
    windows.check(t_hat, len)?;
    let r0 = r_hat(t_hat, t_hat, len);
    if r0 == 0.0 {
        return Err(Error::DegenerateProfile);
    }
    let WindowConfig { m1, m2 } = windows;
    // offsets -m2..=m2 relative to t_hat
    let span = 2 * m2 + 1;
    let mut increments = alloc::vec![Accumulator::default(); span];
    let mut residual_sums = alloc::vec![0.0; len];
    for row in panel.rows() {
        let (a, b) = segment_means(row, t_hat);
        let d = b - a;
        let mut acc = Accumulator::default();
        for (s, &x) in row.iter().enumerate() {
            acc.add(x - if s < t_hat { a } else { b });
            residual_sums[s] = acc.value();
        }
        let total = residual_sums[len - 1];
        let bridge = |t: usize| residual_sums[t - 1] - t as f64 / len as f64 * total;
        let at_hat = {
            let r = bridge(t_hat);
            r * r + 2.0 * d * r0 * r
        };
        for (k, inc) in increments.iter_mut().enumerate() {
            let t = t_hat + k - m2;
            let r = bridge(t);
            inc.add(r * r + 2.0 * d * r_hat(t, t_hat, len) * r - at_hat);
        }
    }
    let mut total = Accumulator::default();
    for (k, inc) in increments.iter().enumerate() {
        let v = k.abs_diff(m2);
        if v <= m1 {
            continue;
        }
        let x = inc.value();
        total.add(x * x / (4.0 * v as f64 * r0 * r0));
    }
    Ok(total.value() / (2.0 * (m2 - m1) as f64))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    #[default]
    Bartlett,
}

impl Kernel {
    pub fn weight(self, lag: usize, bandwidth: usize) -> f64 {
        match self {
            Kernel::Bartlett => 1.0 - lag as f64 / (bandwidth + 1) as f64,
        }
    }
}

/// `floor(T^(1/3))`.
pub fn default_bandwidth(series_len: usize) -> usize {
    // nudge so exact cubes are not lost to rounding
    libm::floor(libm::cbrt(series_len as f64) + 1e-9) as usize
}

/// Kernel long-run variance `g_0 + 2 sum_h w(h) g_h` of `series`, demeaned
/// globally or, with `split = Some(k)`, separately on `..k` and `k..`.
/// Floored at [`VARIANCE_FLOOR`].
pub fn long_run_variance(
    series: &[f64],
    bandwidth: usize,
    kernel: Kernel,
    split: Option<usize>,
) -> Result<f64> {
    let len = series.len();
    if bandwidth >= len {
        return Err(Error::InvalidBandwidth { bandwidth, len });
    }
    let centred: Vec<f64> = match split {
        Some(k) if k > 0 && k < len => {
            let (a, b) = segment_means(series, k);
            series
                .iter()
                .enumerate()
                .map(|(s, &x)| x - if s < k { a } else { b })
                .collect()
        }
        Some(k) => {
            return Err(Error::param("split", format!("{k} is outside 1..{len}")));
        }
        None => {
            let m = sum::mean(series);
            series.iter().map(|&x| x - m).collect()
        }
    };
    let lenf = len as f64;
    let autocov =
        |h: usize| -> f64 { sum::sum(centred[h..].iter().zip(&centred).map(|(x, y)| x * y)) / lenf };
    let mut value = autocov(0);
    for h in 1..=bandwidth {
        value += 2.0 * kernel.weight(h, bandwidth) * autocov(h);
    }
    Ok(value.max(VARIANCE_FLOOR))
}

/// Long-run variances of every panel about its two segment means.
pub fn panel_long_run_variances(
    panel: &PanelData,
    t_hat: usize,
    bandwidth: usize,
) -> Result<Vec<f64>> {
    check_t_hat(t_hat, panel.len())?;
    panel
        .rows()
        .map(|row| long_run_variance(row, bandwidth, Kernel::Bartlett, Some(t_hat)))
        .collect()
}

/// `sum_i sigma_i^2 (mean before - mean after)^2`, the estimator of
/// `sum_i sigma_i^2 delta_i^2` for weakly interacting panels.
pub fn estimate_xi_weak(panel: &PanelData, t_hat: usize, bandwidth: usize) -> Result<f64> {
    let variances = panel_long_run_variances(panel, t_hat, bandwidth)?;
    Ok(sum::sum(panel.rows().zip(&variances).map(|(row, &s2)| {
        let (a, b) = segment_means(row, t_hat);
        s2 * (a - b) * (a - b)
    })))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NormingQuantities {
    pub delta_hat: f64,
    pub xi_hat: f64,
    pub sigma2_hat: Option<Vec<f64>>,
    pub windows: WindowConfig,
}

impl NormingQuantities {
    /// `Xi_hat / Delta_hat^2`, the time-scale of the limit law.
    pub fn scale(&self) -> f64 {
        self.xi_hat / (self.delta_hat * self.delta_hat)
    }
}

/// Estimates `Delta` and `Xi` at `t_hat`, using [`default_windows`] unless
/// `windows` is given.
pub fn estimate_norming(
    panel: &PanelData,
    t_hat: usize,
    windows: Option<WindowConfig>,
) -> Result<NormingQuantities> {
    let delta_hat = estimate_delta(panel, t_hat)?;
    let windows = match windows {
        Some(w) => w,
        None => default_windows(panel.len(), t_hat, delta_hat)?,
    };
    let xi_hat = estimate_xi(panel, t_hat, windows)?;
    Ok(NormingQuantities {
        delta_hat,
        xi_hat,
        sigma2_hat: None,
        windows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn step_panel(n: usize, t: usize, t0: usize, delta: f64) -> PanelData {
        let rows = (0..n)
            .map(|_| (1..=t).map(|s| if s > t0 { delta } else { 0.0 }).collect())
            .collect();
        PanelData::from_rows(rows).unwrap()
    }

    #[test]
    fn r_hat_values() {
        assert_eq!(r_hat(0, 5, 10), 0.0);
        assert_eq!(r_hat(10, 5, 10), 0.0);
        assert_eq!(r_hat(5, 5, 10), -2.5);
        assert_eq!(r_hat(7, 5, 10), -1.5);
        for t in 1..10 {
            assert!(r_hat(t, 5, 10) < 0.0);
            assert!(r_hat(t, 5, 10) >= r_hat(5, 5, 10));
        }
    }

    #[test]
    fn delta_examples() {
        assert_eq!(estimate_delta(&step_panel(6, 20, 10, 1.0), 10).unwrap(), 6.0);
        let constant = PanelData::from_rows(vec![vec![2.0; 5]; 3]).unwrap();
        assert_eq!(estimate_delta(&constant, 2).unwrap(), 0.0);
        let p = PanelData::from_rows(vec![vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 0.0, 2.0, 2.0]])
            .unwrap();
        assert_eq!(estimate_delta(&p, 2).unwrap(), 5.0);
        assert!(estimate_delta(&p, 0).is_err());
        assert!(estimate_delta(&p, 4).is_err());
    }

    #[test]
    fn default_window_rule() {
        assert_eq!(
            default_windows(500, 250, 4.0).unwrap(),
            WindowConfig { m1: 6, m2: 11 }
        );
        assert!(matches!(
            default_windows(100, 3, 1.0),
            Err(Error::WindowOutOfRange { .. })
        ));
        // floor width when delta_hat is large
        assert_eq!(
            default_windows(500, 250, 1e6).unwrap(),
            WindowConfig { m1: 6, m2: 8 }
        );
        // clipped near an endpoint
        assert_eq!(
            default_windows(500, 20, 0.01).unwrap(),
            WindowConfig { m1: 6, m2: 19 }
        );
        assert!(default_windows(500, 250, 0.0).is_err());
    }

    #[test]
    fn xi_is_zero_on_a_noiseless_step() {
        let p = step_panel(4, 60, 30, 1.0);
        let w = WindowConfig::new(3, 10).unwrap();
        assert_eq!(estimate_xi(&p, 30, w).unwrap(), 0.0);
    }

    #[test]
    fn xi_window_must_fit() {
        let p = step_panel(2, 40, 10, 1.0);
        assert!(matches!(
            estimate_xi(&p, 10, WindowConfig::new(2, 10).unwrap()),
            Err(Error::WindowOutOfRange { .. })
        ));
        assert!(estimate_xi(&p, 10, WindowConfig::new(2, 9).unwrap()).is_ok());
        assert!(WindowConfig::new(4, 4).is_err());
        assert!(WindowConfig::new(0, 4).is_err());
    }

    #[test]
    fn xi_matches_the_profile_formula() {
        // deterministic pseudo-noise
        let mut state = 12345u64;
        let mut noise = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let (n, t, t0) = (7, 80, 35);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (1..=t)
                    .map(|s| 0.3 * i as f64 + if s > t0 { 0.4 } else { 0.0 } + noise())
                    .collect()
            })
            .collect();
        let p = PanelData::from_rows(rows).unwrap();
        let w = WindowConfig::new(3, 12).unwrap();
        let xi = estimate_xi(&p, t0, w).unwrap();

        let u = crate::cusum::cusum_profile(&p, false);
        let dh = estimate_delta(&p, t0).unwrap();
        let r0 = r_hat(t0, t0, t);
        let mut direct = 0.0;
        for v in 4..=12usize {
            for tv in [t0 + v, t0 - v] {
                let rv = r_hat(tv, t0, t);
                let inc = u.at(tv) - u.at(t0) - dh * (rv * rv - r0 * r0);
                direct += inc * inc / (4.0 * v as f64 * r0 * r0);
            }
        }
        direct /= 2.0 * 9.0;
        assert!(
            libm::fabs(xi - direct) <= 1e-9 * direct,
            "{xi} vs {direct}"
        );
    }

    #[test]
    fn lrv_of_constant_series_is_floored() {
        assert_eq!(
            long_run_variance(&[3.0; 50], 3, Kernel::Bartlett, None).unwrap(),
            VARIANCE_FLOOR
        );
        assert!(matches!(
            long_run_variance(&[1.0, 2.0, 3.0], 3, Kernel::Bartlett, None),
            Err(Error::InvalidBandwidth { .. })
        ));
    }

    #[test]
    fn lrv_hand_example() {
        // x = [1,-1,1,-1]: g0 = 1, g1 = -3/4, bw = 1 -> 1 + 2 * 0.5 * (-0.75)
        let v = long_run_variance(&[1.0, -1.0, 1.0, -1.0], 1, Kernel::Bartlett, None).unwrap();
        assert!(libm::fabs(v - 0.25) < 1e-15);
    }

    #[test]
    fn default_bandwidth_is_cube_root_floor() {
        assert_eq!(default_bandwidth(1000), 10);
        assert_eq!(default_bandwidth(2000), 12);
        assert_eq!(default_bandwidth(999), 9);
    }

    #[test]
    fn weak_xi_on_noiseless_step_is_floor_dominated() {
        let p = step_panel(3, 30, 15, 1.0);
        let xi = estimate_xi_weak(&p, 15, 3).unwrap();
        let dh = estimate_delta(&p, 15).unwrap();
        assert_eq!(xi, VARIANCE_FLOOR * dh);
    }

    #[test]
    fn weak_xi_single_panel_is_variance_times_contrast() {
        let row = vec![0.1, -0.2, 0.3, 1.2, 0.8, 1.1, 0.9, 1.3];
        let p = PanelData::from_rows(vec![row.clone()]).unwrap();
        let s2 = long_run_variance(&row, 2, Kernel::Bartlett, Some(3)).unwrap();
        let (a, b) = segment_means(&row, 3);
        assert_eq!(estimate_xi_weak(&p, 3, 2).unwrap(), s2 * (a - b) * (a - b));
    }
}
