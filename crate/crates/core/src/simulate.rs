//! Panel simulation under the mean-shift model with a common factor, and the
//! coverage and histogram experiments built on it.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::cusum::estimate_changepoint;
use crate::error::{Error, Result};
use crate::limitdist::{simulate_argmax_continuous, QuantileTable, DEFAULT_HALFWIDTH, DEFAULT_STEP};
use crate::matrix::Matrix;
use crate::norming::estimate_norming;
use crate::panel::{GroundTruth, PanelData};
use crate::par::map_replicates;
use crate::rng::{derive_seed, substream, StreamRng};
use crate::stats;
use crate::sum;

/// Stationary error process of one panel.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorKind {
    /// Identically zero; for noiseless test panels.
    Zero,
    IidNormal {
        sigma: f64,
    },
    /// `e_t = phi e_{t-1} + sigma z_t`.
    Ar1 {
        phi: f64,
        sigma: f64,
    },
    /// `e_t = sigma sum_j coeffs[j] z_{t-j}`; `coeffs[0]` is the lag-0 weight.
    /// Truncating an infinite moving average is up to the caller.
    Ma {
        coeffs: Vec<f64>,
        sigma: f64,
    },
    /// `e_t = h_t^(1/2) z_t`, `h_t = omega + alpha e_{t-1}^2 + beta h_{t-1}`.
    /// Fourth moments exist only when `3 alpha^2 + 2 alpha beta + beta^2 < 1`.
    Garch11 {
        omega: f64,
        alpha: f64,
        beta: f64,
    },
}

/// Default discarded warm-up for GARCH paths.
pub const GARCH_BURN_IN: usize = 500;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ErrorProcessSpec {
    #[serde(flatten)]
    pub kind: ErrorKind,
    /// Steps simulated and discarded before the first kept value. Defaults to
    /// 500 for GARCH and 0 otherwise (those start in their stationary law).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
}

impl ErrorProcessSpec {
    pub fn new(kind: ErrorKind) -> Self {
        Self {
            kind,
            burn_in: None,
        }
    }

    pub fn zero() -> Self {
        Self::new(ErrorKind::Zero)
    }

    pub fn iid_normal(sigma: f64) -> Self {
        Self::new(ErrorKind::IidNormal { sigma })
    }

    pub fn ar1(phi: f64, sigma: f64) -> Self {
        Self::new(ErrorKind::Ar1 { phi, sigma })
    }

    pub fn garch11(omega: f64, alpha: f64, beta: f64) -> Self {
        Self::new(ErrorKind::Garch11 { omega, alpha, beta })
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(match self.kind {
            ErrorKind::Garch11 { .. } => GARCH_BURN_IN,
            _ => 0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_as("error")
    }

    /// Validation with parameter names prefixed by `role` (e.g. `factor.sigma`).
    pub fn validate_as(&self, role: &str) -> Result<()> {
        let bad = |field: &str, reason: String| Err(Error::param(format!("{role}.{field}"), reason));
        let positive = |field: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                bad(field, format!("must be positive and finite, got {x}"))
            }
        };
        match &self.kind {
            ErrorKind::Zero => Ok(()),
            ErrorKind::IidNormal { sigma } => positive("sigma", *sigma),
            ErrorKind::Ar1 { phi, sigma } => {
                positive("sigma", *sigma)?;
                if libm::fabs(*phi) < 1.0 {
                    Ok(())
                } else {
                    bad("phi", format!("must satisfy |phi| < 1, got {phi}"))
                }
            }
            ErrorKind::Ma { coeffs, sigma } => {
                positive("sigma", *sigma)?;
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    bad("coeffs", "must be a non-empty list of finite values".into())
                } else {
                    Ok(())
                }
            }
            ErrorKind::Garch11 { omega, alpha, beta } => {
                positive("omega", *omega)?;
                if alpha.is_nan() || *alpha < 0.0 {
                    return bad("alpha", format!("must be >= 0, got {alpha}"));
                }
                if beta.is_nan() || *beta < 0.0 {
                    return bad("beta", format!("must be >= 0, got {beta}"));
                }
                if (alpha + beta).is_nan() || alpha + beta >= 1.0 {
                    return bad(
                        "alpha",
                        format!("alpha + beta must be < 1, got {}", alpha + beta),
                    );
                }
                Ok(())
            }
        }
    }

    /// `lim t^-1 Var(sum_{s<=t} e_s)` in closed form.
    pub fn long_run_variance(&self) -> f64 {
        match &self.kind {
            ErrorKind::Zero => 0.0,
            ErrorKind::IidNormal { sigma } => sigma * sigma,
            ErrorKind::Ar1 { phi, sigma } => sigma * sigma / ((1.0 - phi) * (1.0 - phi)),
            ErrorKind::Ma { coeffs, sigma } => {
                let c = sum::sum(coeffs.iter().copied());
                c * c * sigma * sigma
            }
            // uncorrelated martingale differences
            ErrorKind::Garch11 { omega, alpha, beta } => omega / (1.0 - alpha - beta),
        }
    }

    /// Fills `out` with one stationary path.
    pub fn fill(&self, rng: &mut StreamRng, out: &mut [f64]) {
        let mut z = || -> f64 { StandardNormal.sample(rng) };
        let burn_in = self.burn_in();
        match &self.kind {
            ErrorKind::Zero => out.fill(0.0),
            ErrorKind::IidNormal { sigma } => {
                for _ in 0..burn_in {
                    z();
                }
                for x in out.iter_mut() {
                    *x = sigma * z();
                }
            }
            ErrorKind::Ar1 { phi, sigma } => {
                let mut x = sigma / libm::sqrt(1.0 - phi * phi) * z();
                for _ in 0..burn_in {
                    x = phi * x + sigma * z();
                }
                for (k, dst) in out.iter_mut().enumerate() {
                    if k > 0 {
                        x = phi * x + sigma * z();
                    }
                    *dst = x;
                }
            }
            ErrorKind::Ma { coeffs, sigma } => {
                let q = coeffs.len();
                // window[j] holds z_{t-j}
                let mut window: Vec<f64> = (0..q).map(|_| z()).collect();
                let next = |window: &mut Vec<f64>, z: f64| -> f64 {
                    window.rotate_right(1);
                    window[0] = z;
                    sigma * sum::sum(coeffs.iter().zip(window.iter()).map(|(c, w)| c * w))
                };
                for _ in 0..burn_in {
                    let zz = z();
                    next(&mut window, zz);
                }
                for dst in out.iter_mut() {
                    let zz = z();
                    *dst = next(&mut window, zz);
                }
            }
            ErrorKind::Garch11 { omega, alpha, beta } => {
                let mut h = omega / (1.0 - alpha - beta);
                let mut e = libm::sqrt(h) * z();
                for _ in 0..burn_in {
                    h = omega + alpha * e * e + beta * h;
                    e = libm::sqrt(h) * z();
                }
                for dst in out.iter_mut() {
                    h = omega + alpha * e * e + beta * h;
                    e = libm::sqrt(h) * z();
                    *dst = e;
                }
            }
        }
    }
}

/// `N` independent rows of length `T` drawn from `spec`.
pub fn gen_errors(spec: &ErrorProcessSpec, n: usize, t: usize, rng: &mut StreamRng) -> Result<Matrix> {
    spec.validate()?;
    let mut out = Matrix::zeros(n, t);
    for i in 0..n {
        spec.fill(rng, out.row_mut(i));
    }
    Ok(out)
}

/// A per-panel parameter given as one value for all panels or a full list.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(untagged)]
pub enum PerPanel {
    Scalar(f64),
    Values(Vec<f64>),
}

impl PerPanel {
    pub fn resolve(&self, n: usize, name: &str) -> Result<Vec<f64>> {
        let values = match self {
            PerPanel::Scalar(x) => vec![*x; n],
            PerPanel::Values(v) if v.len() == n => v.clone(),
            PerPanel::Values(v) => {
                return Err(Error::param(
                    name,
                    format!("expected {n} values, got {}", v.len()),
                ))
            }
        };
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::param(name, "values must be finite"));
        }
        Ok(values)
    }
}

impl From<f64> for PerPanel {
    fn from(x: f64) -> Self {
        PerPanel::Scalar(x)
    }
}

impl Default for PerPanel {
    fn default() -> Self {
        PerPanel::Scalar(0.0)
    }
}

fn default_factor() -> ErrorProcessSpec {
    ErrorProcessSpec::iid_normal(1.0)
}

fn default_error() -> ErrorProcessSpec {
    ErrorProcessSpec::iid_normal(1.0)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n: usize,
    pub t: usize,
    /// Break fraction; the break is at `t0 = floor(T theta)`.
    pub theta: f64,
    #[serde(default)]
    pub mu: PerPanel,
    pub delta: PerPanel,
    #[serde(default)]
    pub gamma: PerPanel,
    #[serde(default = "default_error")]
    pub error: ErrorProcessSpec,
    /// Common factor `eta_t`; its partial sums should have variance `t`.
    #[serde(default = "default_factor")]
    pub factor: ErrorProcessSpec,
    pub n_rep: usize,
    pub seed: u64,
}

impl SimulationConfig {
    /// iid standard normal errors and factor, `mu = 0`.
    pub fn new(n: usize, t: usize, theta: f64, delta: f64, gamma: f64, n_rep: usize, seed: u64) -> Self {
        Self {
            n,
            t,
            theta,
            mu: PerPanel::Scalar(0.0),
            delta: PerPanel::Scalar(delta),
            gamma: PerPanel::Scalar(gamma),
            error: default_error(),
            factor: default_factor(),
            n_rep,
            seed,
        }
    }

    /// `floor(T theta)`.
    pub fn t0(&self) -> usize {
        // the nudge keeps products like 0.3 * 10 from flooring to 2
        libm::floor(self.t as f64 * self.theta + 1e-9) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if self.t < 3 {
            return Err(Error::param("t", format!("must be at least 3, got {}", self.t)));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::param(
                "theta",
                format!("must lie in (0, 1), got {}", self.theta),
            ));
        }
        let t0 = self.t0();
        if t0 < 1 || t0 >= self.t {
            return Err(Error::param(
                "theta",
                format!("break floor(T theta) = {t0} must lie in 1..{}", self.t),
            ));
        }
        if self.n_rep < 1 {
            return Err(Error::param("n_rep", "must be at least 1"));
        }
        self.mu.resolve(self.n, "mu")?;
        self.delta.resolve(self.n, "delta")?;
        self.gamma.resolve(self.n, "gamma")?;
        self.error.validate_as("error")?;
        self.factor.validate_as("factor")
    }

    /// True `(Delta, Xi)` with `Xi = sum sigma_i^2 delta_i^2 + Sigma^2 sigma_eta^2`.
    pub fn true_norming(&self) -> Result<(f64, f64)> {
        let delta = self.delta.resolve(self.n, "delta")?;
        let gamma = self.gamma.resolve(self.n, "gamma")?;
        let big_delta = sum::sum(delta.iter().map(|d| d * d));
        let cross = sum::sum(delta.iter().zip(&gamma).map(|(d, g)| d * g));
        let xi = self.error.long_run_variance() * big_delta
            + cross * cross * self.factor.long_run_variance();
        Ok((big_delta, xi))
    }
}

/// Panel and generating quantities of one replicate.
pub fn gen_panel(config: &SimulationConfig, replicate: u64) -> Result<(PanelData, GroundTruth)> {
    config.validate()?;
    let mut rng = substream(config.seed, replicate);
    let e = gen_errors(&config.error, config.n, config.t, &mut rng)?;
    let mut eta = vec![0.0; config.t];
    config.factor.fill(&mut rng, &mut eta);
    let truth = GroundTruth {
        mu: config.mu.resolve(config.n, "mu")?,
        delta: config.delta.resolve(config.n, "delta")?,
        gamma: config.gamma.resolve(config.n, "gamma")?,
        t0: config.t0(),
        eta,
        e,
    };
    let panel = truth.reconstruct()?;
    Ok((panel, truth))
}

/// Probabilities at which coverage is reported.
pub const COVERAGE_PROBABILITIES: [f64; 3] = [0.90, 0.95, 0.99];

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LevelCoverage {
    pub probability: f64,
    pub quantile: f64,
    /// Percentage of replicates with `Z <= quantile`.
    pub coverage_pct: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CoverageReport {
    pub config: SimulationConfig,
    pub use_true_norming: bool,
    /// How `Z` is compared against the quantiles.
    pub convention: String,
    pub levels: Vec<LevelCoverage>,
    pub n_rep: usize,
    /// Replicates where the statistic could not be formed (estimated norming
    /// only); excluded from the percentages.
    pub n_failed: usize,
    /// Percentage of replicates with `t_hat = t0`.
    pub exact_pct: f64,
    pub table_theta: f64,
    pub table_n_rep: usize,
    pub table_seed: u64,
}

pub const COVERAGE_CONVENTION: &str = "one-sided: Z = Delta^2 (t_hat - t0) / Xi <= q_p";

fn normalized_offset(offset: i64, delta: f64, xi: f64) -> f64 {
    if offset == 0 {
        0.0
    } else {
        offset as f64 * delta * delta / xi
    }
}

/// Empirical percentages of `Delta^2 (t_hat - t0) / Xi` below the tabulated
/// quantiles at 90/95/99%.
pub fn run_coverage_experiment(
    config: &SimulationConfig,
    table: &QuantileTable,
    use_true_norming: bool,
) -> Result<CoverageReport> {
    config.validate()?;
    if libm::fabs(table.theta - config.theta) > 1e-9 {
        return Err(Error::ThetaMismatch {
            table: table.theta,
            config: config.theta,
        });
    }
    let quantiles = COVERAGE_PROBABILITIES
        .iter()
        .map(|&p| table.quantile(p).ok_or(Error::MissingQuantiles { p }))
        .collect::<Result<Vec<f64>>>()?;
    let (delta, xi) = config.true_norming()?;
    let t0 = config.t0();
    let outcomes = map_replicates(config.n_rep, |r| -> Result<(i64, Option<f64>)> {
        let (panel, _) = gen_panel(config, r)?;
        let t_hat = estimate_changepoint(&panel)?.t_hat;
        let offset = t_hat as i64 - t0 as i64;
        let z = if use_true_norming {
            Some(normalized_offset(offset, delta, xi))
        } else {
            estimate_norming(&panel, t_hat, None)
                .ok()
                .map(|q| normalized_offset(offset, q.delta_hat, q.xi_hat))
        };
        Ok((offset, z))
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let zs: Vec<f64> = outcomes.iter().filter_map(|o| o.1).collect();
    let n_failed = outcomes.len() - zs.len();
    let exact = outcomes.iter().filter(|o| o.0 == 0).count();
    let denom = zs.len().max(1) as f64;
    let levels = COVERAGE_PROBABILITIES
        .iter()
        .zip(&quantiles)
        .map(|(&p, &q)| LevelCoverage {
            probability: p,
            quantile: q,
            coverage_pct: 100.0 * zs.iter().filter(|&&z| z <= q).count() as f64 / denom,
        })
        .collect();
    Ok(CoverageReport {
        config: config.clone(),
        use_true_norming,
        convention: COVERAGE_CONVENTION.into(),
        levels,
        n_rep: config.n_rep,
        n_failed,
        exact_pct: 100.0 * exact as f64 / config.n_rep as f64,
        table_theta: table.theta,
        table_n_rep: table.n_rep,
        table_seed: table.seed,
    })
}

/// Continuous-law simulation settings for the histogram overlay.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LimitOverlay {
    pub halfwidth: f64,
    pub step: f64,
    pub n_rep: usize,
    pub seed: u64,
}

impl LimitOverlay {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            halfwidth: DEFAULT_HALFWIDTH,
            step: DEFAULT_STEP,
            n_rep: 100_000,
            seed: derive_seed(seed, 0x4f56),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HistogramRow {
    /// `t_hat - t0`.
    pub offset: i64,
    /// Fraction of replicates at this offset.
    pub empirical: f64,
    /// Density of the rescaled limit law at this offset.
    pub limit_density: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HistogramReport {
    pub config: SimulationConfig,
    pub overlay: LimitOverlay,
    /// `Xi / Delta^2`: the limit law is multiplied by this to match `t_hat - t0`.
    pub scale: f64,
    pub offsets: Vec<i64>,
    pub rows: Vec<HistogramRow>,
    /// Two-sample KS distance between the offsets and the rescaled limit
    /// draws rounded to integers.
    pub ks_statistic: f64,
}

/// Replicate values of `t_hat - t0` next to the rescaled continuous limit law.
pub fn run_histogram_experiment(config: &SimulationConfig, overlay: &LimitOverlay) -> Result<HistogramReport> {
    config.validate()?;
    let (delta, xi) = config.true_norming()?;
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::param("delta", "at least one panel must have a change"));
    }
    let scale = xi / (delta * delta);
    let t0 = config.t0() as i64;
    let offsets = map_replicates(config.n_rep, |r| -> Result<i64> {
        let (panel, _) = gen_panel(config, r)?;
        Ok(estimate_changepoint(&panel)?.t_hat as i64 - t0)
    })
    .into_iter()
    .collect::<Result<Vec<i64>>>()?;
    let limit = simulate_argmax_continuous(
        config.theta,
        overlay.halfwidth,
        overlay.step,
        overlay.n_rep,
        overlay.seed,
    )?;
    let scaled: Vec<f64> = limit.values.iter().map(|u| u * scale).collect();
    let rounded: Vec<f64> = scaled.iter().map(|x| libm::round(*x)).collect();
    let offsets_f: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
    let ks_statistic = stats::ks_two_sample(&offsets_f, &rounded);

    let lo = offsets.iter().copied().min().unwrap_or(0).min(-1);
    let hi = offsets.iter().copied().max().unwrap_or(0).max(1);
    let grid: Vec<f64> = (lo..=hi).map(|k| k as f64).collect();
    let bandwidth = if scale > 0.0 {
        stats::silverman_bandwidth(&scaled)
    } else {
        0.0
    };
    let density = if bandwidth > 0.0 {
        stats::gaussian_kde(&scaled, &grid, bandwidth)
    } else {
        // point mass: report the fraction of rounded draws at each offset
        grid.iter()
            .map(|g| rounded.iter().filter(|&&x| x == *g).count() as f64 / rounded.len() as f64)
            .collect()
    };
    let n = offsets.len() as f64;
    let rows = (lo..=hi)
        .zip(density)
        .map(|(k, limit_density)| HistogramRow {
            offset: k,
            empirical: offsets.iter().filter(|&&o| o == k).count() as f64 / n,
            limit_density,
        })
        .collect();
    Ok(HistogramReport {
        config: config.clone(),
        overlay: *overlay,
        scale,
        offsets,
        rows,
        ks_statistic,
    })
}
