//! Argmax limit laws of the change-point estimator and confidence intervals.
//!
//! The continuous law is `argmax_u { W(u) - g_theta(u) }` with `W` a
//! two-sided Wiener process and `g_theta` the tent drift. The discrete laws
//! replace `W` by a Gaussian process on the integers, optionally plus an
//! independent common-factor partial-sum process. All laws are sampled by
//! Monte Carlo; each replicate uses its own deterministic substream.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::par::map_replicates;
use crate::rng::{substream, StreamRng};
use crate::simulate::ErrorProcessSpec;
use crate::stats;

pub const TABLE_VERSION: u32 = 1;

/// Default half-width `C` of the continuous-law grid.
pub const DEFAULT_HALFWIDTH: f64 = 100.0;
/// Default step `h` of the continuous-law grid.
pub const DEFAULT_STEP: f64 = 0.02;
/// Coarsest accepted grid step.
pub const MAX_STEP: f64 = 0.1;
/// Fraction of replicates at the grid boundary above which samples are
/// flagged as saturated.
pub const SATURATION_LIMIT: f64 = 1e-3;

/// Probabilities tabulated by default; they cover two-sided 80–99.8% levels.
pub const DEFAULT_PROBABILITIES: [f64; 15] = [
    0.001, 0.005, 0.01, 0.025, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.975, 0.99, 0.995, 0.999,
];

/// `g_theta(u) = (1 - theta) |u|` for `u < 0` and `theta u` for `u >= 0`.
pub fn drift(theta: f64, u: f64) -> f64 {
    if u < 0.0 {
        -(1.0 - theta) * u
    } else {
        theta * u
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::param("theta", format!("must lie in (0, 1), got {theta}")));
    }
    Ok(())
}

/// One half-line of the simulation grid: points `step, 2 step, ...` up to
/// `halfwidth`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SideGrid {
    pub halfwidth: f64,
    pub step: f64,
}

impl SideGrid {
    pub fn points(&self) -> usize {
        libm::round(self.halfwidth / self.step) as usize
    }

    /// Grid whose resolution relative to the argmax scale `1/slope^2` of a
    /// side with drift `slope` matches the default grid at `theta = 1/2`.
    pub fn for_slope(slope: f64) -> Self {
        let scale = 0.25 / (slope * slope);
        Self {
            halfwidth: DEFAULT_HALFWIDTH * scale,
            step: DEFAULT_STEP * scale,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::param("h", format!("must be positive, got {}", self.step)));
        }
        if !(self.halfwidth >= self.step && self.halfwidth.is_finite()) {
            return Err(Error::param(
                "C",
                format!("must be at least the step, got {}", self.halfwidth),
            ));
        }
        Ok(())
    }
}

/// Grid on which the two-sided Wiener process is simulated.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WienerGrid {
    /// Grid for `u < 0`.
    pub left: SideGrid,
    /// Grid for `u > 0`.
    pub right: SideGrid,
}

impl WienerGrid {
    /// `{-C, -C + h, ..., C}`.
    pub fn symmetric(halfwidth: f64, step: f64) -> Self {
        let side = SideGrid { halfwidth, step };
        Self {
            left: side,
            right: side,
        }
    }

    /// Per-side grids scaled to each side's drift. At `theta = 1/2` this is
    /// the default `C = 100, h = 0.02` grid; for other `theta` the slow side
    /// gets a proportionally longer, coarser grid so the boundary stays as
    /// far out in units of the law's own scale.
    pub fn scaled(theta: f64) -> Self {
        Self {
            left: SideGrid::for_slope(1.0 - theta),
            right: SideGrid::for_slope(theta),
        }
    }
}

impl Default for WienerGrid {
    fn default() -> Self {
        Self::symmetric(DEFAULT_HALFWIDTH, DEFAULT_STEP)
    }
}

/// What a set of argmax samples was drawn from.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum LawKind {
    Continuous {
        grid: WienerGrid,
    },
    Discrete {
        regime: Regime,
        k: usize,
        d: f64,
        s: f64,
        sigma2: f64,
        covariance: String,
    },
}

/// Monte Carlo draws of an argmax law with their provenance.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ArgmaxSamples {
    pub theta: f64,
    pub law: LawKind,
    pub n_rep: usize,
    pub seed: u64,
    pub values: Vec<f64>,
    /// Replicates whose argmax sits on the outermost grid point.
    pub boundary_hits: usize,
}

impl ArgmaxSamples {
    pub fn saturation(&self) -> f64 {
        self.boundary_hits as f64 / self.n_rep as f64
    }

    /// More than 0.1% of replicates hit the grid boundary; widen the grid.
    pub fn is_saturated(&self) -> bool {
        self.saturation() > SATURATION_LIMIT
    }
}

/// Best value and index `k >= 1` of `B(k step) - slope k step` along one side,
/// `B` a standard Brownian motion. `prefer_far` breaks ties toward larger `k`.
#[inline]
fn scan_side(rng: &mut StreamRng, side: &SideGrid, slope: f64, prefer_far: bool) -> (f64, usize) {
    let sd = libm::sqrt(side.step);
    let mut w = 0.0;
    let mut best = (f64::NEG_INFINITY, 0);
    for k in 1..=side.points() {
        let z: f64 = StandardNormal.sample(rng);
        w += sd * z;
        let value = w - slope * (k as f64 * side.step);
        if value > best.0 || (prefer_far && value == best.0) {
            best = (value, k);
        }
    }
    best
}

/// One draw of `argmax_u {W(u) - g_theta(u)}` on `grid`; the flag reports a
/// maximiser on the outermost grid point.
pub fn sample_continuous(theta: f64, grid: &WienerGrid, rng: &mut StreamRng) -> (f64, bool) {
    let (left_value, left_k) = scan_side(rng, &grid.left, 1.0 - theta, true);
    let (right_value, right_k) = scan_side(rng, &grid.right, theta, false);
    // candidates in increasing u; strict comparison keeps the smallest u on ties
    let mut best = (left_value, -(left_k as f64) * grid.left.step, left_k == grid.left.points());
    if 0.0 > best.0 {
        best = (0.0, 0.0, false);
    }
    if right_value > best.0 {
        best = (
            right_value,
            right_k as f64 * grid.right.step,
            right_k == grid.right.points(),
        );
    }
    (best.1, best.2)
}

/// `n_rep` draws of the continuous law on `{-C, -C + h, ..., C}`.
pub fn simulate_argmax_continuous(
    theta: f64,
    halfwidth: f64,
    step: f64,
    n_rep: usize,
    seed: u64,
) -> Result<ArgmaxSamples> {
    if step > MAX_STEP {
        return Err(Error::GridTooCoarse { step });
    }
    simulate_argmax_continuous_on(theta, &WienerGrid::symmetric(halfwidth, step), n_rep, seed)
}

/// As [`simulate_argmax_continuous`] on an arbitrary (possibly asymmetric)
/// grid.
pub fn simulate_argmax_continuous_on(
    theta: f64,
    grid: &WienerGrid,
    n_rep: usize,
    seed: u64,
) -> Result<ArgmaxSamples> {
    check_theta(theta)?;
    grid.left.validate()?;
    grid.right.validate()?;
    if n_rep == 0 {
        return Err(Error::param("n_rep", "must be at least 1"));
    }
    let draws = map_replicates(n_rep, |r| {
        let mut rng = substream(seed, r);
        sample_continuous(theta, grid, &mut rng)
    });
    let boundary_hits = draws.iter().filter(|d| d.1).count();
    Ok(ArgmaxSamples {
        theta,
        law: LawKind::Continuous { grid: *grid },
        n_rep,
        seed,
        values: draws.into_iter().map(|d| d.0).collect(),
        boundary_hits,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `argmax_u {W(u) - g_theta(u)}` on the real line.
    Continuous,
    /// `argmax_t {G(t) - d g_theta(t)}` on the integers.
    DiscreteG,
    /// `argmax_t {G(t) + s d^(1/2) V(t) - d g_theta(t)}` on the integers.
    DiscreteGPlusV,
}

/// Covariance `u(s, t)` of the Gaussian process `G` on lags `-K..=K`.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Covariance {
    /// Independent increments with variance `sigma2` per step on each side,
    /// the two sides independent (a Wiener process on the integers).
    #[default]
    Uncorrelated,
    /// Row-major `(2K+1) x (2K+1)` matrix; row and column `K` are lag 0.
    Explicit { k: usize, matrix: Vec<f64> },
}

fn default_eta() -> ErrorProcessSpec {
    ErrorProcessSpec::iid_normal(1.0)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LimitLawSpec {
    pub theta: f64,
    pub regime: Regime,
    /// Limit of `Delta_{N,T}`; weight of the drift in the discrete laws.
    #[serde(default)]
    pub d: f64,
    /// Limit of `Sigma_{N,T} / Delta_{N,T}^(1/2)`.
    #[serde(default)]
    pub s: f64,
    /// Per-step variance of `G` in the uncorrelated covariance mode.
    pub sigma2: f64,
    #[serde(default)]
    pub cov: Covariance,
    /// Process whose partial sums form `V`.
    #[serde(default = "default_eta")]
    pub eta: ErrorProcessSpec,
}

impl LimitLawSpec {
    pub fn new(theta: f64, regime: Regime, d: f64, sigma2: f64) -> Self {
        Self {
            theta,
            regime,
            d,
            s: 0.0,
            sigma2,
            cov: Covariance::Uncorrelated,
            eta: default_eta(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_theta(self.theta)?;
        if !(self.d >= 0.0 && self.d.is_finite()) {
            return Err(Error::param("d", format!("must be finite and >= 0, got {}", self.d)));
        }
        if !self.s.is_finite() {
            return Err(Error::param("s", "must be finite"));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::param(
                "sigma2",
                format!("must be positive, got {}", self.sigma2),
            ));
        }
        self.eta.validate_as("eta")
    }
}

/// Symmetric PSD check and lower-triangular factor `L` with `L L' = A`,
/// tolerating zero pivots (semidefinite matrices).
pub(crate) fn psd_factor(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let scale = (0..n).map(|i| libm::fabs(a[i * n + i])).fold(0.0, f64::max).max(1.0);
    let tol = 1e-10 * scale;
    for i in 0..n {
        for j in 0..i {
            if libm::fabs(a[i * n + j] - a[j * n + i]) > tol {
                return Err(Error::CovarianceNotPsd(format!(
                    "entries ({i}, {j}) and ({j}, {i}) differ"
                )));
            }
        }
    }
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut pivot = a[j * n + j];
        for k in 0..j {
            pivot -= l[j * n + k] * l[j * n + k];
        }
        if pivot < -tol {
            return Err(Error::CovarianceNotPsd(format!(
                "negative pivot {pivot} at {j}"
            )));
        }
        if pivot <= tol {
            for i in j + 1..n {
                let mut r = a[i * n + j];
                for k in 0..j {
                    r -= l[i * n + k] * l[j * n + k];
                }
                if libm::fabs(r) > 1e-6 * scale {
                    return Err(Error::CovarianceNotPsd(format!(
                        "zero pivot at {j} with off-diagonal residual {r}"
                    )));
                }
            }
            continue;
        }
        let d = libm::sqrt(pivot);
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut r = a[i * n + j];
            for k in 0..j {
                r -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = r / d;
        }
    }
    Ok(l)
}

/// Validated discrete-law sampler for lags `-K..=K`.
#[derive(Debug, Clone)]
pub struct DiscreteSampler {
    spec: LimitLawSpec,
    k: usize,
    factor: Option<Vec<f64>>,
}

impl DiscreteSampler {
    pub fn new(spec: &LimitLawSpec, k: usize) -> Result<Self> {
        spec.validate()?;
        if spec.regime == Regime::Continuous {
            return Err(Error::param(
                "regime",
                "the continuous law is sampled by simulate_argmax_continuous",
            ));
        }
        if k < 1 {
            return Err(Error::param("K", "must be at least 1"));
        }
        let factor = match &spec.cov {
            Covariance::Uncorrelated => None,
            Covariance::Explicit { k: ck, matrix } => {
                let n = 2 * k + 1;
                if *ck != k {
                    return Err(Error::DimensionMismatch {
                        what: "covariance lag range K",
                        expected: k,
                        found: *ck,
                    });
                }
                if matrix.len() != n * n {
                    return Err(Error::DimensionMismatch {
                        what: "covariance entries",
                        expected: n * n,
                        found: matrix.len(),
                    });
                }
                let scale = matrix.iter().map(|x| libm::fabs(*x)).fold(0.0, f64::max).max(1.0);
                if (0..n).any(|j| {
                    libm::fabs(matrix[k * n + j]) > 1e-12 * scale
                        || libm::fabs(matrix[j * n + k]) > 1e-12 * scale
                }) {
                    return Err(Error::CovarianceNotPsd(
                        "the process must be pinned at lag 0 (u(0, .) = 0)".into(),
                    ));
                }
                let mut l = psd_factor(matrix, n)?;
                // the pinned row is exactly zero
                for j in 0..n {
                    l[k * n + j] = 0.0;
                }
                Some(l)
            }
        };
        Ok(Self {
            spec: spec.clone(),
            k,
            factor,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Objective at lags `-K..=K` (element `K` is lag 0) for one replicate.
    pub fn objective_path(&self, rng: &mut StreamRng) -> Vec<f64> {
        let k = self.k;
        let n = 2 * k + 1;
        let spec = &self.spec;
        let mut g = vec![0.0; n];
        match &self.factor {
            None => {
                let sd = libm::sqrt(spec.sigma2);
                let mut w = 0.0;
                for t in 1..=k {
                    let z: f64 = StandardNormal.sample(rng);
                    w += sd * z;
                    g[k + t] = w;
                }
                w = 0.0;
                for t in 1..=k {
                    let z: f64 = StandardNormal.sample(rng);
                    w += sd * z;
                    g[k - t] = w;
                }
            }
            Some(l) => {
                let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                for (i, gi) in g.iter_mut().enumerate() {
                    *gi = l[i * n..i * n + i + 1]
                        .iter()
                        .zip(&z)
                        .map(|(a, b)| a * b)
                        .sum();
                }
            }
        }
        if spec.regime == Regime::DiscreteGPlusV {
            let mut eta = vec![0.0; n];
            spec.eta.fill(rng, &mut eta);
            let weight = spec.s * libm::sqrt(spec.d);
            let mut v = 0.0;
            for t in 1..=k {
                v += eta[k + t];
                g[k + t] += weight * v;
            }
            v = 0.0;
            for t in 1..=k {
                v -= eta[k - t];
                g[k - t] += weight * v;
            }
        }
        for (i, gi) in g.iter_mut().enumerate() {
            let t = i as f64 - k as f64;
            *gi -= spec.d * drift(spec.theta, t);
        }
        g
    }

    /// One argmax draw (smallest lag on ties) and whether it sits at `+-K`.
    pub fn sample(&self, rng: &mut StreamRng) -> (i64, bool) {
        let path = self.objective_path(rng);
        let (idx, _) = crate::cusum::first_argmax(path.iter().copied());
        let lag = idx as i64 - 1 - self.k as i64;
        (lag, lag.unsigned_abs() as usize == self.k)
    }
}

/// `n_rep` draws of a discrete limit law on lags `-K..=K`.
pub fn simulate_argmax_discrete(
    spec: &LimitLawSpec,
    k: usize,
    n_rep: usize,
    seed: u64,
) -> Result<ArgmaxSamples> {
    let sampler = DiscreteSampler::new(spec, k)?;
    if n_rep == 0 {
        return Err(Error::param("n_rep", "must be at least 1"));
    }
    let draws = map_replicates(n_rep, |r| sampler.sample(&mut substream(seed, r)));
    let boundary_hits = draws.iter().filter(|d| d.1).count();
    Ok(ArgmaxSamples {
        theta: spec.theta,
        law: LawKind::Discrete {
            regime: spec.regime,
            k,
            d: spec.d,
            s: spec.s,
            sigma2: spec.sigma2,
            covariance: match spec.cov {
                Covariance::Uncorrelated => "uncorrelated".into(),
                Covariance::Explicit { .. } => "explicit".into(),
            },
        },
        n_rep,
        seed,
        values: draws.iter().map(|d| d.0 as f64).collect(),
        boundary_hits,
    })
}

/// Empirical quantiles of a simulated limit law with provenance.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuantileTable {
    pub version: u32,
    pub theta: f64,
    pub probabilities: Vec<f64>,
    pub quantiles: Vec<f64>,
    pub law: LawKind,
    pub n_rep: usize,
    pub seed: u64,
    pub boundary_hits: usize,
}

impl QuantileTable {
    /// Tabulated quantile at probability `p`, if present.
    pub fn quantile(&self, p: f64) -> Option<f64> {
        self.probabilities
            .iter()
            .position(|&q| libm::fabs(q - p) < 1e-9)
            .map(|i| self.quantiles[i])
    }
}

/// Nearest-rank quantiles `x_(ceil(p n))` of the samples.
pub fn quantiles(samples: &ArgmaxSamples, probabilities: &[f64]) -> Result<QuantileTable> {
    if samples.values.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut probs = probabilities.to_vec();
    if let Some(p) = probs.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::param("probabilities", format!("{p} is outside (0, 1)")));
    }
    probs.sort_by(f64::total_cmp);
    probs.dedup();
    let sorted = stats::sorted(&samples.values);
    Ok(QuantileTable {
        version: TABLE_VERSION,
        theta: samples.theta,
        quantiles: probs.iter().map(|&p| stats::nearest_rank(&sorted, p)).collect(),
        probabilities: probs,
        law: samples.law.clone(),
        n_rep: samples.n_rep,
        seed: samples.seed,
        boundary_hits: samples.boundary_hits,
    })
}

/// Simulates the continuous law at `theta` on [`WienerGrid::scaled`] and
/// tabulates [`DEFAULT_PROBABILITIES`].
pub fn build_default_table(theta: f64, n_rep: usize, seed: u64) -> Result<QuantileTable> {
    let samples = simulate_argmax_continuous_on(theta, &WienerGrid::scaled(theta), n_rep, seed)?;
    quantiles(&samples, &DEFAULT_PROBABILITIES)
}

/// Quantile tables on a grid of `theta` values with nearest lookup.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TableSet {
    pub tables: Vec<QuantileTable>,
}

impl TableSet {
    pub fn nearest(&self, theta: f64) -> Option<&QuantileTable> {
        self.tables.iter().min_by(|a, b| {
            libm::fabs(a.theta - theta).total_cmp(&libm::fabs(b.theta - theta))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConfidenceInterval {
    pub level: f64,
    /// Lower end, one-based time index.
    pub lo: usize,
    /// Upper end, one-based time index.
    pub hi: usize,
    /// Set when the interval is narrower than one time step before rounding.
    pub singleton: bool,
}

/// Equal-tailed interval for the break time from
/// `Delta_hat^2 / Xi_hat (t_hat - t0) ~ L`:
/// `[t_hat - q_{1-a/2} s, t_hat - q_{a/2} s]` with `s = Xi_hat / Delta_hat^2`,
/// rounded outward and clipped to `[1, T]`.
pub fn confidence_interval(
    t_hat: usize,
    series_len: usize,
    delta_hat: f64,
    xi_hat: f64,
    level: f64,
    table: &QuantileTable,
) -> Result<ConfidenceInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param("level", format!("must lie in (0, 1), got {level}")));
    }
    if !(delta_hat > 0.0 && delta_hat.is_finite()) {
        return Err(Error::param("delta_hat", format!("must be positive, got {delta_hat}")));
    }
    if !(xi_hat >= 0.0 && xi_hat.is_finite()) {
        return Err(Error::param("xi_hat", format!("must be non-negative, got {xi_hat}")));
    }
    if t_hat < 1 || t_hat >= series_len {
        return Err(Error::param("t_hat", format!("{t_hat} is outside 1..{series_len}")));
    }
    let alpha = 1.0 - level;
    let p_lo = alpha / 2.0;
    let p_hi = 1.0 - alpha / 2.0;
    let q_lo = table
        .quantile(p_lo)
        .ok_or(Error::MissingQuantiles { p: p_lo })?;
    let q_hi = table
        .quantile(p_hi)
        .ok_or(Error::MissingQuantiles { p: p_hi })?;
    let scale = xi_hat / (delta_hat * delta_hat);
    let center = t_hat as f64;
    let lower = center - q_hi * scale;
    let upper = center - q_lo * scale;
    if upper - lower < 1.0 {
        return Ok(ConfidenceInterval {
            level,
            lo: t_hat,
            hi: t_hat,
            singleton: true,
        });
    }
    let clip = |x: f64| x.max(1.0).min(series_len as f64) as usize;
    Ok(ConfidenceInterval {
        level,
        lo: clip(libm::floor(lower)).min(t_hat),
        hi: clip(libm::ceil(upper)).max(t_hat),
        singleton: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(probabilities: Vec<f64>, quantiles: Vec<f64>) -> QuantileTable {
        QuantileTable {
            version: TABLE_VERSION,
            theta: 0.5,
            probabilities,
            quantiles,
            law: LawKind::Continuous {
                grid: WienerGrid::default(),
            },
            n_rep: 1,
            seed: 0,
            boundary_hits: 0,
        }
    }

    #[test]
    fn drift_is_a_tent() {
        assert_eq!(drift(0.3, 2.0), 0.6);
        assert!(libm::fabs(drift(0.3, -2.0) - 1.4) < 1e-15);
        assert_eq!(drift(0.3, 0.0), 0.0);
        assert_eq!(drift(0.3, -1.5), drift(0.7, 1.5));
    }

    #[test]
    fn grid_validation() {
        assert_eq!(
            simulate_argmax_continuous(0.5, 10.0, 0.2, 10, 1),
            Err(Error::GridTooCoarse { step: 0.2 })
        );
        assert!(simulate_argmax_continuous(0.0, 10.0, 0.02, 10, 1).is_err());
        assert!(simulate_argmax_continuous(0.5, 10.0, 0.02, 0, 1).is_err());
        assert!(simulate_argmax_continuous(0.5, 0.0, 0.02, 10, 1).is_err());
    }

    #[test]
    fn scaled_grid_matches_default_at_half() {
        assert_eq!(WienerGrid::scaled(0.5), WienerGrid::default());
        let g = WienerGrid::scaled(0.2);
        assert_eq!(g.left.points(), g.right.points());
        assert!(g.right.halfwidth > g.left.halfwidth);
    }

    #[test]
    fn tiny_grid_saturates() {
        let s = simulate_argmax_continuous(0.5, 0.1, 0.05, 200, 3).unwrap();
        assert!(s.is_saturated());
        assert!(s.values.iter().all(|v| libm::fabs(*v) <= 0.1 + 1e-12));
    }

    #[test]
    fn quantile_table_examples() {
        let samples = ArgmaxSamples {
            theta: 0.5,
            law: LawKind::Continuous {
                grid: WienerGrid::default(),
            },
            n_rep: 100,
            seed: 0,
            values: (1..=100).rev().map(f64::from).collect(),
            boundary_hits: 0,
        };
        let t = quantiles(&samples, &[0.95, 0.5]).unwrap();
        assert_eq!(t.probabilities, vec![0.5, 0.95]);
        assert_eq!(t.quantile(0.95), Some(95.0));
        assert_eq!(t.quantile(0.5), Some(50.0));
        assert_eq!(t.quantile(0.9), None);

        let constant = ArgmaxSamples {
            values: vec![2.5; 10],
            n_rep: 10,
            ..samples.clone()
        };
        let t = quantiles(&constant, &DEFAULT_PROBABILITIES).unwrap();
        assert!(t.quantiles.iter().all(|&q| q == 2.5));

        let empty = ArgmaxSamples {
            values: vec![],
            ..samples.clone()
        };
        assert_eq!(quantiles(&empty, &[0.5]), Err(Error::EmptySamples));
        assert!(quantiles(&samples, &[1.0]).is_err());
    }

    #[test]
    fn ci_with_zero_scale_is_a_singleton() {
        let t = table(vec![0.05, 0.95], vec![-4.7, 4.7]);
        let ci = confidence_interval(40, 100, 3.0, 0.0, 0.9, &t).unwrap();
        assert_eq!((ci.lo, ci.hi, ci.singleton), (40, 40, true));
    }

    #[test]
    fn ci_arithmetic() {
        let t = table(vec![0.05, 0.95], vec![-4.7, 4.7]);
        // scale = 2 / 1 = 2: [50 - 9.4, 50 + 9.4] -> [40, 60]
        let ci = confidence_interval(50, 100, 1.0, 2.0, 0.9, &t).unwrap();
        assert_eq!((ci.lo, ci.hi, ci.singleton), (40, 60, false));
        // clipped at the ends
        let ci = confidence_interval(3, 100, 1.0, 2.0, 0.9, &t).unwrap();
        assert_eq!((ci.lo, ci.hi), (1, 13));
        assert!(matches!(
            confidence_interval(50, 100, 1.0, 2.0, 0.95, &t),
            Err(Error::MissingQuantiles { .. })
        ));
        assert!(confidence_interval(50, 100, 1.0, 2.0, 1.5, &t).is_err());
        assert!(confidence_interval(50, 100, 0.0, 2.0, 0.9, &t).is_err());
    }

    #[test]
    fn psd_factor_reproduces_matrix() {
        // Wiener covariance on lags -1, 0, 1
        let a = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0];
        let l = psd_factor(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| l[i * 3 + k] * l[j * 3 + k]).sum();
                assert!(libm::fabs(v - a[i * 3 + j]) < 1e-12);
            }
        }
        let bad = [1.0, 2.0, 2.0, 1.0];
        assert!(matches!(psd_factor(&bad, 2), Err(Error::CovarianceNotPsd(_))));
        let asym = [1.0, 0.5, 0.0, 1.0];
        assert!(matches!(psd_factor(&asym, 2), Err(Error::CovarianceNotPsd(_))));
    }

    #[test]
    fn discrete_sampler_rejects_bad_input() {
        let mut spec = LimitLawSpec::new(0.5, Regime::DiscreteG, 1.0, 1.0);
        assert!(DiscreteSampler::new(&spec, 0).is_err());
        spec.cov = Covariance::Explicit {
            k: 1,
            matrix: vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        };
        // not pinned at lag 0
        assert!(matches!(
            DiscreteSampler::new(&spec, 1),
            Err(Error::CovarianceNotPsd(_))
        ));
        spec.cov = Covariance::Explicit {
            k: 1,
            matrix: vec![1.0, 0.0, 3.0, 0.0, 0.0, 0.0, 3.0, 0.0, 1.0],
        };
        assert!(matches!(
            DiscreteSampler::new(&spec, 1),
            Err(Error::CovarianceNotPsd(_))
        ));
        assert!(matches!(
            DiscreteSampler::new(&spec, 2),
            Err(Error::DimensionMismatch { .. })
        ));
        let cont = LimitLawSpec::new(0.5, Regime::Continuous, 1.0, 1.0);
        assert!(DiscreteSampler::new(&cont, 3).is_err());
    }

    #[test]
    fn nearest_table_lookup() {
        let mut a = table(vec![0.5], vec![0.0]);
        a.theta = 0.45;
        let mut b = a.clone();
        b.theta = 0.5;
        let set = TableSet {
            tables: vec![a, b],
        };
        assert_eq!(set.nearest(0.49).unwrap().theta, 0.5);
        assert_eq!(set.nearest(0.46).unwrap().theta, 0.45);
    }
}
