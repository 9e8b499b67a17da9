//! Small descriptive statistics used by the experiments and their checks.

use alloc::vec::Vec;

use crate::sum;

/// Sorted copy of `values` (total order on finite floats).
pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Nearest-rank quantile `x_(ceil(p n))` of sorted data.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    // guard against p * n landing a hair above an integer
    let rank = libm::ceil(p * n as f64 - 1e-9).max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

/// Linearly interpolated quantile of sorted data.
pub fn interpolated(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    interpolated(&sorted(values), 0.5)
}

/// Interquartile range with interpolated quartiles.
pub fn iqr(values: &[f64]) -> f64 {
    let s = sorted(values);
    interpolated(&s, 0.75) - interpolated(&s, 0.25)
}

pub fn mean(values: &[f64]) -> f64 {
    sum::mean(values)
}

/// Sample variance with denominator `n - 1`.
pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    sum::sum(values.iter().map(|x| (x - m) * (x - m))) / (values.len() - 1) as f64
}

/// Two-sample Kolmogorov–Smirnov distance `sup_x |F_a(x) - F_b(x)|`, with
/// ties handled by stepping over all equal values at once.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let a = sorted(a);
    let b = sorted(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max(libm::fabs(i as f64 / na - j as f64 / nb));
    }
    d
}

/// Silverman's rule-of-thumb bandwidth for a Gaussian kernel.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let sd = libm::sqrt(variance(values));
    let spread = sd.min(iqr(values) / 1.34);
    let spread = if spread > 0.0 { spread } else { sd };
    0.9 * spread * libm::pow(n, -0.2)
}

/// Gaussian kernel density estimate of `values` evaluated on `grid`.
pub fn gaussian_kde(values: &[f64], grid: &[f64], bandwidth: f64) -> Vec<f64> {
    let norm = 1.0 / (values.len() as f64 * bandwidth * libm::sqrt(2.0 * core::f64::consts::PI));
    grid.iter()
        .map(|&x| {
            norm * sum::sum(values.iter().map(|&v| {
                let z = (x - v) / bandwidth;
                libm::exp(-0.5 * z * z)
            }))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn nearest_rank_examples() {
        let s: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(nearest_rank(&s, 0.95), 95.0);
        assert_eq!(nearest_rank(&s, 0.951), 96.0);
        assert_eq!(nearest_rank(&s, 0.001), 1.0);
        assert_eq!(nearest_rank(&[4.0; 9], 0.3), 4.0);
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        assert_eq!(ks_two_sample(&a, &[10.0, 11.0]), 1.0);
        // ties across samples
        assert_eq!(ks_two_sample(&[0.0, 0.0, 1.0, 1.0], &[0.0, 1.0]), 0.0);
    }

    #[test]
    fn quartiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(median(&v), 3.0);
        assert_eq!(iqr(&v), 2.0);
        assert_eq!(variance(&v), 2.5);
    }

    #[test]
    fn kde_integrates_to_one() {
        let v = vec![-1.0, 0.0, 0.5, 2.0];
        let grid: Vec<f64> = (-400..=400).map(|k| k as f64 * 0.025).collect();
        let f = gaussian_kde(&v, &grid, 0.4);
        let mass: f64 = f.iter().sum::<f64>() * 0.025;
        assert!(libm::fabs(mass - 1.0) < 1e-6);
    }
}
