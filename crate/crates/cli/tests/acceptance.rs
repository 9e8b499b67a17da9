//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs under `cargo test` with a custom harness. Pass criterion numbers as
//! arguments to run a subset: `cargo test --test acceptance -- 1 8`.

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use panelbreak::cusum::{cusum_profile, decompose, estimate, Method};
use panelbreak::limitdist::{build_default_table, simulate_argmax_continuous, ArgmaxSamples};
use panelbreak::norming::estimate_norming;
use panelbreak::panel::{GroundTruth, PanelData};
use panelbreak::rng::substream;
use panelbreak::stats::{iqr, ks_two_sample, median, nearest_rank, sorted};
use panelbreak::{gen_panel, run_coverage_experiment, Error, Matrix, SimulationConfig};
use panelbreak_cli::tables;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// 10^6 draws at theta = 1/2 on {-100, ..., 100}, step 0.02; shared by 1 and 8.
fn centre_samples() -> &'static ArgmaxSamples {
    static S: OnceLock<ArgmaxSamples> = OnceLock::new();
    S.get_or_init(|| simulate_argmax_continuous(0.5, 100.0, 0.02, 1_000_000, 20_140_501).unwrap())
}

fn limit_quantiles() -> Outcome {
    let s = centre_samples();
    let v = sorted(&s.values);
    let mut pass = true;
    let mut parts = Vec::new();
    for (p, target, tol) in [(0.90, 4.70, 0.10), (0.95, 7.69, 0.20), (0.99, 15.89, 0.60)] {
        let q = nearest_rank(&v, p);
        pass &= (q - target).abs() <= tol;
        parts.push(format!("q{:.0}={q:.3} ({target}±{tol})", p * 100.0));
    }
    parts.push(format!("boundary hits {}", s.boundary_hits));
    outcome(pass, parts.join(", "))
}

/// Coverage rows `(n, t, delta, [p90, p95, p99])` checked to within 3 points.
fn coverage_rows(gamma: f64, rows: &[(usize, usize, f64, [f64; 3])], seed: u64) -> Outcome {
    let table = tables::exact(tables::bundled(), 0.5).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, &(n, t, delta, expected)) in rows.iter().enumerate() {
        let config = SimulationConfig::new(n, t, 0.5, delta, gamma, 1000, seed + k as u64);
        let report = run_coverage_experiment(&config, &table, true).unwrap();
        let got: Vec<f64> = report.levels.iter().map(|l| l.coverage_pct).collect();
        let ok = got.iter().zip(expected).all(|(g, e)| (g - e).abs() <= 3.0);
        pass &= ok;
        parts.push(format!(
            "{n}/{t} d={delta}: {:.1}/{:.1}/{:.1} vs {}/{}/{}",
            got[0], got[1], got[2], expected[0], expected[1], expected[2]
        ));
    }
    outcome(pass, parts.join("; "))
}

fn table_one() -> Outcome {
    coverage_rows(
        0.0,
        &[
            (25, 100, 0.150, [88.7, 94.7, 100.0]),
            (50, 250, 0.070, [88.1, 95.4, 100.0]),
            (100, 500, 0.035, [88.5, 96.5, 100.0]),
        ],
        2_014_100,
    )
}

fn table_two() -> Outcome {
    coverage_rows(
        0.03,
        &[(25, 250, 0.100, [90.7, 95.6, 100.0]), (50, 250, 0.070, [91.0, 96.4, 100.0])],
        2_014_200,
    )
}

fn decomposition() -> Outcome {
    let mut rng = substream(2_014_004, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = Uniform::new_inclusive(1usize, 10).unwrap().sample(&mut rng);
        let t = Uniform::new_inclusive(3usize, 50).unwrap().sample(&mut rng);
        let t0 = Uniform::new(1usize, t).unwrap().sample(&mut rng);
        let mut normal = |k: usize, s: f64| -> Vec<f64> {
            (0..k)
                .map(|_| s * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect::<Vec<f64>>()
        };
        let truth = GroundTruth {
            mu: normal(n, 5.0),
            delta: normal(n, 2.0),
            gamma: normal(n, 1.0),
            t0,
            eta: normal(t, 1.0),
            e: Matrix::from_row_major(n, t, normal(n * t, 1.0)),
        };
        let panel = truth.reconstruct().unwrap();
        let prof = cusum_profile(&panel, true);
        let d = prof.per_panel().unwrap();
        let dec = decompose(&truth).unwrap();
        for i in 0..n {
            for s in 1..t {
                let rhs = dec.q.get(i, s - 1) + truth.gamma[i] * dec.v[s - 1] + truth.delta[i] * dec.r[s - 1];
                worst = worst.max((d.get(i, s - 1) - rhs).abs());
            }
        }
    }
    outcome(worst <= 1e-10, format!("max residual {worst:.2e} (≤ 1e-10)"))
}

fn noiseless() -> Outcome {
    let mut failures = Vec::new();
    let mut cases = 0;
    let mut no_window = Vec::new();
    for n in [1usize, 5, 50] {
        for t in [10usize, 100] {
            for theta in [0.2, 0.5, 0.8] {
                cases += 1;
                let t0 = SimulationConfig::new(n, t, theta, 1.0, 0.0, 1, 0).t0();
                // dyadic levels and jumps keep every mean and square exact
                let mu: Vec<f64> = (0..n).map(|i| (i % 7) as f64 * 0.5 - 1.5).collect();
                let delta: Vec<f64> = (0..n)
                    .map(|i| ((i % 4) as f64 + 1.0) * 0.25 * if i % 2 == 0 { 1.0 } else { -1.0 })
                    .collect();
                let rows = (0..n)
                    .map(|i| (1..=t).map(|s| mu[i] + if s > t0 { delta[i] } else { 0.0 }).collect())
                    .collect();
                let panel = PanelData::from_rows(rows).unwrap();
                let big_delta: f64 = delta.iter().map(|d| d * d).sum();
                let case = format!("N={n} T={t} θ={theta}");
                for method in [Method::CusumSum, Method::BaiWeighted] {
                    let t_hat = estimate(&panel, method).unwrap().t_hat;
                    if t_hat != t0 {
                        failures.push(format!("{case} {method:?}: t_hat {t_hat} != {t0}"));
                    }
                }
                match estimate_norming(&panel, t0, None) {
                    Ok(q) => {
                        if q.delta_hat != big_delta {
                            failures.push(format!("{case}: delta_hat {} != {big_delta}", q.delta_hat));
                        }
                        if q.xi_hat != 0.0 {
                            failures.push(format!("{case}: xi_hat {}", q.xi_hat));
                        }
                    }
                    // no window M1 < M2 < min(t0, T - t0) exists for t0 = 2 or T - 2
                    Err(Error::WindowOutOfRange { .. }) if t0.min(t - t0) <= 2 => {
                        let d = panelbreak::estimate_delta(&panel, t0).unwrap();
                        if d != big_delta {
                            failures.push(format!("{case}: delta_hat {d} != {big_delta}"));
                        }
                        no_window.push(case);
                    }
                    Err(e) => failures.push(format!("{case}: {e}")),
                }
            }
        }
    }
    let mut detail = format!("{cases} configurations, {} mismatches", failures.len());
    if !no_window.is_empty() {
        detail.push_str(&format!(
            "; xi_hat undefined (no admissible window) at {}",
            no_window.join(", ")
        ));
    }
    if !failures.is_empty() {
        detail.push_str(&format!(": {}", failures.join("; ")));
    }
    outcome(failures.is_empty(), detail)
}

fn strong_signal() -> Outcome {
    let config = SimulationConfig::new(50, 200, 0.5, 1.0, 0.0, 200, 2_014_006);
    let hits = (0..200u64)
        .into_par_iter()
        .filter(|&r| {
            let (panel, truth) = gen_panel(&config, r).unwrap();
            estimate(&panel, Method::CusumSum).unwrap().t_hat == truth.t0
        })
        .count();
    let share = hits as f64 / 200.0;
    outcome(share >= 0.95, format!("P(t_hat = t0) = {share:.3} (≥ 0.95)"))
}

fn norming_consistency() -> Outcome {
    let mut iqrs = Vec::new();
    let mut medians = (0.0, 0.0);
    let mut parts = Vec::new();
    for t in [200usize, 500, 1000] {
        let config = SimulationConfig::new(100, t, 0.5, 0.1, 0.0, 500, 2_014_007 + t as u64);
        let (big_delta, xi) = config.true_norming().unwrap();
        let ratios: Vec<(f64, f64)> = (0..500u64)
            .into_par_iter()
            .map(|r| {
                let (panel, _) = gen_panel(&config, r).unwrap();
                let t_hat = estimate(&panel, Method::CusumSum).unwrap().t_hat;
                let q = estimate_norming(&panel, t_hat, None).unwrap();
                (q.delta_hat / big_delta, q.xi_hat / xi)
            })
            .collect();
        let (d, x): (Vec<f64>, Vec<f64>) = ratios.into_iter().unzip();
        iqrs.push((iqr(&d), iqr(&x)));
        medians = (median(&d), median(&x));
        parts.push(format!(
            "T={t}: IQR {:.3}/{:.3} median {:.3}/{:.3}",
            iqr(&d),
            iqr(&x),
            medians.0,
            medians.1
        ));
    }
    let shrinks = iqrs.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1);
    let inside = |m: f64| (0.8..=1.25).contains(&m);
    let pass = shrinks && inside(medians.0) && inside(medians.1);
    outcome(
        pass,
        format!(
            "Δ̂/Δ and Ξ̂/Ξ: {}; IQR shrinks: {shrinks}; medians at T=1000 in [0.8, 1.25]: {}/{}",
            parts.join("; "),
            inside(medians.0),
            inside(medians.1)
        ),
    )
}

fn reflection_symmetry() -> Outcome {
    let a = simulate_argmax_continuous(0.3, 100.0, 0.02, 100_000, 2_014_083).unwrap();
    let b = simulate_argmax_continuous(0.7, 100.0, 0.02, 100_000, 2_014_087).unwrap();
    let negated: Vec<f64> = b.values.iter().map(|x| -x).collect();
    let ks = ks_two_sample(&a.values, &negated);
    let centre = sorted(&centre_samples().values);
    let med = nearest_rank(&centre, 0.5);
    let mut pass = ks < 0.01 && (-0.1..=0.1).contains(&med);
    let mut parts = vec![format!("KS(θ=0.3, -θ=0.7) = {ks:.4} (< 0.01)"), format!("median at 1/2 = {med:.3}")];
    for p in [0.90, 0.95] {
        let (hi, lo) = (nearest_rank(&centre, p), nearest_rank(&centre, 1.0 - p));
        pass &= (hi + lo).abs() < 0.05 * (hi.abs() + 1.0);
        parts.push(format!("q{:.0}+q{:.0} = {:.3}", p * 100.0, (1.0 - p) * 100.0, hi + lo));
    }
    outcome(pass, parts.join(", "))
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn determinism() -> Outcome {
    let run = || {
        let table = build_default_table(0.35, 20_000, 9).unwrap();
        let mut config = SimulationConfig::new(20, 150, 0.35, 0.2, 0.05, 300, 2_014_009);
        config.error = panelbreak::ErrorProcessSpec::ar1(0.4, 1.0);
        let coverage = run_coverage_experiment(&config, &table, false).unwrap();
        let overlay = panelbreak::simulate::LimitOverlay { n_rep: 5_000, ..panelbreak::simulate::LimitOverlay::with_seed(3) };
        let hist = panelbreak::run_histogram_experiment(&config, &overlay).unwrap();
        [
            serde_json::to_string(&table).unwrap(),
            serde_json::to_string(&coverage).unwrap(),
            serde_json::to_string(&hist).unwrap(),
        ]
    };
    let one = in_pool(1, run);
    let eight = in_pool(8, run);
    let same: Vec<bool> = one.iter().zip(&eight).map(|(a, b)| a == b).collect();
    outcome(
        same.iter().all(|&s| s),
        format!("table/coverage/histogram JSON identical at 1 and 8 threads: {same:?}"),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 9] = [
    (1, "limit-law quantiles at theta = 1/2", limit_quantiles),
    (2, "coverage, independent panels", table_one),
    (3, "coverage, common factor gamma = 0.03", table_two),
    (4, "CUSUM decomposition identity", decomposition),
    (5, "noiseless exactness", noiseless),
    (6, "strong-signal exact recovery", strong_signal),
    (7, "norming consistency", norming_consistency),
    (8, "limit-law reflection and symmetry", reflection_symmetry),
    (9, "determinism across thread counts", determinism),
];

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, check) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        println!(
            "criterion {id} {name}: {} [{:.1}s] {}",
            if result.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            result.detail
        );
        if !result.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
