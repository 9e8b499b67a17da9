use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use panelbreak::cusum::{estimate, Method};
use panelbreak::norming::{default_windows, estimate_delta, estimate_xi, WindowConfig};
use panelbreak::panel::PanelData;
use panelbreak::segment::{summarize_segments, SegmentSummary};
use panelbreak::simulate::LimitOverlay;
use panelbreak::{
    binary_segmentation, confidence_interval, run_coverage_experiment, run_histogram_experiment,
    ConfidenceInterval, QuantileTable, SegmentationConfig,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, TableSource};
use crate::error::{CliError, Result};
use crate::ingest::{load_panel, IngestSpec, Loaded, MissingPolicy, Orientation, Transform};
use crate::report::{self, Envelope};
use crate::tables;

#[derive(Debug, Parser)]
#[command(name = "panelbreak", version, about = "Common change-point estimation for panel data")]
pub struct Cli {
    /// Worker threads for simulations; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the common break and its norming quantities.
    Estimate(EstimateArgs),
    /// Confidence intervals for the break.
    Ci(CiArgs),
    /// Binary segmentation into several breaks.
    Segment(SegmentArgs),
    /// Run an experiment from a TOML config.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Comma- or tab-separated numeric file.
    pub file: PathBuf,
    /// How panels are laid out in the file.
    #[arg(long, value_enum)]
    pub orientation: Orientation,
    /// The first line holds labels.
    #[arg(long)]
    pub header: bool,
    /// The first field of every line is a label.
    #[arg(long)]
    pub index_column: bool,
    #[arg(long, value_enum, default_value = "reject")]
    pub missing: MissingPolicy,
    /// Applied in the order given; repeatable.
    #[arg(long = "transform", value_enum)]
    pub transforms: Vec<Transform>,
}

impl IngestArgs {
    fn spec(&self) -> IngestSpec {
        IngestSpec {
            path: self.file.clone(),
            orientation: self.orientation,
            header: self.header,
            index_column: self.index_column,
            missing: self.missing,
            transforms: self.transforms.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// What to print on stdout.
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Also write the JSON report here.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cusum,
    Bai,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Cusum => Method::CusumSum,
            MethodArg::Bai => Method::BaiWeighted,
        }
    }
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Inner window bound M1 (default max(1, floor(ln T))).
    #[arg(long)]
    pub m1: Option<usize>,
    /// Outer window bound M2 (default M1 + max(2, floor(sqrt(T) / delta_hat))).
    #[arg(long)]
    pub m2: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub ingest: IngestArgs,
    #[arg(long, value_enum, default_value = "cusum")]
    pub method: MethodArg,
    #[command(flatten)]
    pub windows: WindowArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CiArgs {
    #[command(flatten)]
    pub ingest: IngestArgs,
    #[arg(long, value_enum, default_value = "cusum")]
    pub method: MethodArg,
    #[command(flatten)]
    pub windows: WindowArgs,
    /// Coverage levels in (0, 1).
    #[arg(long, value_delimiter = ',', default_value = "0.9,0.95,0.99")]
    pub levels: Vec<f64>,
    /// Quantile table file (one table or a set); bundled tables otherwise.
    #[arg(long, conflicts_with = "simulate_table")]
    pub theta_table: Option<PathBuf>,
    /// Simulate a table at theta_hat = t_hat / T instead of looking one up.
    #[arg(long)]
    pub simulate_table: bool,
    /// Replications for --simulate-table.
    #[arg(long, default_value_t = 1_000_000)]
    pub reps: usize,
    /// Seed for --simulate-table.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub ingest: IngestArgs,
    /// Smallest admissible segment length.
    #[arg(long, default_value_t = 2)]
    pub min_segment: usize,
    /// Split while max_t U_N(t) / (L^2 N) exceeds this.
    #[arg(long)]
    pub threshold: f64,
    #[arg(long, default_value_t = 8)]
    pub max_depth: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Coverage,
    Histogram,
    #[value(name = "quantile_table", alias = "quantile-table")]
    QuantileTable,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML experiment config.
    pub config: PathBuf,
    #[arg(long, value_enum)]
    pub experiment: Experiment,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV table of the result (coverage levels or histogram bins).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// gnuplot data file (histogram only).
    #[arg(long)]
    pub dat: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Runs a parsed command line, on a dedicated pool when `--threads` is set.
pub fn run(cli: Cli) -> Result<String> {
    match cli.threads {
        Some(0) => Err(CliError::usage("--threads must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::usage(e.to_string()))?;
            pool.install(|| dispatch(cli.command))
        }
        None => dispatch(cli.command),
    }
}

fn dispatch(command: Command) -> Result<String> {
    match command {
        Command::Estimate(a) => cmd_estimate(&a),
        Command::Ci(a) => cmd_ci(&a),
        Command::Segment(a) => cmd_segment(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    }
}

fn emit<C: Serialize, R: Serialize>(
    out: &OutputArgs,
    envelope: &Envelope<C, R>,
    text: String,
) -> Result<String> {
    let json = envelope.to_json()?;
    if let Some(path) = &out.output {
        report::write_text(path, &json)?;
    }
    Ok(match out.format {
        Format::Json => json,
        Format::Text => text,
    })
}

#[derive(Debug, Clone, Serialize)]
struct InputEcho {
    ingest: IngestSpec,
    n_panels: usize,
    series_len: usize,
    dropped_panels: Vec<String>,
}

fn echo(spec: IngestSpec, loaded: &Loaded) -> InputEcho {
    InputEcho {
        ingest: spec,
        n_panels: loaded.panel.n_panels(),
        series_len: loaded.panel.len(),
        dropped_panels: loaded.dropped_panels.clone(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateResult {
    pub method: Method,
    pub t_hat: usize,
    /// Time label of the last observation before the break.
    pub t_hat_label: String,
    pub objective_at_t_hat: f64,
    pub theta_hat: f64,
    pub delta_hat: f64,
    pub xi_hat: f64,
    pub windows: WindowConfig,
    /// `xi_hat / delta_hat^2`, the time scale of the interval.
    pub scale: f64,
    pub note: Option<String>,
}

fn windows_for(panel: &PanelData, t_hat: usize, delta_hat: f64, args: &WindowArgs) -> Result<WindowConfig> {
    let windows = match (args.m1, args.m2) {
        (Some(m1), Some(m2)) => WindowConfig::new(m1, m2)?,
        (m1, m2) => {
            let d = default_windows(panel.len(), t_hat, delta_hat)?;
            let m1 = m1.unwrap_or(d.m1);
            WindowConfig::new(m1, m2.unwrap_or(d.m2.max(m1 + 1)))?
        }
    };
    windows.check(t_hat, panel.len())?;
    Ok(windows)
}

fn estimate_panel(panel: &PanelData, method: MethodArg, window_args: &WindowArgs) -> Result<EstimateResult> {
    let est = estimate(panel, method.into())?;
    let t_hat = est.t_hat;
    let delta_hat = estimate_delta(panel, t_hat)?;
    let windows = windows_for(panel, t_hat, delta_hat, window_args)?;
    let xi_hat = estimate_xi(panel, t_hat, windows)?;
    let scale = xi_hat / (delta_hat * delta_hat);
    let note = (xi_hat == 0.0).then(|| {
        format!("xi_hat = 0: every confidence interval is the single point {t_hat}")
    });
    Ok(EstimateResult {
        method: est.method,
        t_hat,
        t_hat_label: panel.time_ids()[t_hat - 1].clone(),
        objective_at_t_hat: est.objective_at_t_hat,
        theta_hat: t_hat as f64 / panel.len() as f64,
        delta_hat,
        xi_hat,
        windows,
        scale,
        note,
    })
}

fn estimate_text(r: &EstimateResult, n: usize, t: usize) -> String {
    let mut s = format!(
        "panels: {n}, length: {t}\nmethod: {}\nt_hat: {} ({})\ndelta_hat: {}\nxi_hat: {}\nwindows: m1 = {}, m2 = {}\nscale xi_hat/delta_hat^2: {}\n",
        match r.method {
            Method::CusumSum => "cusum",
            Method::BaiWeighted => "bai",
        },
        r.t_hat,
        r.t_hat_label,
        r.delta_hat,
        r.xi_hat,
        r.windows.m1,
        r.windows.m2,
        r.scale
    );
    if let Some(note) = &r.note {
        s.push_str(&format!("note: {note}\n"));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
struct EstimateConfig {
    input: InputEcho,
    method: Method,
    m1: Option<usize>,
    m2: Option<usize>,
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<String> {
    let spec = args.ingest.spec();
    let loaded = load_panel(&spec)?;
    let result = estimate_panel(&loaded.panel, args.method, &args.windows)?;
    let text = estimate_text(&result, loaded.panel.n_panels(), loaded.panel.len());
    let config = EstimateConfig {
        input: echo(spec, &loaded),
        method: args.method.into(),
        m1: args.windows.m1,
        m2: args.windows.m2,
    };
    emit(&args.out, &Envelope::new("estimate", None, config, result), text)
}

#[derive(Debug, Clone, Serialize)]
struct TableInfo {
    source: String,
    theta: f64,
    n_rep: usize,
    seed: u64,
    boundary_hits: usize,
}

#[derive(Debug, Clone, Serialize)]
struct LabelledInterval {
    #[serde(flatten)]
    interval: ConfidenceInterval,
    lo_label: String,
    hi_label: String,
}

#[derive(Debug, Clone, Serialize)]
struct CiResult {
    estimate: EstimateResult,
    table: TableInfo,
    intervals: Vec<LabelledInterval>,
}

#[derive(Debug, Clone, Serialize)]
struct CiConfig {
    input: InputEcho,
    method: Method,
    m1: Option<usize>,
    m2: Option<usize>,
    levels: Vec<f64>,
    theta_table: Option<PathBuf>,
    simulate_table: bool,
    reps: Option<usize>,
}

pub fn cmd_ci(args: &CiArgs) -> Result<String> {
    if args.levels.is_empty() {
        return Err(CliError::usage("--levels needs at least one level"));
    }
    if let Some(level) = args.levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(CliError::usage(format!("level {level} is outside (0, 1)")));
    }
    if args.simulate_table && args.reps == 0 {
        return Err(CliError::usage("--reps must be at least 1"));
    }
    let spec = args.ingest.spec();
    let loaded = load_panel(&spec)?;
    let panel = &loaded.panel;
    let est = estimate_panel(panel, args.method, &args.windows)?;
    let (table, source): (QuantileTable, String) = if args.simulate_table {
        (tables::simulate(est.theta_hat, args.reps, args.seed)?, "simulated".into())
    } else if let Some(path) = &args.theta_table {
        (
            tables::nearest(&tables::load(path)?, est.theta_hat)?,
            path.display().to_string(),
        )
    } else {
        (tables::nearest(tables::bundled(), est.theta_hat)?, "bundled".into())
    };
    let intervals = args
        .levels
        .iter()
        .map(|&level| {
            let ci = confidence_interval(est.t_hat, panel.len(), est.delta_hat, est.xi_hat, level, &table)?;
            Ok(LabelledInterval {
                lo_label: panel.time_ids()[ci.lo - 1].clone(),
                hi_label: panel.time_ids()[ci.hi - 1].clone(),
                interval: ci,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut text = estimate_text(&est, panel.n_panels(), panel.len());
    text.push_str(&format!(
        "quantile table: {source}, theta = {} ({} draws, seed {})\n",
        table.theta, table.n_rep, table.seed
    ));
    for li in &intervals {
        let ci = &li.interval;
        text.push_str(&format!(
            "{:>5.1}%: [{}, {}]{}\n",
            100.0 * ci.level,
            ci.lo,
            ci.hi,
            if ci.singleton { " (single point)" } else { "" }
        ));
    }
    let result = CiResult {
        estimate: est,
        table: TableInfo {
            source,
            theta: table.theta,
            n_rep: table.n_rep,
            seed: table.seed,
            boundary_hits: table.boundary_hits,
        },
        intervals,
    };
    let config = CiConfig {
        input: echo(spec, &loaded),
        method: args.method.into(),
        m1: args.windows.m1,
        m2: args.windows.m2,
        levels: args.levels.clone(),
        theta_table: args.theta_table.clone(),
        simulate_table: args.simulate_table,
        reps: args.simulate_table.then_some(args.reps),
    };
    let seed = args.simulate_table.then_some(args.seed);
    emit(&args.out, &Envelope::new("ci", seed, config, result), text)
}

#[derive(Debug, Clone, Serialize)]
struct SegmentResult {
    breaks: Vec<usize>,
    break_labels: Vec<String>,
    segments: Vec<SegmentSummary>,
}

#[derive(Debug, Clone, Serialize)]
struct SegmentConfigEcho {
    input: InputEcho,
    segmentation: SegmentationConfig,
}

pub fn cmd_segment(args: &SegmentArgs) -> Result<String> {
    let spec = args.ingest.spec();
    let loaded = load_panel(&spec)?;
    let panel = &loaded.panel;
    let config = SegmentationConfig {
        min_segment: args.min_segment,
        max_depth: args.max_depth,
        threshold: args.threshold,
    };
    let breaks = binary_segmentation(panel, &config)?;
    let segments = summarize_segments(panel, &breaks);
    let break_labels: Vec<String> = breaks.iter().map(|&b| panel.time_ids()[b - 1].clone()).collect();
    let mut text = format!("breaks: {:?}\n", breaks);
    for s in &segments {
        text.push_str(&format!("segment {}..={}: mean {}\n", s.first, s.last, s.mean));
    }
    let result = SegmentResult {
        breaks,
        break_labels,
        segments,
    };
    let echo = SegmentConfigEcho {
        input: echo(spec, &loaded),
        segmentation: config,
    };
    emit(&args.out, &Envelope::new("segment", None, echo, result), text)
}

#[derive(Debug, Clone, Serialize)]
struct SimulateConfigEcho {
    experiment: Experiment,
    config: ExperimentConfig,
}

fn coverage_table(theta: f64, source: &TableSource) -> Result<QuantileTable> {
    match source {
        TableSource::Bundled => tables::exact(tables::bundled(), theta),
        TableSource::File { path } => tables::exact(&tables::load(path)?, theta),
        TableSource::Simulate { n_rep, seed } => tables::simulate(theta, *n_rep, *seed),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        if let Some(sim) = config.simulation.as_mut() {
            sim.seed = seed;
        }
        if let Some(q) = config.quantile_table.as_mut() {
            q.seed = seed;
        }
    }
    if args.dat.is_some() && args.experiment != Experiment::Histogram {
        return Err(CliError::usage("--dat is only produced by the histogram experiment"));
    }
    let echo = |config: &ExperimentConfig| SimulateConfigEcho {
        experiment: args.experiment,
        config: config.clone(),
    };
    match args.experiment {
        Experiment::Coverage => {
            let sim = config.simulation("coverage")?;
            let section = config.coverage.clone().unwrap_or(crate::config::CoverageSection {
                use_true_norming: true,
                table: TableSource::Bundled,
            });
            let table = coverage_table(sim.theta, &section.table)?;
            let report = run_coverage_experiment(sim, &table, section.use_true_norming)?;
            if let Some(path) = &args.csv {
                report::write_text(path, &report::coverage_csv(&report)?)?;
            }
            let mut text = format!(
                "coverage, N = {}, T = {}, theta = {}, {} replications ({} norming)\n",
                sim.n,
                sim.t,
                sim.theta,
                report.n_rep,
                if report.use_true_norming { "true" } else { "estimated" }
            );
            for l in &report.levels {
                text.push_str(&format!(
                    "{:>5.1}%  q = {:>8.4}  coverage {:>6.2}%\n",
                    100.0 * l.probability,
                    l.quantile,
                    l.coverage_pct
                ));
            }
            text.push_str(&format!("t_hat = t0 in {:.2}% of replications\n", report.exact_pct));
            let seed = Some(sim.seed);
            emit(&args.out, &Envelope::new("simulate", seed, echo(&config), report), text)
        }
        Experiment::Histogram => {
            let sim = config.simulation("histogram")?;
            let section = config.histogram.clone().unwrap_or(crate::config::HistogramSection {
                limit_reps: 100_000,
                limit_seed: None,
                halfwidth: None,
                step: None,
            });
            let base = LimitOverlay::with_seed(sim.seed);
            let overlay = LimitOverlay {
                halfwidth: section.halfwidth.unwrap_or(base.halfwidth),
                step: section.step.unwrap_or(base.step),
                n_rep: section.limit_reps,
                seed: section.limit_seed.unwrap_or(base.seed),
            };
            let report = run_histogram_experiment(sim, &overlay)?;
            if let Some(path) = &args.csv {
                report::write_text(path, &report::histogram_csv(&report)?)?;
            }
            if let Some(path) = &args.dat {
                report::write_text(path, &report::histogram_dat(&report))?;
            }
            let text = format!(
                "histogram of t_hat - t0 over {} replications, {} bins; limit scale {}; KS distance {:.4}\n",
                report.offsets.len(),
                report.rows.len(),
                report.scale,
                report.ks_statistic
            );
            let seed = Some(sim.seed);
            emit(&args.out, &Envelope::new("simulate", seed, echo(&config), report), text)
        }
        Experiment::QuantileTable => {
            let q = config.quantile_table.clone().ok_or_else(|| CliError::Config {
                field: "quantile_table".into(),
                message: "the quantile_table experiment needs a [quantile_table] section".into(),
            })?;
            let table = match (q.halfwidth, q.step) {
                (Some(c), Some(h)) => tables::simulate_symmetric(q.theta, c, h, q.n_rep, q.seed, &q.probabilities)?,
                _ => {
                    let grid = panelbreak::limitdist::WienerGrid::scaled(q.theta);
                    let samples = panelbreak::limitdist::simulate_argmax_continuous_on(q.theta, &grid, q.n_rep, q.seed)?;
                    panelbreak::quantiles(&samples, &q.probabilities)?
                }
            };
            let mut text = format!(
                "theta = {}, {} draws, seed {}, boundary hits {}\n",
                table.theta, table.n_rep, table.seed, table.boundary_hits
            );
            for (p, v) in table.probabilities.iter().zip(&table.quantiles) {
                text.push_str(&format!("{p:>6}: {v}\n"));
            }
            if let Some(path) = &args.csv {
                let mut csv = String::from("probability,quantile\n");
                for (p, v) in table.probabilities.iter().zip(&table.quantiles) {
                    csv.push_str(&format!("{p},{v}\n"));
                }
                report::write_text(path, &csv)?;
            }
            let seed = Some(q.seed);
            emit(&args.out, &Envelope::new("simulate", seed, echo(&config), table), text)
        }
    }
}
