//! Command-line front end. [`run`] returns the process exit status:
//! 0 success, 1 validation failure, 2 input error, 3 domain error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::analytics::perf_from_sid;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::montecarlo::{compare, run_scenario, ComparisonReport, EmpiricalStats, RunMode};
use crate::numerics::linear_fit;
use crate::semantic_source::{make_profile, write_profile, ProfileKind, DEFAULT_EXPONENTIAL_SHAPE};

/// Result table columns, in order.
pub const CSV_COLUMNS: [&str; 14] = [
    "user",
    "snr_db",
    "sid_noise",
    "sid_interf",
    "sid_cbr",
    "sid_sic",
    "sid_total",
    "perf_pred",
    "sid_th",
    "sop_analytic",
    "sid_mean_emp",
    "sid_stderr",
    "sop_emp",
    "gap_abs",
];

#[derive(Debug, Parser)]
#[command(name = "siasim", version, about = "Semantic distortion and outage: closed forms and Monte Carlo")]
pub struct Cli {
    /// Worker threads for Monte Carlo runs (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form SID breakdown, predicted performance and outage per SNR point.
    Predict(RunArgs),
    /// Monte Carlo SID statistics and outage rate per SNR point.
    Simulate(RunArgs),
    /// Runs both and compares outage; fails when any gap exceeds the tolerance.
    Validate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
    },
    /// Least-squares line through an (x, y) CSV.
    Fit {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes a parametric importance profile, one weight per line.
    ProfileGen {
        #[arg(long, default_value = "exponential")]
        kind: ProfileKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_EXPONENTIAL_SHAPE)]
        shape: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config: ScenarioConfig,
    pub command: String,
    pub started_at: String,
    pub tool_version: String,
    pub outputs: Vec<PathBuf>,
}

/// Parses `args` (including the program name) and executes the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Predict(args) => with_pool(cli.threads, || cmd_run("predict", args, RunMode::Analytic, None)),
        Command::Simulate(args) => with_pool(cli.threads, || cmd_run("simulate", args, RunMode::Empirical, None)),
        Command::Validate { run, tolerance } => {
            with_pool(cli.threads, || cmd_run("validate", run, RunMode::Both, Some(*tolerance)))
        }
        Command::Fit { points, out } => cmd_fit(points, out),
        Command::ProfileGen { kind, n, shape, out } => {
            write_profile(&make_profile(*kind, *n, *shape)?, out)?;
            Ok(0)
        }
    }
}

fn with_pool(threads: Option<usize>, f: impl FnOnce() -> Result<i32> + Send) -> Result<i32> {
    match threads {
        None => f(),
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(f),
    }
}

fn cmd_run(command: &str, args: &RunArgs, mode: RunMode, tolerance: Option<f64>) -> Result<i32> {
    let started_at = chrono::Utc::now().to_rfc3339();
    let mut config = ScenarioConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(t) = tolerance {
        if !(t >= 0.0) {
            return Err(Error::Config(format!("tolerance must be non-negative, got {t}")));
        }
    }
    let sid_th = config.sid_threshold()?;
    let k = crate::semantic_source::symbols_for_cbr(config.cbr, config.source_dim, config.n_symbols)?;
    if k % config.antennas != 0 {
        eprintln!(
            "note: {k} kept symbols shrunk to {} to fill {} layers evenly",
            k - k % config.antennas,
            config.antennas
        );
    }
    let stats = run_scenario(&config, mode)?;
    let report = tolerance.map(|t| compare(&stats, t)).transpose()?;
    write_results(&args.out, &config, &stats, sid_th, report.as_ref())?;
    let manifest_path = manifest_path(&args.out);
    let manifest = RunManifest {
        config,
        command: command.to_string(),
        started_at,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: vec![args.out.clone()],
    };
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;

    match report {
        None => Ok(0),
        Some(r) => {
            println!(
                "max |sop_analytic - sop_emp| = {} (tolerance {}): {}",
                r.max_gap,
                r.tolerance,
                if r.passed { "pass" } else { "FAIL" }
            );
            Ok(if r.passed { 0 } else { 1 })
        }
    }
}

/// `<out>.manifest.json` next to the results file.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the fixed-column results table.
pub fn write_results(
    out: &Path,
    config: &ScenarioConfig,
    stats: &EmpiricalStats,
    sid_th: f64,
    report: Option<&ComparisonReport>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(CSV_COLUMNS)?;
    for (i, p) in stats.points.iter().enumerate() {
        let a = p.analytic.as_ref();
        let e = p.empirical.as_ref();
        let b = a.map(|a| a.breakdown);
        let row = [
            p.user.to_string(),
            p.snr_db.to_string(),
            fmt_opt(b.map(|b| b.noise_term)),
            fmt_opt(b.map(|b| b.interference_term)),
            fmt_opt(b.map(|b| b.cbr_term)),
            fmt_opt(b.map(|b| b.sic_term)),
            fmt_opt(b.map(|b| b.total)),
            fmt_opt(b.map(|b| perf_from_sid(b.total, &config.perf))),
            sid_th.to_string(),
            fmt_opt(a.map(|a| a.sop[0])),
            fmt_opt(e.map(|e| e.mean_sid)),
            fmt_opt(e.map(|e| e.stderr_sid)),
            fmt_opt(e.map(|e| e.outage_rate[0])),
            fmt_opt(report.map(|r| r.rows[i].abs_gap)),
        ];
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `x,y` rows; a first row that does not parse as numbers is taken
/// as a header.
pub fn read_points(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        let parse = |idx: usize| record.get(idx).and_then(|s| s.parse::<f64>().ok());
        match (record.len(), parse(0), parse(1)) {
            (2, Some(x), Some(y)) if x.is_finite() && y.is_finite() => points.push((x, y)),
            _ if i == 0 => continue,
            _ => {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    line,
                    message: "expected two finite numbers".into(),
                })
            }
        }
    }
    Ok(points)
}

fn cmd_fit(points_path: &Path, out: &Path) -> Result<i32> {
    let points = read_points(points_path)?;
    let (slope, intercept) = linear_fit(&points)?;
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["slope", "intercept", "points"])?;
    w.write_record([slope.to_string(), intercept.to_string(), points.len().to_string()])?;
    w.flush()?;
    println!("slope = {slope}, intercept = {intercept}");
    Ok(0)
}
