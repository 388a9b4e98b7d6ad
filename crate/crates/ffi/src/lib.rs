//! C ABI over the `siasim` simulator.
//!
//! Every fallible entry point returns a [`SiasimStatus`] and writes its
//! result through an out-pointer. On failure the message is kept per thread
//! and can be read back with [`siasim_last_error_message`]. Handles are
//! opaque and must be released with their matching `_free` function.

// `!(x >= 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use siasim::analytics::{self, NoiseConvention, NoiseMoments, PerfModel, SidBreakdown};
use siasim::config::ScenarioConfig;
use siasim::montecarlo::{self, ComparisonReport, EmpiricalStats, RunMode};
use siasim::multiuser::TeModel;
use siasim::Error;

/// Result codes. `SIASIM_STATUS_OK` is zero; everything else is a failure
/// with a message available from `siasim_last_error_message`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiasimStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Unreadable or malformed input: config document, file, CSV.
    Input = 3,
    /// Well-formed input outside the model: bad parameter, singular channel,
    /// non-converged SVD.
    Domain = 4,
    /// The performance target cannot be met even at zero distortion.
    Unreachable = 5,
    /// Index past the end, or a query the handle cannot answer.
    OutOfRange = 6,
    /// A Rust panic was caught at the boundary. The handle involved should be
    /// treated as unusable.
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiasimMode {
    Analytic = 0,
    Empirical = 1,
    Both = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiasimConvention {
    PaperReal = 0,
    ComplexExact = 1,
}

/// A validated scenario configuration.
pub struct SiasimConfig {
    inner: ScenarioConfig,
}

/// Output of `siasim_run`.
pub struct SiasimResults {
    config: ScenarioConfig,
    stats: EmpiricalStats,
    sid_th: f64,
    report: Option<ComparisonReport>,
}

/// Distortion terms of one prediction.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiasimBreakdown {
    pub noise: f64,
    pub interference: f64,
    pub cbr: f64,
    pub sic: f64,
    pub total: f64,
}

/// One row of a run, matching the columns of the CSV output. Fields the run
/// did not compute are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiasimPoint {
    /// Index into the config's `powers`, 0 for the strongest user.
    pub user: usize,
    pub snr_index: usize,
    pub snr_db: f64,
    pub sid_noise: f64,
    pub sid_interf: f64,
    pub sid_cbr: f64,
    pub sid_sic: f64,
    pub sid_total: f64,
    pub perf_pred: f64,
    pub sid_th: f64,
    pub sop_analytic: f64,
    pub sid_mean_emp: f64,
    pub sid_stderr: f64,
    pub sop_emp: f64,
    pub gap_abs: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure {
    status: SiasimStatus,
    message: String,
}

impl Failure {
    fn new(status: SiasimStatus, message: impl Into<String>) -> Self {
        Failure { status, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::UnreachableTarget { .. } => SiasimStatus::Unreachable,
            e if e.exit_code() == 2 => SiasimStatus::Input,
            _ => SiasimStatus::Domain,
        };
        Failure::new(status, e.to_string())
    }
}

fn set_last_error(message: String) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SiasimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            SiasimStatus::Ok
        }
        Ok(Err(failure)) => {
            set_last_error(failure.message);
            failure.status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            SiasimStatus::Panic
        }
    }
}

fn non_null<T>(ptr: *const T, name: &str) -> Result<(), Failure> {
    if ptr.is_null() {
        Err(Failure::new(SiasimStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn read_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Failure> {
    non_null(ptr, name)?;
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|e| Failure::new(SiasimStatus::InvalidUtf8, format!("{name}: {e}")))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    non_null(out, name)?;
    out.write(value);
    Ok(())
}

fn convention(c: SiasimConvention) -> NoiseConvention {
    match c {
        SiasimConvention::PaperReal => NoiseConvention::PaperReal,
        SiasimConvention::ComplexExact => NoiseConvention::ComplexExact,
    }
}

fn breakdown(b: &SidBreakdown) -> SiasimBreakdown {
    SiasimBreakdown {
        noise: b.noise_term,
        interference: b.interference_term,
        cbr: b.cbr_term,
        sic: b.sic_term,
        total: b.total,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn siasim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// always NUL-terminated when `len > 0`). Returns the full message length in
/// bytes, not counting the terminator, so a caller can size a buffer with a
/// first call passing `len = 0`. Successful calls clear the message.
///
/// # Safety
/// `buf` must be null or point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn siasim_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Parses and validates a JSON scenario document. A relative
/// `profile_path` is resolved against the working directory.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siasim_config_from_json(json: *const c_char, out: *mut *mut SiasimConfig) -> SiasimStatus {
    guard(|| {
        non_null(out, "out")?;
        let text = read_str(json, "json")?;
        let config = ScenarioConfig::from_json(text)?;
        config.validate()?;
        write_out(out, Box::into_raw(Box::new(SiasimConfig { inner: config })), "out")
    })
}

/// Loads a scenario from a JSON file; a relative `profile_path` inside it
/// is resolved against the file's directory.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siasim_config_load(path: *const c_char, out: *mut *mut SiasimConfig) -> SiasimStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = PathBuf::from(read_str(path, "path")?);
        let config = ScenarioConfig::load(&path)?;
        write_out(out, Box::into_raw(Box::new(SiasimConfig { inner: config })), "out")
    })
}

/// Releases a config. Null is ignored.
///
/// # Safety
/// `config` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn siasim_config_free(config: *mut SiasimConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn siasim_config_set_seed(config: *mut SiasimConfig, seed: u64) -> SiasimStatus {
    guard(|| {
        non_null(config, "config")?;
        (*config).inner.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn siasim_config_set_trials(config: *mut SiasimConfig, trials: usize) -> SiasimStatus {
    guard(|| {
        non_null(config, "config")?;
        let mut next = (*config).inner.clone();
        next.trials = trials;
        next.validate()?;
        (*config).inner = next;
        Ok(())
    })
}

/// SID threshold implied by the config's performance model and target.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siasim_config_sid_threshold(config: *const SiasimConfig, out: *mut f64) -> SiasimStatus {
    guard(|| {
        non_null(config, "config")?;
        let th = (*config).inner.sid_threshold()?;
        write_out(out, th, "out")
    })
}

/// Runs the sweep described by `config`. `threads = 0` uses the shared
/// global pool; otherwise a dedicated pool of that size is built. Results do
/// not depend on the thread count. `tolerance` is used only in
/// `SIASIM_MODE_BOTH`, where it sets the pass/fail bound on the outage gap.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siasim_run(
    config: *const SiasimConfig,
    mode: SiasimMode,
    threads: usize,
    tolerance: f64,
    out: *mut *mut SiasimResults,
) -> SiasimStatus {
    guard(|| {
        non_null(config, "config")?;
        non_null(out, "out")?;
        let config = (*config).inner.clone();
        let mode = match mode {
            SiasimMode::Analytic => RunMode::Analytic,
            SiasimMode::Empirical => RunMode::Empirical,
            SiasimMode::Both => RunMode::Both,
        };
        if mode == RunMode::Both && !(tolerance >= 0.0) {
            return Err(Failure::new(SiasimStatus::Domain, format!("tolerance must be non-negative, got {tolerance}")));
        }
        let sid_th = config.sid_threshold()?;
        let run = || montecarlo::run_scenario(&config, mode);
        let stats = if threads == 0 {
            run()?
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Failure::new(SiasimStatus::Domain, format!("thread pool: {e}")))?
                .install(run)?
        };
        let report = match mode {
            RunMode::Both => Some(montecarlo::compare(&stats, tolerance)?),
            _ => None,
        };
        let results = SiasimResults { config, stats, sid_th, report };
        write_out(out, Box::into_raw(Box::new(results)), "out")
    })
}

/// Releases results. Null is ignored.
///
/// # Safety
/// `results` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn siasim_results_free(results: *mut SiasimResults) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}

/// Number of rows (SNR points times users); 0 for a null handle.
///
/// # Safety
/// `results` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn siasim_results_len(results: *const SiasimResults) -> usize {
    if results.is_null() {
        0
    } else {
        (*results).stats.points.len()
    }
}

/// Row `index`, SNR-major with users inner.
///
/// # Safety
/// `results` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siasim_results_point(
    results: *const SiasimResults,
    index: usize,
    out: *mut SiasimPoint,
) -> SiasimStatus {
    guard(|| {
        non_null(results, "results")?;
        let r = &*results;
        let p = r.stats.points.get(index).ok_or_else(|| {
            Failure::new(SiasimStatus::OutOfRange, format!("row {index} of {}", r.stats.points.len()))
        })?;
        let a = p.analytic.as_ref();
        let e = p.empirical.as_ref();
        let b = a.map(|a| breakdown(&a.breakdown));
        let nan = f64::NAN;
        let point = SiasimPoint {
            user: p.user,
            snr_index: p.snr_index,
            snr_db: p.snr_db,
            sid_noise: b.map_or(nan, |b| b.noise),
            sid_interf: b.map_or(nan, |b| b.interference),
            sid_cbr: b.map_or(nan, |b| b.cbr),
            sid_sic: b.map_or(nan, |b| b.sic),
            sid_total: b.map_or(nan, |b| b.total),
            perf_pred: b.map_or(nan, |b| analytics::perf_from_sid(b.total, &r.config.perf)),
            sid_th: r.sid_th,
            sop_analytic: a.map_or(nan, |a| a.sop[0]),
            sid_mean_emp: e.map_or(nan, |e| e.mean_sid),
            sid_stderr: e.map_or(nan, |e| e.stderr_sid),
            sop_emp: e.map_or(nan, |e| e.outage_rate[0]),
            gap_abs: r.report.as_ref().map_or(nan, |rep| rep.rows[index].abs_gap),
        };
        write_out(out, point, "out")
    })
}

/// Largest outage gap and whether it is within tolerance. Only results from
/// `SIASIM_MODE_BOTH` carry a comparison; others give
/// `SIASIM_STATUS_OUT_OF_RANGE`.
///
/// # Safety
/// `results` must be a live handle; `max_gap` and `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siasim_results_comparison(
    results: *const SiasimResults,
    max_gap: *mut f64,
    passed: *mut bool,
) -> SiasimStatus {
    guard(|| {
        non_null(results, "results")?;
        non_null(max_gap, "max_gap")?;
        non_null(passed, "passed")?;
        let report = (*results)
            .report
            .as_ref()
            .ok_or_else(|| Failure::new(SiasimStatus::OutOfRange, "results carry no comparison"))?;
        max_gap.write(report.max_gap);
        passed.write(report.passed);
        Ok(())
    })
}

/// Writes the results CSV, the same format the command-line tool emits.
///
/// # Safety
/// `results` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn siasim_results_write_csv(results: *const SiasimResults, path: *const c_char) -> SiasimStatus {
    guard(|| {
        non_null(results, "results")?;
        let path = PathBuf::from(read_str(path, "path")?);
        let r = &*results;
        siasim::cli::write_results(&path, &r.config, &r.stats, r.sid_th, r.report.as_ref())?;
        Ok(())
    })
}

/// Smallest SID at which the affine performance model still meets `target`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siasim_sid_threshold(target: f64, a1: f64, a2: f64, out: *mut f64) -> SiasimStatus {
    guard(|| {
        let model = PerfModel::new(a1, a2)?;
        write_out(out, analytics::sid_threshold(target, &model)?, "out")
    })
}

/// Predicted task performance at a given SID, clamped to [0, 1].
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siasim_perf_from_sid(sid: f64, a1: f64, a2: f64, out: *mut f64) -> SiasimStatus {
    guard(|| {
        let model = PerfModel::new(a1, a2)?;
        write_out(out, analytics::perf_from_sid(sid, &model), "out")
    })
}

/// Residual weighted distortion after semantic SIC, `b1*sid + b2` floored
/// at zero.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siasim_te_eval(sid: f64, b1: f64, b2: f64, out: *mut f64) -> SiasimStatus {
    guard(|| {
        let te = TeModel::new(b1, b2)?;
        write_out(out, analytics::te_eval(sid, &te), "out")
    })
}

/// Gaussian outage probability `P(det + noise > threshold)` where the noise
/// term has per-cell variance `noise_variance` and weight sums
/// `weight_sum`, `weight_sq_sum`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn siasim_sop(
    deterministic: f64,
    noise_variance: f64,
    weight_sum: f64,
    weight_sq_sum: f64,
    threshold: f64,
    convention: SiasimConvention,
    out: *mut f64,
) -> SiasimStatus {
    guard(|| {
        if !(noise_variance >= 0.0) || !(weight_sum >= 0.0) {
            return Err(Failure::new(SiasimStatus::Domain, "noise variance and weight sum must be non-negative"));
        }
        let noise = NoiseMoments { variance: noise_variance, weight_sum, weight_sq_sum };
        let est = analytics::sop_from_moments(deterministic, &noise, threshold, self::convention(convention))?;
        write_out(out, est.probability, "out")
    })
}

/// Single-user AWGN SID for a frame of `n` cells with the `k` most
/// important kept.
///
/// # Safety
/// `weights` and `energies` must each point to `n` readable doubles; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn siasim_sid_su_siso(
    weights: *const f64,
    energies: *const f64,
    n: usize,
    k: usize,
    noise_variance: f64,
    out: *mut SiasimBreakdown,
) -> SiasimStatus {
    guard(|| {
        non_null(weights, "weights")?;
        non_null(energies, "energies")?;
        let w = std::slice::from_raw_parts(weights, n);
        let e = std::slice::from_raw_parts(energies, n);
        let pred = analytics::sid_su_siso(w, e, k, noise_variance)?;
        write_out(out, breakdown(&pred.breakdown), "out")
    })
}
