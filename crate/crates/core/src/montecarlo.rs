//! Trial engine: runs the full transmit/receive chain per trial, pairs every
//! realized SID with the closed-form prediction for the same frame and
//! channel, and aggregates per SNR point and user.
//!
//! Frames and channels depend only on `(seed, trial, user)` and are shared
//! by every SNR point of a trial; noise and SIC residuals additionally
//! depend on the SNR index. Trials are processed in fixed-size chunks whose
//! partial sums are merged in chunk order, so results are bit-identical for
//! any number of worker threads.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytics::{
    sid_mu, sid_single, sop_from_moments, truncation_distortion, LinkTerms, SidBreakdown,
    SidPrediction,
};
use crate::channel::{sample_channel, ChannelRealization, NoiseSpec};
use crate::config::{Scenario, ScenarioConfig};
use crate::error::{Error, Result};
use crate::layer_mapping::{smap, sremap};
use crate::multiuser::{cancel_and_receive, semantic_sic, superpose, Cancellation, SicScaling, UserLink};
use crate::numerics::{ComplexMatrix, RngStream};
use crate::semantic_source::{generate_frame, select_by_cbr, ImportanceProfile, TransmissionSelection};

/// Trials per work unit. Fixed so that summation order never depends on
/// the thread count.
pub const CHUNK_TRIALS: usize = 64;

const FRAME_STREAM: u64 = 1;
const CHANNEL_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;
const SIC_STREAM: u64 = 4;

/// What a run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Closed-form predictions averaged over sampled frames and channels.
    Analytic,
    /// Realized SIDs only.
    Empirical,
    Both,
}

impl RunMode {
    fn analytic(&self) -> bool {
        matches!(self, RunMode::Analytic | RunMode::Both)
    }

    fn empirical(&self) -> bool {
        matches!(self, RunMode::Empirical | RunMode::Both)
    }
}

/// One user's result at one SNR point of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserOutcome {
    pub realized: Option<f64>,
    pub prediction: Option<SidPrediction>,
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Sample standard deviation over `√count`.
    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.sample_variance() / self.count as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, Default)]
struct PointAccumulator {
    realized: Moments,
    outages: Vec<u64>,
    noise: Moments,
    interference: Moments,
    cbr: Moments,
    sic: Moments,
    total: Moments,
    sop: Vec<Moments>,
    paired: Moments,
}

impl PointAccumulator {
    fn new(thresholds: usize) -> Self {
        Self {
            outages: vec![0; thresholds],
            sop: vec![Moments::default(); thresholds],
            ..Self::default()
        }
    }

    fn push(&mut self, outcome: &UserOutcome, thresholds: &[f64], ctx: &Context) -> Result<()> {
        if let Some(sid) = outcome.realized {
            self.realized.push(sid);
            for (count, &th) in self.outages.iter_mut().zip(thresholds) {
                *count += u64::from(sid > th);
            }
        }
        if let Some(p) = &outcome.prediction {
            let b = &p.breakdown;
            self.noise.push(b.noise_term);
            self.interference.push(b.interference_term);
            self.cbr.push(b.cbr_term);
            self.sic.push(b.sic_term);
            self.total.push(b.total);
            for (acc, &th) in self.sop.iter_mut().zip(thresholds) {
                let est = sop_from_moments(b.deterministic(), &p.noise, th, ctx.config.noise_convention)?;
                acc.push(est.probability);
            }
            if let Some(sid) = outcome.realized {
                self.paired.push(sid - b.total);
            }
        }
        Ok(())
    }

    fn merge(&mut self, other: &PointAccumulator) {
        self.realized.merge(&other.realized);
        self.outages.iter_mut().zip(&other.outages).for_each(|(a, b)| *a += b);
        for (a, b) in [
            (&mut self.noise, &other.noise),
            (&mut self.interference, &other.interference),
            (&mut self.cbr, &other.cbr),
            (&mut self.sic, &other.sic),
            (&mut self.total, &other.total),
            (&mut self.paired, &other.paired),
        ] {
            a.merge(b);
        }
        self.sop.iter_mut().zip(&other.sop).for_each(|(a, b)| a.merge(b));
    }
}

/// Closed-form side of one grid point, averaged over trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticSummary {
    pub breakdown: SidBreakdown,
    /// Outage probability for every threshold, in threshold order.
    pub sop: Vec<f64>,
}

/// Monte Carlo side of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSummary {
    pub mean_sid: f64,
    pub stderr_sid: f64,
    pub trials: u64,
    pub outage_count: Vec<u64>,
    pub outage_rate: Vec<f64>,
}

/// Per-trial `realized − predicted` SID.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedSummary {
    pub mean_diff: f64,
    pub stderr_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointStats {
    pub user: usize,
    pub snr_index: usize,
    pub snr_db: f64,
    pub analytic: Option<AnalyticSummary>,
    pub empirical: Option<EmpiricalSummary>,
    pub paired: Option<PairedSummary>,
}

/// Results of a sweep: one entry per SNR point and user, SNR-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalStats {
    pub thresholds: Vec<f64>,
    pub users: usize,
    pub trials: usize,
    pub points: Vec<PointStats>,
}

impl EmpiricalStats {
    pub fn point(&self, snr_index: usize, user: usize) -> &PointStats {
        &self.points[snr_index * self.users + user]
    }
}

/// Immutable per-run state shared by all trials.
struct Context<'a> {
    config: &'a ScenarioConfig,
    profile: Arc<ImportanceProfile>,
    selection: TransmissionSelection,
    noise: Vec<NoiseSpec>,
}

impl<'a> Context<'a> {
    fn new(config: &'a ScenarioConfig, mode: RunMode) -> Result<Self> {
        config.validate()?;
        if mode.analytic() && config.users() > 2 {
            return Err(Error::param(format!(
                "closed-form predictions cover at most two users, config has {}",
                config.users()
            )));
        }
        let profile = config.profile()?;
        let selection = select_by_cbr(&profile, config.cbr, config.source_dim)?;
        let noise = config
            .snr_db_grid
            .iter()
            .map(|&snr| NoiseSpec::new(config.noise_variance(snr), config.noise_kind()))
            .collect::<Result<_>>()?;
        Ok(Self {
            config,
            profile,
            selection,
            noise,
        })
    }

    fn rng(&self, indices: &[u64]) -> RngStream {
        RngStream::derived(self.config.seed, indices)
    }

    fn build_links(&self, trial: u64) -> Result<Vec<UserLink>> {
        let cfg = self.config;
        (0..cfg.users())
            .map(|user| {
                let u = user as u64;
                let frame = generate_frame(&self.profile, 1.0, &mut self.rng(&[FRAME_STREAM, trial, u]))?;
                let channel = match cfg.scenario {
                    Scenario::SuSiso => ChannelRealization::scalar(Complex64::new(1.0, 0.0))?,
                    _ => sample_channel(cfg.antennas, cfg.h_variance, &mut self.rng(&[CHANNEL_STREAM, trial, u]))?,
                };
                let mapped = smap(&frame, &self.selection, cfg.antennas, cfg.mapping_strategy)?;
                Ok(UserLink {
                    user_id: user,
                    power: cfg.powers[user],
                    channel,
                    frame,
                    selection: self.selection.clone(),
                    mapped,
                })
            })
            .collect()
    }

    fn link_terms(&self, links: &[UserLink]) -> Result<Vec<LinkTerms>> {
        links
            .iter()
            .map(|l| {
                let cbr = truncation_distortion(l.frame.weights(), &l.frame.energies(), &l.mapped.mask())?;
                LinkTerms::mimo(&l.mapped, l.channel.sigma(), cbr, l.power)
            })
            .collect()
    }

    fn predict(&self, terms: &[LinkTerms], snr_index: usize) -> Result<Vec<SidPrediction>> {
        let nv = self.noise[snr_index].variance();
        if terms.len() == 1 {
            Ok(vec![sid_single(&terms[0], nv)?])
        } else {
            let (a, b) = sid_mu(&terms[0], &terms[1], &self.config.te, nv, self.config.sic_scaling())?;
            Ok(vec![a, b])
        }
    }

    /// Runs every receiver at one SNR point and returns the realized SIDs.
    /// Each weaker receiver subtracts the regenerated signals of all
    /// stronger users before normalizing by `σ_j·√P`.
    fn simulate(&self, links: &[UserLink], trial: u64, snr_index: usize) -> Result<Vec<f64>> {
        let cfg = self.config;
        let noise = &self.noise[snr_index];
        let s = snr_index as u64;
        let x = superpose(links)?;
        let mut regenerated: Vec<ComplexMatrix> = Vec::with_capacity(links.len());
        let mut realized = Vec::with_capacity(links.len());
        for (k, link) in links.iter().enumerate() {
            let cancel: Vec<Cancellation<'_>> = links[..k]
                .iter()
                .zip(&regenerated)
                .map(|(m, s_hat)| Cancellation {
                    power: m.power,
                    precoder: m.channel.v(),
                    regenerated: s_hat,
                })
                .collect();
            let mut rng = self.rng(&[NOISE_STREAM, trial, s, k as u64]);
            let y = cancel_and_receive(link, &x, &cancel, noise, &mut rng)?;
            let norm: Vec<f64> = link
                .channel
                .sigma()
                .iter()
                .map(|sig| 1.0 / (sig * link.power.sqrt()))
                .collect();
            let s_hat = sremap(&y.scale_rows(&norm)?, &link.mapped)?;
            let sid = weighted_error(&link.frame.symbols, &s_hat, link.frame.weights());
            realized.push(sid);
            if k + 1 < links.len() {
                let scale = match cfg.sic_scaling() {
                    SicScaling::Ratio => 1.0,
                    SicScaling::Unit => links[k + 1].power / link.power,
                };
                let mut sic_rng = self.rng(&[SIC_STREAM, trial, s, k as u64]);
                regenerated.push(semantic_sic(link, &link.mapped.weight_grid, sid, &cfg.te, scale, &mut sic_rng)?);
            }
        }
        Ok(realized)
    }

    /// Outcomes of one trial for the requested SNR points, SNR-major.
    fn trial(&self, trial: u64, snr_indices: &[usize], mode: RunMode) -> Result<Vec<Vec<UserOutcome>>> {
        let links = self.build_links(trial).map_err(|e| trial_error(trial, 0, e))?;
        let terms = self.link_terms(&links).map_err(|e| trial_error(trial, 0, e))?;
        snr_indices
            .iter()
            .map(|&si| {
                let wrap = |e| trial_error(trial, si, e);
                let predictions = if mode.analytic() {
                    Some(self.predict(&terms, si).map_err(wrap)?)
                } else {
                    None
                };
                let realized = if mode.empirical() {
                    Some(self.simulate(&links, trial, si).map_err(wrap)?)
                } else {
                    None
                };
                Ok((0..links.len())
                    .map(|u| UserOutcome {
                        realized: realized.as_ref().map(|r| r[u]),
                        prediction: predictions.as_ref().map(|p| p[u]),
                    })
                    .collect())
            })
            .collect()
    }
}

fn trial_error(trial: u64, snr_index: usize, source: Error) -> Error {
    Error::Trial {
        trial,
        snr_index,
        source: Box::new(source),
    }
}

/// `Σ w[i]·|s[i] − ŝ[i]|²`.
pub fn weighted_error(s: &[Complex64], s_hat: &[Complex64], weights: &[f64]) -> f64 {
    s.iter()
        .zip(s_hat)
        .zip(weights)
        .map(|((a, b), w)| w * (a - b).norm_sqr())
        .sum()
}

/// Realized SID of every user for one trial at one SNR point.
pub fn run_trial(config: &ScenarioConfig, snr_index: usize, trial_index: usize) -> Result<Vec<f64>> {
    trial_outcomes(config, snr_index, trial_index, RunMode::Empirical)
        .map(|o| o.into_iter().map(|u| u.realized.unwrap_or(f64::NAN)).collect())
}

/// Realized and/or predicted SID of every user for one trial.
pub fn trial_outcomes(
    config: &ScenarioConfig,
    snr_index: usize,
    trial_index: usize,
    mode: RunMode,
) -> Result<Vec<UserOutcome>> {
    if snr_index >= config.snr_db_grid.len() || trial_index >= config.trials {
        return Err(Error::param(format!(
            "trial {trial_index} / snr index {snr_index} outside {} trials × {} points",
            config.trials,
            config.snr_db_grid.len()
        )));
    }
    let ctx = Context::new(config, mode)?;
    let mut out = ctx.trial(trial_index as u64, &[snr_index], mode)?;
    Ok(out.pop().expect("one snr point"))
}

/// Sweeps the whole grid with outage counted against the configured
/// performance target.
pub fn run_scenario(config: &ScenarioConfig, mode: RunMode) -> Result<EmpiricalStats> {
    run_scenario_with_thresholds(config, mode, &[config.sid_threshold()?])
}

/// Sweeps the whole grid, counting outage against each SID threshold.
pub fn run_scenario_with_thresholds(
    config: &ScenarioConfig,
    mode: RunMode,
    thresholds: &[f64],
) -> Result<EmpiricalStats> {
    let ctx = Context::new(config, mode)?;
    let n_snr = config.snr_db_grid.len();
    let users = config.users();
    let snr_indices: Vec<usize> = (0..n_snr).collect();
    let n_chunks = config.trials.div_ceil(CHUNK_TRIALS);

    let chunks: Vec<Vec<PointAccumulator>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![PointAccumulator::new(thresholds.len()); n_snr * users];
            let end = ((c + 1) * CHUNK_TRIALS).min(config.trials);
            for trial in c * CHUNK_TRIALS..end {
                let outcomes = ctx.trial(trial as u64, &snr_indices, mode)?;
                for (si, per_user) in outcomes.iter().enumerate() {
                    for (u, o) in per_user.iter().enumerate() {
                        acc[si * users + u].push(o, thresholds, &ctx)?;
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let mut total = vec![PointAccumulator::new(thresholds.len()); n_snr * users];
    for chunk in &chunks {
        total.iter_mut().zip(chunk).for_each(|(t, c)| t.merge(c));
    }

    let points = total
        .into_iter()
        .enumerate()
        .map(|(idx, acc)| {
            let (si, user) = (idx / users, idx % users);
            let analytic = mode.analytic().then(|| AnalyticSummary {
                breakdown: SidBreakdown::new(acc.noise.mean, acc.interference.mean, acc.cbr.mean, acc.sic.mean),
                sop: acc.sop.iter().map(|m| m.mean).collect(),
            });
            let empirical = mode.empirical().then(|| EmpiricalSummary {
                mean_sid: acc.realized.mean,
                stderr_sid: acc.realized.stderr(),
                trials: acc.realized.count,
                outage_rate: acc
                    .outages
                    .iter()
                    .map(|&c| c as f64 / acc.realized.count as f64)
                    .collect(),
                outage_count: acc.outages,
            });
            let paired = (mode == RunMode::Both).then(|| PairedSummary {
                mean_diff: acc.paired.mean,
                stderr_diff: acc.paired.stderr(),
            });
            PointStats {
                user,
                snr_index: si,
                snr_db: config.snr_db_grid[si],
                analytic,
                empirical,
                paired,
            }
        })
        .collect();

    Ok(EmpiricalStats {
        thresholds: thresholds.to_vec(),
        users,
        trials: config.trials,
        points,
    })
}

/// One analytic/empirical pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub analytic: f64,
    pub empirical: f64,
    pub abs_gap: f64,
    /// Gap over the analytic value; infinite when the analytic value is 0
    /// and the gap is not.
    pub rel_gap: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub max_gap: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Pairs analytic and empirical values and flags gaps above `tolerance`.
pub fn compare_values(analytic: &[f64], empirical: &[f64], tolerance: f64) -> Result<ComparisonReport> {
    if analytic.len() != empirical.len() {
        return Err(Error::shape(format!(
            "{} analytic values vs {} empirical",
            analytic.len(),
            empirical.len()
        )));
    }
    if !(tolerance >= 0.0) {
        return Err(Error::param(format!("tolerance must be non-negative, got {tolerance}")));
    }
    let rows: Vec<ComparisonRow> = analytic
        .iter()
        .zip(empirical)
        .map(|(&a, &e)| {
            let abs_gap = (a - e).abs();
            let rel_gap = if abs_gap == 0.0 { 0.0 } else { abs_gap / a.abs() };
            ComparisonRow {
                analytic: a,
                empirical: e,
                abs_gap,
                rel_gap,
                within: abs_gap <= tolerance,
            }
        })
        .collect();
    let max_gap = rows.iter().map(|r| r.abs_gap).fold(0.0, f64::max);
    Ok(ComparisonReport {
        passed: rows.iter().all(|r| r.within),
        rows,
        max_gap,
        tolerance,
    })
}

/// Compares closed-form and empirical outage at the first threshold for
/// every grid point; `stats` must come from a [`RunMode::Both`] run.
pub fn compare(stats: &EmpiricalStats, tolerance: f64) -> Result<ComparisonReport> {
    let mut analytic = Vec::with_capacity(stats.points.len());
    let mut empirical = Vec::with_capacity(stats.points.len());
    for p in &stats.points {
        match (&p.analytic, &p.empirical) {
            (Some(a), Some(e)) => {
                analytic.push(a.sop[0]);
                empirical.push(e.outage_rate[0]);
            }
            _ => return Err(Error::param("comparison needs both analytic and empirical results")),
        }
    }
    compare_values(&analytic, &empirical, tolerance)
}
