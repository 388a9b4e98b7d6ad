//! Closed-form SID predictors, the SID-to-performance surrogate and the
//! Gaussian (CLT) outage approximation.
//!
//! Every predictor is conditioned on the channel and on the symbol
//! energies that enter the truncation term; the only randomness left is
//! the receiver noise, summarized by [`NoiseMoments`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::inverse_gains;
use crate::error::{Error, Result};
use crate::layer_mapping::MappedFrame;
use crate::multiuser::{SicScaling, TeModel};
use crate::numerics::gaussian_cdf;
use crate::semantic_source::importance_order;

/// SID split by origin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SidBreakdown {
    pub noise_term: f64,
    pub interference_term: f64,
    pub cbr_term: f64,
    pub sic_term: f64,
    pub total: f64,
}

impl SidBreakdown {
    pub fn new(noise_term: f64, interference_term: f64, cbr_term: f64, sic_term: f64) -> Self {
        Self {
            noise_term,
            interference_term,
            cbr_term,
            sic_term,
            total: noise_term + interference_term + cbr_term + sic_term,
        }
    }

    /// Everything except the noise term.
    pub fn deterministic(&self) -> f64 {
        self.interference_term + self.cbr_term + self.sic_term
    }
}

/// The random part of the SID: `σ²·Σ_c a_c·|n_c|²/σ²` with unit-variance
/// noise samples and per-cell weights `a_c`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseMoments {
    pub variance: f64,
    /// `Σ a_c`
    pub weight_sum: f64,
    /// `Σ a_c²`
    pub weight_sq_sum: f64,
}

impl NoiseMoments {
    pub fn mean(&self) -> f64 {
        self.variance * self.weight_sum
    }

    pub fn spread(&self, convention: NoiseConvention) -> f64 {
        convention.variance_factor() * self.variance * self.variance * self.weight_sq_sum
    }
}

/// A predicted breakdown together with the noise moments the outage
/// approximation needs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SidPrediction {
    pub breakdown: SidBreakdown,
    pub noise: NoiseMoments,
}

/// Variance of `|n|²` per unit noise power: 2 for real Gaussian samples
/// (as in the published CLT formula), 1 for circular complex ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseConvention {
    PaperReal,
    #[default]
    ComplexExact,
}

impl NoiseConvention {
    pub fn variance_factor(&self) -> f64 {
        match self {
            NoiseConvention::PaperReal => 2.0,
            NoiseConvention::ComplexExact => 1.0,
        }
    }
}

impl fmt::Display for NoiseConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseConvention::PaperReal => "paper_real",
            NoiseConvention::ComplexExact => "complex_exact",
        })
    }
}

impl FromStr for NoiseConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper_real" => Ok(NoiseConvention::PaperReal),
            "complex_exact" => Ok(NoiseConvention::ComplexExact),
            other => Err(Error::param(format!("unknown noise convention '{other}'"))),
        }
    }
}

/// Linear surrogate `perf = a1·SID + a2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerfModel {
    pub a1: f64,
    pub a2: f64,
}

impl Default for PerfModel {
    fn default() -> Self {
        Self { a1: -0.044, a2: 0.956 }
    }
}

impl PerfModel {
    pub fn new(a1: f64, a2: f64) -> Result<Self> {
        let m = Self { a1, a2 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a1 < 0.0) || !(self.a2 > 0.0 && self.a2 <= 1.0) {
            return Err(Error::param(format!(
                "performance model needs a1 < 0 and 0 < a2 <= 1, got a1={} a2={}",
                self.a1, self.a2
            )));
        }
        Ok(())
    }
}

/// Outage estimate from the Gaussian approximation of the noise term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SopEstimate {
    pub mean: f64,
    pub variance: f64,
    /// Non-random part of the SID.
    pub deterministic: f64,
    pub threshold: f64,
    pub probability: f64,
    pub convention: NoiseConvention,
}

impl SopEstimate {
    /// Room left for the noise term below the threshold.
    pub fn margin(&self) -> f64 {
        self.threshold - self.deterministic
    }
}

/// `Σ_{i not kept} w[i]·|s[i]|²`.
pub fn truncation_distortion(weights: &[f64], energies: &[f64], kept: &[bool]) -> Result<f64> {
    if weights.len() != energies.len() || weights.len() != kept.len() {
        return Err(Error::shape(format!(
            "{} weights, {} energies, {} mask entries",
            weights.len(),
            energies.len(),
            kept.len()
        )));
    }
    Ok(weights
        .iter()
        .zip(energies)
        .zip(kept)
        .filter(|(_, &k)| !k)
        .map(|((w, e), _)| w * e)
        .sum())
}

/// Per-user inputs of the closed forms: the weight of every transmitted
/// cell and its noise amplification `1/g²` (`1/|h|²` or `1/σ_j²`).
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTerms {
    pub cell_weights: Vec<f64>,
    pub noise_gains: Vec<f64>,
    pub cbr_term: f64,
    pub power: f64,
}

impl LinkTerms {
    /// Scalar link with channel power gain `|h|²`.
    pub fn siso(kept_weights: &[f64], gain_sq: f64, cbr_term: f64, power: f64) -> Result<Self> {
        if !(gain_sq > 0.0) || !gain_sq.is_finite() {
            return Err(Error::param(format!("channel gain must be positive, got {gain_sq}")));
        }
        Self::checked(
            kept_weights.to_vec(),
            vec![1.0 / gain_sq; kept_weights.len()],
            cbr_term,
            power,
        )
    }

    /// Layered link: cell `(j, i)` sees noise amplified by `1/σ_j²`.
    pub fn mimo(mapped: &MappedFrame, sigma: &[f64], cbr_term: f64, power: f64) -> Result<Self> {
        if sigma.len() != mapped.antennas() {
            return Err(Error::shape(format!(
                "{} singular values for {} layers",
                sigma.len(),
                mapped.antennas()
            )));
        }
        let inv = inverse_gains(sigma)?;
        let m = mapped.symbols_per_layer();
        let noise_gains = (0..mapped.k()).map(|c| inv[c / m] * inv[c / m]).collect();
        Self::checked(mapped.weight_grid.clone(), noise_gains, cbr_term, power)
    }

    fn checked(cell_weights: Vec<f64>, noise_gains: Vec<f64>, cbr_term: f64, power: f64) -> Result<Self> {
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::param(format!("power must be positive, got {power}")));
        }
        if !(cbr_term >= 0.0) {
            return Err(Error::param(format!("cbr term must be non-negative, got {cbr_term}")));
        }
        Ok(Self {
            cell_weights,
            noise_gains,
            cbr_term,
            power,
        })
    }

    pub fn kept_weight(&self) -> f64 {
        self.cell_weights.iter().sum()
    }

    /// Moments of the noise term after normalizing by `√P·g`.
    pub fn noise_moments(&self, noise_variance: f64) -> NoiseMoments {
        let (sum, sq) = self
            .cell_weights
            .iter()
            .zip(&self.noise_gains)
            .fold((0.0, 0.0), |(s, q), (w, g)| {
                let a = w * g / self.power;
                (s + a, q + a * a)
            });
        NoiseMoments {
            variance: noise_variance,
            weight_sum: sum,
            weight_sq_sum: sq,
        }
    }
}

fn check_noise_variance(noise_variance: f64) -> Result<()> {
    if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
        return Err(Error::param(format!(
            "noise variance must be non-negative, got {noise_variance}"
        )));
    }
    Ok(())
}

/// Single-user SID: noise on the kept cells plus truncation.
pub fn sid_single(link: &LinkTerms, noise_variance: f64) -> Result<SidPrediction> {
    check_noise_variance(noise_variance)?;
    let noise = link.noise_moments(noise_variance);
    Ok(SidPrediction {
        breakdown: SidBreakdown::new(noise.mean(), 0.0, link.cbr_term, 0.0),
        noise,
    })
}

/// Scalar AWGN link keeping the `k` most important of the given symbols.
/// `noise_variance` is the effective per-symbol noise after normalization.
pub fn sid_su_siso(weights: &[f64], energies: &[f64], k: usize, noise_variance: f64) -> Result<SidPrediction> {
    let n = weights.len();
    if k == 0 || k > n {
        return Err(Error::param(format!("k must lie in 1..={n}, got {k}")));
    }
    let mut kept = vec![false; n];
    importance_order(weights)[..k].iter().for_each(|&i| kept[i] = true);
    let cbr = truncation_distortion(weights, energies, &kept)?;
    let kept_weights: Vec<f64> = weights.iter().zip(&kept).filter(|(_, &k)| k).map(|(w, _)| *w).collect();
    sid_single(&LinkTerms::siso(&kept_weights, 1.0, cbr, 1.0)?, noise_variance)
}

/// Layered link after SVD precoding with per-layer gains `sigma`.
pub fn sid_su_mimo(
    mapped: &MappedFrame,
    sigma: &[f64],
    dropped_term: f64,
    noise_variance: f64,
    power: f64,
) -> Result<SidPrediction> {
    sid_single(&LinkTerms::mimo(mapped, sigma, dropped_term, power)?, noise_variance)
}

/// Two-user downlink. The strong user treats the weak one as unit-power
/// interference on each of its cells; the weak user carries the SIC
/// residual `scale·te(SID1)` with `SID1` the strong user's predicted total.
pub fn sid_mu(
    strong: &LinkTerms,
    weak: &LinkTerms,
    te: &TeModel,
    noise_variance: f64,
    sic_scaling: SicScaling,
) -> Result<(SidPrediction, SidPrediction)> {
    check_noise_variance(noise_variance)?;
    if strong.power <= weak.power {
        return Err(Error::param(format!(
            "strong user power {} must exceed weak user power {}",
            strong.power, weak.power
        )));
    }
    let n1 = strong.noise_moments(noise_variance);
    let interference = weak.power / strong.power * strong.kept_weight();
    let user1 = SidBreakdown::new(n1.mean(), interference, strong.cbr_term, 0.0);

    let n2 = weak.noise_moments(noise_variance);
    let sic = sic_scaling.factor(strong.power, weak.power) * te_eval(user1.total, te);
    let user2 = SidBreakdown::new(n2.mean(), 0.0, weak.cbr_term, sic);
    Ok((
        SidPrediction { breakdown: user1, noise: n1 },
        SidPrediction { breakdown: user2, noise: n2 },
    ))
}

/// Two users on scalar channels.
pub fn sid_mu_siso(
    strong: &LinkTerms,
    weak: &LinkTerms,
    te: &TeModel,
    noise_variance: f64,
    sic_scaling: SicScaling,
) -> Result<(SidPrediction, SidPrediction)> {
    sid_mu(strong, weak, te, noise_variance, sic_scaling)
}

/// Two users on layered channels.
pub fn sid_mu_mimo(
    strong: &LinkTerms,
    weak: &LinkTerms,
    te: &TeModel,
    noise_variance: f64,
    sic_scaling: SicScaling,
) -> Result<(SidPrediction, SidPrediction)> {
    sid_mu(strong, weak, te, noise_variance, sic_scaling)
}

pub fn te_eval(sid_in: f64, te: &TeModel) -> f64 {
    te.eval(sid_in)
}

/// `a1·sid + a2` clamped to `[0, 1]`.
pub fn perf_from_sid(sid: f64, model: &PerfModel) -> f64 {
    (model.a1 * sid + model.a2).clamp(0.0, 1.0)
}

/// Largest SID that still meets `perf_target`.
pub fn sid_threshold(perf_target: f64, model: &PerfModel) -> Result<f64> {
    model.validate()?;
    if !perf_target.is_finite() {
        return Err(Error::param(format!("performance target must be finite, got {perf_target}")));
    }
    if perf_target > model.a2 {
        return Err(Error::UnreachableTarget {
            target: perf_target,
            ceiling: model.a2,
        });
    }
    Ok((perf_target - model.a2) / model.a1)
}

/// `P(SID > sid_th)` with the noise term replaced by a Gaussian of matching
/// mean and variance.
pub fn sop_closed_form(
    prediction: &SidPrediction,
    sid_th: f64,
    convention: NoiseConvention,
) -> Result<SopEstimate> {
    sop_from_moments(prediction.breakdown.deterministic(), &prediction.noise, sid_th, convention)
}

pub fn sop_from_moments(
    deterministic: f64,
    noise: &NoiseMoments,
    sid_th: f64,
    convention: NoiseConvention,
) -> Result<SopEstimate> {
    if !sid_th.is_finite() {
        return Err(Error::param(format!("SID threshold must be finite, got {sid_th}")));
    }
    if !(noise.weight_sq_sum > 0.0) {
        return Err(Error::param("outage needs at least one non-zero noise weight"));
    }
    let mean = noise.mean();
    let variance = noise.spread(convention);
    let margin = sid_th - deterministic;
    let probability = if margin <= 0.0 {
        1.0
    } else if variance == 0.0 {
        if mean > margin { 1.0 } else { 0.0 }
    } else {
        1.0 - gaussian_cdf(margin, mean, variance)?
    };
    Ok(SopEstimate {
        mean,
        variance,
        deterministic,
        threshold: sid_th,
        probability,
        convention,
    })
}
