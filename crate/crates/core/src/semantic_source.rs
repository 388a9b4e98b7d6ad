//! Synthetic semantic source: importance profiles, unit-power symbol
//! frames and CBR-driven symbol selection.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// Default shape parameter for the exponential profile.
pub const DEFAULT_EXPONENTIAL_SHAPE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Exponential,
    Zipf,
    Uniform,
    Empirical,
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileKind::Exponential => "exponential",
            ProfileKind::Zipf => "zipf",
            ProfileKind::Uniform => "uniform",
            ProfileKind::Empirical => "empirical",
        })
    }
}

impl FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" => Ok(ProfileKind::Exponential),
            "zipf" => Ok(ProfileKind::Zipf),
            "uniform" => Ok(ProfileKind::Uniform),
            "empirical" => Ok(ProfileKind::Empirical),
            other => Err(Error::param(format!("unknown profile kind '{other}'"))),
        }
    }
}

/// Normalized importance weights, sorted descending and summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceProfile {
    kind: ProfileKind,
    weights: Vec<f64>,
}

impl ImportanceProfile {
    /// Normalizes and sorts arbitrary positive weights.
    pub fn from_weights(kind: ProfileKind, mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::param("profile needs at least one weight"));
        }
        if let Some(bad) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::param(format!("weights must be positive and finite, got {bad}")));
        }
        weights.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { kind, weights })
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Builds a parametric profile: `exp(−shape·(i−1)/n)`, `i^(−shape)` or flat.
pub fn make_profile(kind: ProfileKind, n: usize, shape: f64) -> Result<ImportanceProfile> {
    if n == 0 {
        return Err(Error::param("profile length must be positive"));
    }
    let needs_shape = matches!(kind, ProfileKind::Exponential | ProfileKind::Zipf);
    if needs_shape && (!(shape > 0.0) || !shape.is_finite()) {
        return Err(Error::param(format!("{kind} profile needs a positive shape, got {shape}")));
    }
    let weights = match kind {
        ProfileKind::Exponential => (0..n)
            .map(|i| (-shape * i as f64 / n as f64).exp())
            .collect(),
        ProfileKind::Zipf => (1..=n).map(|i| (i as f64).powf(-shape)).collect(),
        ProfileKind::Uniform => vec![1.0; n],
        ProfileKind::Empirical => {
            return Err(Error::param("empirical profiles are loaded from a file"))
        }
    };
    ImportanceProfile::from_weights(kind, weights)
}

/// Reads an empirical profile: one weight per line, `#` starts a comment,
/// blank lines are skipped.
pub fn load_profile(path: impl AsRef<Path>) -> Result<ImportanceProfile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_profile(&text, path)
}

pub fn parse_profile(text: &str, path: &Path) -> Result<ImportanceProfile> {
    let format_err = |line: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut weights = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let w: f64 = line
            .parse()
            .map_err(|_| format_err(idx + 1, format!("'{line}' is not a number")))?;
        if !w.is_finite() || w < 0.0 {
            return Err(format_err(idx + 1, format!("weight must be non-negative, got {line}")));
        }
        if w == 0.0 {
            return Err(format_err(idx + 1, "zero weight: every symbol needs positive importance".into()));
        }
        weights.push(w);
    }
    if weights.is_empty() {
        return Err(format_err(0, "no weights found".into()));
    }
    ImportanceProfile::from_weights(ProfileKind::Empirical, weights)
}

/// Writes a profile in the format accepted by [`load_profile`].
pub fn write_profile(profile: &ImportanceProfile, path: impl AsRef<Path>) -> Result<()> {
    let mut out = format!("# kind={} n={}\n", profile.kind(), profile.len());
    for w in profile.weights() {
        out.push_str(&format!("{w}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// One frame of semantic symbols with their shared importance profile.
#[derive(Debug, Clone)]
pub struct SemanticFrame {
    pub symbols: Vec<Complex64>,
    pub profile: Arc<ImportanceProfile>,
    pub power: f64,
}

impl SemanticFrame {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        self.profile.weights()
    }

    /// `|s[i]|²` for every symbol.
    pub fn energies(&self) -> Vec<f64> {
        self.symbols.iter().map(|s| s.norm_sqr()).collect()
    }

    /// The symbol vector after the CBR mask: dropped entries set to zero.
    pub fn masked(&self, selection: &TransmissionSelection) -> Vec<Complex64> {
        self.symbols
            .iter()
            .zip(&selection.mask)
            .map(|(&s, &keep)| if keep { s } else { Complex64::new(0.0, 0.0) })
            .collect()
    }
}

/// Draws i.i.d. CN(0, power) symbols for every profile entry.
pub fn generate_frame(
    profile: &Arc<ImportanceProfile>,
    power: f64,
    rng: &mut RngStream,
) -> Result<SemanticFrame> {
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::param(format!("frame power must be positive, got {power}")));
    }
    Ok(SemanticFrame {
        symbols: rng.complex_normal_vec(profile.len(), power),
        profile: Arc::clone(profile),
        power,
    })
}

/// Which symbols survive the CBR constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionSelection {
    pub k: usize,
    pub mask: Vec<bool>,
    /// Kept indices in descending-weight order.
    pub kept_indices: Vec<usize>,
    pub source_dim: usize,
    pub cbr: f64,
}

impl TransmissionSelection {
    pub fn n(&self) -> usize {
        self.mask.len()
    }

    pub fn dropped_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &m)| !m).map(|(i, _)| i)
    }

    /// Keeps only the first `k` kept indices (the highest weights).
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k {
            return Err(Error::param(format!("cannot truncate {} kept symbols to {k}", self.k)));
        }
        let kept_indices = self.kept_indices[..k].to_vec();
        let mut mask = vec![false; self.n()];
        kept_indices.iter().for_each(|&i| mask[i] = true);
        Ok(Self {
            k,
            mask,
            kept_indices,
            source_dim: self.source_dim,
            cbr: k as f64 / self.source_dim as f64,
        })
    }
}

/// Indices sorted by descending weight, lower index first on ties.
pub fn importance_order(weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    order
}

/// Number of symbols a CBR target allows: `floor(cbr·source_dim)` clamped
/// to `[1, n]`. A relative slack of 1e-12 absorbs the rounding of ratios
/// such as 1/24 that are exact in decimal but not in binary.
pub fn symbols_for_cbr(cbr_target: f64, source_dim: usize, n: usize) -> Result<usize> {
    if !(cbr_target > 0.0) || !cbr_target.is_finite() {
        return Err(Error::param(format!("cbr must be positive, got {cbr_target}")));
    }
    if source_dim == 0 {
        return Err(Error::param("source dimension must be positive"));
    }
    let raw = cbr_target * source_dim as f64;
    let k = (raw * (1.0 + 1e-12)).floor() as usize;
    if k == 0 {
        return Err(Error::param(format!(
            "cbr {cbr_target} with source dimension {source_dim} keeps no symbols"
        )));
    }
    Ok(k.min(n))
}

/// Keeps the `k` most important symbols of the profile.
pub fn select_by_cbr(
    profile: &ImportanceProfile,
    cbr_target: f64,
    source_dim: usize,
) -> Result<TransmissionSelection> {
    let n = profile.len();
    let k = symbols_for_cbr(cbr_target, source_dim, n)?;
    let kept_indices: Vec<usize> = importance_order(profile.weights())[..k].to_vec();
    let mut mask = vec![false; n];
    kept_indices.iter().for_each(|&i| mask[i] = true);
    Ok(TransmissionSelection {
        k,
        mask,
        kept_indices,
        source_dim,
        cbr: k as f64 / source_dim as f64,
    })
}
