//! Scenario configuration, read from JSON.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analytics::{sid_threshold, NoiseConvention, PerfModel};
use crate::channel::NoiseKind;
use crate::error::{Error, Result};
use crate::layer_mapping::MappingStrategy;
use crate::multiuser::{check_power_order, SicScaling, TeModel};
use crate::semantic_source::{
    load_profile, make_profile, symbols_for_cbr, ImportanceProfile, ProfileKind,
    DEFAULT_EXPONENTIAL_SHAPE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SuSiso,
    SuMimo,
    MuSiso,
    MuMimo,
}

impl Scenario {
    pub fn is_multiuser(&self) -> bool {
        matches!(self, Scenario::MuSiso | Scenario::MuMimo)
    }

    pub fn is_siso(&self) -> bool {
        matches!(self, Scenario::SuSiso | Scenario::MuSiso)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::SuSiso => "su_siso",
            Scenario::SuMimo => "su_mimo",
            Scenario::MuSiso => "mu_siso",
            Scenario::MuMimo => "mu_mimo",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "su_siso" => Ok(Scenario::SuSiso),
            "su_mimo" => Ok(Scenario::SuMimo),
            "mu_siso" => Ok(Scenario::MuSiso),
            "mu_mimo" => Ok(Scenario::MuMimo),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

fn unit_powers() -> Vec<f64> {
    vec![1.0]
}

fn default_shape() -> f64 {
    DEFAULT_EXPONENTIAL_SHAPE
}

fn default_target() -> f64 {
    0.9
}

fn default_kind() -> ProfileKind {
    ProfileKind::Exponential
}

/// Everything needed to reproduce one sweep.
///
/// SNR is `Σ powers / σ_n²`, so the noise variance at grid point `γ` dB is
/// `Σ powers · 10^(−γ/10)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(default = "one")]
    pub antennas: usize,
    pub n_symbols: usize,
    #[serde(default = "default_kind")]
    pub profile_kind: ProfileKind,
    #[serde(default = "default_shape")]
    pub profile_shape: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_path: Option<PathBuf>,
    #[serde(default = "unit")]
    pub cbr: f64,
    pub source_dim: usize,
    #[serde(default = "unit_powers")]
    pub powers: Vec<f64>,
    pub snr_db_grid: Vec<f64>,
    #[serde(default = "unit")]
    pub h_variance: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub mapping_strategy: MappingStrategy,
    #[serde(default)]
    pub noise_convention: NoiseConvention,
    /// Overrides the noise actually drawn by the simulator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulated_noise: Option<NoiseKind>,
    #[serde(default)]
    pub te: TeModel,
    #[serde(default)]
    pub perf: PerfModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sic_term_scaling: Option<SicScaling>,
    #[serde(default = "default_target")]
    pub perf_target: f64,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            Error::Config(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        Ok(cfg)
    }

    /// Reads and validates a config file. Relative profile paths resolve
    /// against the config's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let (Some(p), Some(dir)) = (cfg.profile_path.as_mut(), path.parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn users(&self) -> usize {
        self.powers.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.antennas == 0 || self.n_symbols == 0 || self.source_dim == 0 {
            return bad("antennas, n_symbols and source_dim must be positive".into());
        }
        if self.scenario.is_siso() && self.antennas != 1 {
            return bad(format!("{} needs antennas = 1, got {}", self.scenario, self.antennas));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.snr_db_grid.is_empty() || self.snr_db_grid.iter().any(|s| !s.is_finite()) {
            return bad("snr_db_grid must hold at least one finite value".into());
        }
        if !(self.h_variance > 0.0) || !self.h_variance.is_finite() {
            return bad(format!("h_variance must be positive, got {}", self.h_variance));
        }
        match (self.scenario.is_multiuser(), self.powers.len()) {
            (false, 1) => {}
            (false, n) => return bad(format!("{} takes one power, got {n}", self.scenario)),
            (true, n) if n < 2 => return bad(format!("{} needs at least two powers", self.scenario)),
            _ => {}
        }
        check_power_order(&self.powers).map_err(|e| Error::Config(e.to_string()))?;
        let k = symbols_for_cbr(self.cbr, self.source_dim, self.n_symbols)
            .map_err(|e| Error::Config(e.to_string()))?;
        if k < self.antennas {
            return bad(format!("cbr keeps {k} symbols, fewer than {} antennas", self.antennas));
        }
        match (self.profile_kind, &self.profile_path) {
            (ProfileKind::Empirical, None) => return bad("empirical profile needs profile_path".into()),
            (ProfileKind::Empirical, Some(_)) => {}
            (_, Some(_)) => return bad("profile_path is only used with an empirical profile".into()),
            _ => {}
        }
        if self.simulated_noise == Some(NoiseKind::RealScalar) && self.antennas > 1 {
            return bad("real scalar noise requires a single antenna".into());
        }
        self.te.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.perf.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !self.perf_target.is_finite() {
            return bad(format!("perf_target must be finite, got {}", self.perf_target));
        }
        Ok(())
    }

    /// Builds the importance profile; the file of an empirical profile must
    /// hold exactly `n_symbols` weights.
    pub fn profile(&self) -> Result<Arc<ImportanceProfile>> {
        let profile = match (&self.profile_path, self.profile_kind) {
            (Some(path), ProfileKind::Empirical) => load_profile(path)?,
            _ => make_profile(self.profile_kind, self.n_symbols, self.profile_shape)?,
        };
        if profile.len() != self.n_symbols {
            return Err(Error::Config(format!(
                "profile holds {} weights, n_symbols is {}",
                profile.len(),
                self.n_symbols
            )));
        }
        Ok(Arc::new(profile))
    }

    pub fn noise_variance(&self, snr_db: f64) -> f64 {
        self.powers.iter().sum::<f64>() * 10f64.powf(-snr_db / 10.0)
    }

    /// Real samples by default only where the published variance formula
    /// applies: scalar links under the `paper_real` convention.
    pub fn noise_kind(&self) -> NoiseKind {
        self.simulated_noise.unwrap_or(
            if self.antennas == 1 && self.noise_convention == NoiseConvention::PaperReal {
                NoiseKind::RealScalar
            } else {
                NoiseKind::Complex
            },
        )
    }

    pub fn sic_scaling(&self) -> SicScaling {
        self.sic_term_scaling.unwrap_or(match self.scenario {
            Scenario::MuMimo => SicScaling::Ratio,
            _ => SicScaling::Unit,
        })
    }

    pub fn sid_threshold(&self) -> Result<f64> {
        sid_threshold(self.perf_target, &self.perf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "scenario": "su_siso",
        "n_symbols": 64,
        "source_dim": 64,
        "snr_db_grid": [0, 5],
        "trials": 10,
        "seed": 1
    }"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ScenarioConfig::from_json(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.antennas, 1);
        assert_eq!(cfg.powers, vec![1.0]);
        assert_eq!(cfg.te, TeModel::default());
        assert_eq!(cfg.perf, PerfModel::default());
        assert_eq!(cfg.noise_kind(), NoiseKind::Complex);
        assert!((cfg.sid_threshold().unwrap() - 1.272_727_272_7).abs() < 1e-9);
        assert!((cfg.noise_variance(10.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = ScenarioConfig::from_json(MINIMAL).unwrap();
        assert_eq!(ScenarioConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let text = MINIMAL.replace("\"seed\": 1", "\"seed\": 1, \"sede\": 2");
        let err = ScenarioConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("sede") && err.contains("line"), "{err}");
    }

    #[test]
    fn bad_scenario_label() {
        let text = MINIMAL.replace("su_siso", "su_sisx");
        assert!(matches!(ScenarioConfig::from_json(&text), Err(Error::Config(_))));
    }

    #[test]
    fn validation_catches_inconsistencies() {
        let base = ScenarioConfig::from_json(MINIMAL).unwrap();
        let mut c = base.clone();
        c.antennas = 2;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.scenario = Scenario::MuSiso;
        assert!(c.validate().is_err());
        c.powers = vec![0.2, 0.8];
        assert!(c.validate().is_err());
        c.powers = vec![0.8, 0.2];
        c.validate().unwrap();
        assert_eq!(c.sic_scaling(), SicScaling::Unit);
        let mut c = base.clone();
        c.scenario = Scenario::SuMimo;
        c.antennas = 4;
        c.cbr = 3.0 / 64.0;
        assert!(c.validate().is_err());
        c.cbr = 1.0;
        c.validate().unwrap();
        c.simulated_noise = Some(NoiseKind::RealScalar);
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.profile_kind = ProfileKind::Empirical;
        assert!(c.validate().is_err());
        let mut c = base;
        c.trials = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn paper_real_on_scalar_links_draws_real_noise() {
        let mut c = ScenarioConfig::from_json(MINIMAL).unwrap();
        c.noise_convention = NoiseConvention::PaperReal;
        assert_eq!(c.noise_kind(), NoiseKind::RealScalar);
        c.simulated_noise = Some(NoiseKind::Complex);
        assert_eq!(c.noise_kind(), NoiseKind::Complex);
    }
}
