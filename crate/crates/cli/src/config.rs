//! Run configuration files.
//!
//! A config is TOML with one section per library module. Powers are given in
//! dBm and Bob's noise as an SNR in dB; both are converted to linear units
//! when the scenario is resolved.

use std::path::Path;

use covert_core::adversarial::TrainConfig;
use covert_core::channel::ChannelConfig;
use covert_core::evaluation::{
    db_to_linear, dbm_to_linear, scenario_with_k, EvalConfig, Preset, Scenario, SweepConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Scenario as written in a config: a preset plus optional overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub preset: Preset,
    /// Warden count; preset wardens are reused cyclically.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bob_snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warden_correlation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_window: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bob: Option<ChannelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wardens: Option<Vec<ChannelConfig>>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self::preset(Preset::Urban)
    }
}

impl ScenarioSection {
    pub fn preset(preset: Preset) -> Self {
        Self {
            preset,
            k: None,
            slot_len: None,
            power_dbm: None,
            bob_snr_db: None,
            warden_correlation: None,
            time_window: None,
            bob: None,
            wardens: None,
        }
    }

    /// Linear-unit scenario with every override applied.
    pub fn resolve(&self) -> CliResult<Scenario> {
        let mut sc = match self.preset {
            Preset::Custom => {
                let wardens = self.wardens.clone().ok_or_else(|| {
                    CliError::Validation("scenario.wardens: required for custom scenarios".into())
                })?;
                Scenario {
                    preset: Preset::Custom,
                    wardens,
                    ..Scenario::urban()
                }
            }
            p => Scenario::preset(p)?,
        };
        if let Some(w) = &self.wardens {
            sc.wardens = w.clone();
        }
        if let Some(k) = self.k {
            if k == 0 {
                return Err(CliError::Validation(
                    "K: at least one warden is required".into(),
                ));
            }
            sc = scenario_with_k(&sc, k);
        }
        if let Some(n) = self.slot_len {
            sc.slot_len = n;
        }
        if let Some(b) = &self.bob {
            sc.bob = b.clone();
        }
        if let Some(dbm) = self.power_dbm {
            sc.power = dbm_to_linear(dbm);
        }
        if self.bob.is_none() || self.bob_snr_db.is_some() {
            let snr_db = self.bob_snr_db.unwrap_or(Scenario::DEFAULT_BOB_SNR_DB);
            sc.bob.noise_variance = sc.power / db_to_linear(snr_db);
        }
        if let Some(c) = self.warden_correlation {
            sc.warden_correlation = c;
        }
        if let Some(t) = self.time_window {
            sc.time_window = t;
        }
        sc.validate().map_err(|e| match e {
            covert_core::Error::Config { field, reason } => {
                CliError::Validation(format!("scenario.{field}: {reason}"))
            }
            other => other.into(),
        })?;
        Ok(sc)
    }
}

/// Everything a command needs besides its flags. Missing sections and fields
/// take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub scenario: ScenarioSection,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub sweep: SweepConfig,
    pub baseline: BaselineSection,
}

/// Noise-injection settings for the `baseline` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    /// Fraction of the power budget carrying the message.
    pub alpha: f64,
    /// When set, `alpha` is replaced by the largest mask meeting this BER.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_ber: Option<f64>,
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            target_ber: None,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            scenario: ScenarioSection::preset(Preset::Urban),
            train: TrainConfig::desk(),
            eval: EvalConfig::default(),
            sweep: SweepConfig::default(),
            baseline: BaselineSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {}", e.message())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run configs serialize to TOML")
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let cfg = Self::from_toml(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| CliError::io("cannot write", path, e))
    }

    /// Validates every section; errors name the offending field.
    pub fn validate(&self) -> CliResult<Scenario> {
        let max = i64::MAX as u64;
        if self.seed > max || self.sweep.seeds.iter().any(|&s| s > max) {
            return Err(CliError::Validation(format!("seed: must not exceed {max}")));
        }
        let sc = self.scenario.resolve()?;
        self.train.validate(sc.k())?;
        self.eval.validate()?;
        self.sweep.validate()?;
        if !(self.baseline.alpha > 0.0 && self.baseline.alpha <= 1.0) {
            return Err(CliError::Validation(
                "baseline.alpha: must lie in (0, 1]".into(),
            ));
        }
        if let Some(t) = self.baseline.target_ber {
            if !(0.0..=0.5).contains(&t) {
                return Err(CliError::Validation(
                    "baseline.target_ber: must lie in [0, 0.5]".into(),
                ));
            }
        }
        Ok(sc)
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML. The seed and
    /// worker count are left out since neither changes a run's settings.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut canonical = Self {
            seed: 0,
            ..self.clone()
        };
        canonical.sweep.workers = 1;
        Sha256::digest(canonical.to_toml().as_bytes())
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
