//! Scenario files: one TOML document with `[mac]`, `[radio]`, `[profile]`
//! and `[sim]` sections. Every section and key is optional and defaults to
//! the built-in scenario; unknown keys are rejected.
//!
//! ```toml
//! name = "dense"
//!
//! [mac]
//! device_count = 80
//! max_transmissions = 4
//! slot_choice = [1.0, 1.0, 0.0, 0.0]
//! ack_policy = "case1"
//!
//! [sim]
//! runs = 10
//! gateway_policy = "force_rs2"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::airtime::RadioConfig;
use crate::error::ModelError;
use crate::markov::{AckPolicy, ContentionModel, MacParams};
use crate::metrics::EnergyProfile;
use crate::netsim::{SimConfig, SimSettings};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub mac: MacParams<f64>,
    pub radio: RadioConfig,
    pub profile: EnergyProfile<f64>,
    pub sim: SimSettings,
}

impl Default for Scenario {
    /// SF12 at 125 kHz, 40 devices on 7 channels, 1% duty cycle, N = 8,
    /// lossless channel, RS1 acknowledgements, Case 2.
    fn default() -> Self {
        Self {
            name: "default".into(),
            mac: MacParams::default(),
            radio: RadioConfig::default(),
            profile: EnergyProfile::default(),
            sim: SimSettings::default(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    #[serde(default)]
    mac: MacSection,
    radio: Option<RadioConfig>,
    profile: Option<EnergyProfile<f64>>,
    sim: Option<SimSettings>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MacSection {
    device_count: Option<usize>,
    max_transmissions: Option<usize>,
    duty_cycle: Option<f64>,
    channel_count: Option<usize>,
    channel_quality: Option<f64>,
    slot_choice: Option<Vec<f64>>,
    ack_policy: Option<AckPolicy>,
    traffic_intensity: Option<f64>,
    ack_timeout_mean: Option<f64>,
    contention: Option<ContentionModel>,
}

impl MacSection {
    fn into_params(self) -> MacParams<f64> {
        let d = MacParams::<f64>::default();
        let n = self.max_transmissions.unwrap_or(d.max_transmissions);
        let mut p = MacParams::new(
            self.device_count.unwrap_or(d.device_count),
            n,
            self.duty_cycle.unwrap_or(d.duty_cycle),
            self.channel_count.unwrap_or(d.channel_count),
            self.channel_quality.unwrap_or(d.channel_quality),
        );
        if let Some(s) = self.slot_choice {
            p.slot_choice = s;
        }
        p.ack_policy = self.ack_policy.unwrap_or(d.ack_policy);
        p.traffic_intensity = self.traffic_intensity.unwrap_or(d.traffic_intensity);
        p.ack_timeout_mean = self.ack_timeout_mean.unwrap_or(d.ack_timeout_mean);
        p.contention = self.contention.unwrap_or(d.contention);
        p
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        let scenario = Self {
            name: file.name.unwrap_or_else(|| "default".into()),
            mac: file.mac.into_params(),
            radio: file.radio.unwrap_or_default(),
            profile: file.profile.unwrap_or_default(),
            sim: file.sim.unwrap_or_default(),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ScenarioError::Parse(msg) => ScenarioError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.name.trim().is_empty() {
            return Err(ModelError::param("name", "must not be empty"));
        }
        self.mac.validate()?;
        self.radio.validate()?;
        self.profile.validate()?;
        self.sim.validate()
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig::new(self.mac.clone(), self.radio.clone(), self.profile.clone(), self.sim.clone())
    }
}
