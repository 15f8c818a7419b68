use serde::{Deserialize, Serialize};

use crate::airtime::{RadioConfig, RateSchedule};
use crate::error::{ModelError, Result};
use crate::markov::MacParams;
use crate::metrics::EnergyProfile;

/// Where the gateway puts the ACK for a received uplink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatewayPolicy {
    /// RS1 when the radio is idle and the sub-band duty cycle allows it,
    /// otherwise RS2.
    #[default]
    PreferRs1ElseRs2,
    /// RS1 whenever the radio is idle; no ACK otherwise.
    ForceRs1,
    ForceRs2,
}

impl GatewayPolicy {
    pub fn label(self) -> &'static str {
        match self {
            GatewayPolicy::PreferRs1ElseRs2 => "prefer",
            GatewayPolicy::ForceRs1 => "rs1",
            GatewayPolicy::ForceRs2 => "rs2",
        }
    }
}

/// Simulation budget and gateway behaviour. Combined with a scenario's
/// MAC, radio and energy settings this forms a [`SimConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    /// Simulated seconds per run.
    pub sim_duration: f64,
    pub runs: usize,
    /// Run `r` is seeded with `base_seed + r`.
    pub base_seed: u64,
    pub gateway_policy: GatewayPolicy,
    /// Step the data rate down every two attempts.
    pub dr_stepping: bool,
    /// The RS2 channel carries no gateway duty-cycle limit.
    pub reserved_channel_rdc_free: bool,
    /// Leading fraction of each run excluded from the statistics.
    pub warmup_fraction: f64,
    pub ack_timeout_min: f64,
    pub ack_timeout_max: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            sim_duration: 7200.0,
            runs: 20,
            base_seed: 1,
            gateway_policy: GatewayPolicy::default(),
            dr_stepping: false,
            reserved_channel_rdc_free: true,
            warmup_fraction: 0.1,
            ack_timeout_min: 1.0,
            ack_timeout_max: 3.0,
        }
    }
}

impl SimSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.sim_duration.is_finite() && self.sim_duration > 0.0) {
            return Err(ModelError::param("sim_duration", "must be a positive number of seconds"));
        }
        if self.runs == 0 {
            return Err(ModelError::param("runs", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(ModelError::param("warmup_fraction", "must lie in [0, 1)"));
        }
        if !(self.ack_timeout_min.is_finite()
            && self.ack_timeout_min >= 0.0
            && self.ack_timeout_max >= self.ack_timeout_min
            && self.ack_timeout_max.is_finite())
        {
            return Err(ModelError::param(
                "ack_timeout",
                "need 0 <= ack_timeout_min <= ack_timeout_max",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mac: MacParams<f64>,
    pub radio: RadioConfig,
    pub profile: EnergyProfile<f64>,
    pub settings: SimSettings,
}

impl SimConfig {
    pub fn new(mac: MacParams<f64>, radio: RadioConfig, profile: EnergyProfile<f64>, settings: SimSettings) -> Self {
        Self {
            mac,
            radio,
            profile,
            settings,
        }
    }

    pub fn with_policy(mut self, policy: GatewayPolicy) -> Self {
        self.settings.gateway_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.mac.validate()?;
        self.radio.validate()?;
        self.profile.validate()?;
        self.settings.validate()
    }

    /// Radio settings the simulator actually uses.
    pub(crate) fn effective_radio(&self) -> RadioConfig {
        let mut radio = self.radio.clone();
        if self.settings.dr_stepping {
            radio.rate_schedule = RateSchedule::StepEveryTwo;
        }
        radio
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::new(
            MacParams::default(),
            RadioConfig::default(),
            EnergyProfile::default(),
            SimSettings::default(),
        )
    }
}
