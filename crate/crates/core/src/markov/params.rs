use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::scalar::Scalar;

/// Largest retransmission limit LoRaWAN allows (first transmission included).
pub const MAX_TRANSMISSIONS: usize = 8;

/// Gateway behaviour towards retransmissions of an already acknowledged frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AckPolicy {
    /// The ACK for a frame counter is sent at most once.
    Case1,
    /// Every received retransmission is acknowledged again.
    #[default]
    Case2,
}

impl AckPolicy {
    pub fn number(self) -> u8 {
        match self {
            AckPolicy::Case1 => 1,
            AckPolicy::Case2 => 2,
        }
    }
}

/// Which devices contend with the sender in the idle-channel probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contention {
    /// `y^A`: all A devices, the sender included.
    #[default]
    AllDevices,
    /// `y^(A-1)`: only the other devices.
    OtherDevices,
}

/// MAC-level inputs of the chain model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacParams<T> {
    /// Total devices in the network, A.
    pub device_count: usize,
    /// Maximum transmissions per frame including the first, N.
    pub max_transmissions: usize,
    /// Regulatory duty cycle of the uplink sub-band, Δ.
    pub duty_cycle: T,
    /// Uplink channels, m_c.
    pub channel_count: usize,
    /// Probability a frame survives channel impairments, α.
    pub channel_quality: T,
    /// γ_n per attempt: probability the gateway acknowledges in RS1.
    pub slot_choice: Vec<T>,
    pub ack_policy: AckPolicy,
    /// Saturated devices only; must be 1.
    pub traffic_intensity: T,
    /// Mean ACK-TIMEOUT in seconds.
    pub ack_timeout_mean: T,
    #[serde(default)]
    pub contention: Contention,
}

impl<T: Scalar> Default for MacParams<T> {
    fn default() -> Self {
        Self::new(40, 8, T::lit(0.01), 7, T::one())
    }
}

impl<T: Scalar> MacParams<T> {
    /// Case 2, RS1 for every attempt, 2 s ACK-TIMEOUT.
    pub fn new(
        device_count: usize,
        max_transmissions: usize,
        duty_cycle: T,
        channel_count: usize,
        channel_quality: T,
    ) -> Self {
        Self {
            device_count,
            max_transmissions,
            duty_cycle,
            channel_count,
            channel_quality,
            slot_choice: vec![T::one(); max_transmissions],
            ack_policy: AckPolicy::Case2,
            traffic_intensity: T::one(),
            ack_timeout_mean: T::lit(2.0),
            contention: Contention::AllDevices,
        }
    }

    pub fn with_policy(mut self, policy: AckPolicy) -> Self {
        self.ack_policy = policy;
        self
    }

    /// Same γ for every attempt.
    pub fn with_uniform_slot(mut self, gamma: T) -> Self {
        self.slot_choice = vec![gamma; self.max_transmissions];
        self
    }

    pub fn with_slots(mut self, slots: Vec<T>) -> Self {
        self.slot_choice = slots;
        self
    }

    /// Changes N, resizing γ by repeating its last entry.
    pub fn with_max_transmissions(mut self, n: usize) -> Self {
        let fill = self.slot_choice.last().copied().unwrap_or(T::one());
        self.slot_choice.resize(n, fill);
        self.max_transmissions = n;
        self
    }

    pub fn gamma(&self, attempt: usize) -> T {
        self.slot_choice[attempt - 1]
    }

    /// Number of devices whose transmissions count against the sender.
    pub fn contenders(&self) -> usize {
        match self.contention {
            Contention::AllDevices => self.device_count,
            Contention::OtherDevices => self.device_count - 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.device_count < 1 {
            return Err(ModelError::param("device_count", "at least one device is required"));
        }
        if !(1..=MAX_TRANSMISSIONS).contains(&self.max_transmissions) {
            return Err(ModelError::param(
                "max_transmissions",
                format!("{} is outside 1..={MAX_TRANSMISSIONS}", self.max_transmissions),
            ));
        }
        let d = self.duty_cycle;
        if !(d > T::zero() && d <= T::one()) {
            return Err(ModelError::param(
                "duty_cycle",
                format!("{d} is outside (0, 1]"),
            ));
        }
        if self.channel_count < 1 {
            return Err(ModelError::param("channel_count", "at least one channel is required"));
        }
        if self.max_transmissions >= 2 && self.channel_count < 2 {
            return Err(ModelError::param(
                "channel_count",
                "retransmissions must avoid the previous channel, so N >= 2 needs at least 2 channels (y' = 1 - Δ/(m_c - 1))",
            ));
        }
        let a = self.channel_quality;
        if !(a >= T::zero() && a <= T::one()) {
            return Err(ModelError::param(
                "channel_quality",
                format!("{a} is outside [0, 1]"),
            ));
        }
        if self.slot_choice.len() != self.max_transmissions {
            return Err(ModelError::param(
                "slot_choice",
                format!(
                    "has {} entries, expected one per attempt ({})",
                    self.slot_choice.len(),
                    self.max_transmissions
                ),
            ));
        }
        if let Some(g) = self
            .slot_choice
            .iter()
            .find(|g| !(**g >= T::zero() && **g <= T::one()))
        {
            return Err(ModelError::param("slot_choice", format!("{g} is outside [0, 1]")));
        }
        if self.traffic_intensity != T::one() {
            return Err(ModelError::param(
                "traffic_intensity",
                "only saturated devices (t_I = 1) are modelled",
            ));
        }
        let t = self.ack_timeout_mean;
        if !(t >= T::zero() && t.is_finite()) {
            return Err(ModelError::param(
                "ack_timeout_mean",
                format!("{t} must be a finite non-negative duration"),
            ));
        }
        Ok(())
    }
}
