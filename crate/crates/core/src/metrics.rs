//! Per-state delay and energy, and the per-ACK resource metrics.
//!
//! Every state of the chain carries the time a device spends in it and the
//! charge drawn meanwhile. Combined with the stationary distribution these
//! give the long-run time and energy between successive ACKs, which is the
//! cost of one acknowledged frame with dropped frames amortised over the
//! successful ones.

use serde::{Deserialize, Serialize};

use crate::airtime::{attempt_timing, AttemptTiming, RadioConfig};
use crate::error::{ModelError, Result};
use crate::markov::{
    absorbing_stats, attempt_transitions, contention, state_count, steady_state, timings,
    AttemptTransitions, ChainModel, MacParams, State, StateKind,
};
use crate::scalar::Scalar;

/// Receive delay between the end of an uplink and RS1, in seconds. RS2
/// opens one second later.
pub const RECEIVE_DELAY: f64 = 1.0;

/// Supply voltage and radio currents (SX1272/73, PA boost).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyProfile<T> {
    /// Volts.
    pub voltage: T,
    /// Amperes while transmitting.
    pub current_tx: T,
    pub current_rx: T,
    pub current_idle: T,
    /// Transceiver off. Not used by the default cost model.
    pub current_sleep: T,
}

impl<T: Scalar> Default for EnergyProfile<T> {
    fn default() -> Self {
        Self {
            voltage: T::lit(1.5),
            current_tx: T::lit(0.090),
            current_rx: T::lit(0.0108),
            current_idle: T::lit(1.5e-6),
            current_sleep: T::lit(1e-7),
        }
    }
}

impl<T: Scalar> EnergyProfile<T> {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.voltage,
            self.current_tx,
            self.current_rx,
            self.current_idle,
            self.current_sleep,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > T::zero())) {
            return Err(ModelError::param(
                "profile",
                "voltage and currents must be finite and strictly positive",
            ));
        }
        if !(self.current_tx > self.current_rx
            && self.current_rx > self.current_idle
            && self.current_idle >= self.current_sleep)
        {
            return Err(ModelError::param(
                "profile",
                "currents must satisfy tx > rx > idle >= sleep",
            ));
        }
        Ok(())
    }
}

/// Expected resources per acknowledged frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceMetrics<T> {
    /// Seconds between successive ACKs.
    pub expected_delay_per_ack: T,
    /// Joules between successive ACKs.
    pub expected_energy_per_ack: T,
    pub success_probability: T,
    pub expected_attempts: T,
    /// γ_n used for each attempt.
    pub slot_probabilities: Vec<T>,
}

pub(crate) struct StateCosts<T> {
    pub delay: Vec<T>,
    pub energy: Vec<T>,
}

/// Probability-weighted RS1 payload term: `γ_n y^(2A) α`.
fn chk1_weight<T: Scalar>(params: &MacParams<T>, attempt: usize) -> Result<T> {
    let c = contention(params, attempt)?;
    Ok(params.gamma(attempt) * c.idle * c.idle * params.channel_quality)
}

/// Time spent in the wait state of one attempt.
///
/// The sub-band stays closed for `t_tx (1 - Δ) / Δ` after the uplink ends.
/// Part of that has already elapsed in the receive slots; the remainder is
/// averaged over the three ways into the wait state (after the RS1 payload,
/// after an empty RS2, after a failed RS2 payload), weighted by how much
/// probability flows along each. The ACK-TIMEOUT is a floor.
fn wait_from<T: Scalar>(
    params: &MacParams<T>,
    timing: &AttemptTiming<T>,
    t: &AttemptTransitions<T>,
) -> T {
    let one = T::one();
    let rx_delay = T::lit(RECEIVE_DELAY);
    let d = params.duty_cycle;
    let off_time = timing.tx * (one - d) / d;

    let pre1 = t.recv1_pre1;
    let chk1 = pre1 * t.pre1_chk1;
    let recv2 = t.recv1_recv2 + pre1 * t.pre1_recv2 + chk1 * t.chk1_recv2;
    let chk2 = recv2 * t.recv2_pre2;
    let paths = [
        (chk1 * t.chk1_wait, rx_delay + timing.rs1_ack),
        (recv2 * t.recv2_wait, rx_delay + rx_delay + timing.rs2_preamble),
        (chk2 * t.chk2_wait, rx_delay + rx_delay + timing.rs2_ack),
    ];
    let flow: T = paths.iter().map(|p| p.0).sum();
    let elapsed = if flow > T::zero() {
        paths.iter().map(|(w, e)| *w * *e).sum::<T>() / flow
    } else {
        paths[1].1
    };
    (off_time - elapsed).max(params.ack_timeout_mean)
}

pub(crate) fn state_costs<T: Scalar>(
    params: &MacParams<T>,
    timings: &[AttemptTiming<T>],
    profile: &EnergyProfile<T>,
) -> Result<StateCosts<T>> {
    let n_max = params.max_transmissions;
    let dim = state_count(n_max);
    let mut delay = vec![T::zero(); dim];
    let mut energy = vec![T::zero(); dim];
    let v = profile.voltage;
    let one = T::one();
    let rx_delay = T::lit(RECEIVE_DELAY);

    for (i, tm) in timings.iter().enumerate() {
        let n = i + 1;
        let transitions = attempt_transitions(params, tm, n)?;
        let w = chk1_weight(params, n)?;
        let wait = wait_from(params, tm, &transitions);
        let rs1_rest = tm.rs1_ack - tm.rs1_preamble;
        let rs1_gap = (one - tm.rs1_ack).max(T::zero());
        let rs2_rest = tm.rs2_ack - tm.rs2_preamble;

        let mut put = |kind, d: T, e: T| {
            let idx = State::at(n, kind).index(n_max);
            delay[idx] = d;
            energy[idx] = e;
        };
        put(
            StateKind::Send,
            rx_delay + tm.tx,
            v * (profile.current_tx * tm.tx + profile.current_idle * rx_delay),
        );
        put(StateKind::Recv1, tm.rs1_preamble, v * profile.current_rx * tm.rs1_preamble);
        put(StateKind::Pre1, T::zero(), T::zero());
        put(
            StateKind::Chk1,
            w * (rs1_rest + rs1_gap),
            w * v * (profile.current_rx * rs1_rest + profile.current_idle * rs1_gap),
        );
        put(StateKind::Recv2, tm.rs2_preamble, v * profile.current_rx * tm.rs2_preamble);
        put(StateKind::Pre2, T::zero(), T::zero());
        put(StateKind::Chk2, rs2_rest, v * profile.current_rx * rs2_rest);
        put(StateKind::Wait, wait, v * profile.current_idle * wait);
    }
    Ok(StateCosts { delay, energy })
}

/// Wait-state duration for `attempt`.
pub fn wait_duration<T: Scalar>(params: &MacParams<T>, radio: &RadioConfig, attempt: usize) -> Result<T> {
    params.validate()?;
    let timing = attempt_timing(radio, attempt)?;
    let t = attempt_transitions(params, &timing, attempt)?;
    Ok(wait_from(params, &timing, &t))
}

/// Per-state delay vector, seconds, in canonical state order.
pub fn delay_vector<T: Scalar>(params: &MacParams<T>, radio: &RadioConfig) -> Result<Vec<T>> {
    params.validate()?;
    let t = timings(params, radio)?;
    Ok(state_costs(params, &t, &EnergyProfile::default())?.delay)
}

/// Per-state energy vector, joules, in canonical state order.
pub fn energy_vector<T: Scalar>(
    params: &MacParams<T>,
    radio: &RadioConfig,
    profile: &EnergyProfile<T>,
) -> Result<Vec<T>> {
    params.validate()?;
    profile.validate()?;
    let t = timings(params, radio)?;
    Ok(state_costs(params, &t, profile)?.energy)
}

/// Renewal-reward cost per ACK from a stationary distribution `pi` of
/// `model`, plus the per-frame success statistics.
pub fn expected_resources<T: Scalar>(model: &ChainModel<T>, pi: &[T]) -> Result<ResourceMetrics<T>> {
    if pi.len() != model.dim() {
        return Err(ModelError::param(
            "pi",
            format!("has {} entries, model has {} states", pi.len(), model.dim()),
        ));
    }
    let n_max = model.params().max_transmissions;
    let ack = State::Ack.index(n_max);
    let reachable = (0..model.dim()).any(|i| model.matrix().get(i, ack) > T::zero());
    let pi_ack = pi[ack];
    if !reachable || !(pi_ack > T::zero()) {
        return Err(ModelError::NoSuccess);
    }
    let dot = |w: &[T]| -> T { pi.iter().zip(w).map(|(p, x)| *p * *x).sum() };
    let delay = dot(model.delay()) / pi_ack;
    let energy = dot(model.energy()) / pi_ack;
    if !(delay.is_finite() && energy.is_finite()) {
        return Err(ModelError::Solver(format!(
            "per-ACK cost overflowed (delay {}, energy {})",
            delay.as_f64(),
            energy.as_f64()
        )));
    }
    let frame = absorbing_stats(model)?;
    Ok(ResourceMetrics {
        expected_delay_per_ack: delay,
        expected_energy_per_ack: energy,
        success_probability: frame.success_probability,
        expected_attempts: frame.expected_attempts,
        slot_probabilities: model.params().slot_choice.clone(),
    })
}

/// Builds the chain, solves it and returns the per-ACK metrics.
pub fn evaluate<T: Scalar>(
    params: &MacParams<T>,
    radio: &RadioConfig,
    profile: &EnergyProfile<T>,
) -> Result<ResourceMetrics<T>> {
    let model = ChainModel::build(params, radio, profile)?;
    let pi = steady_state(&model)?;
    expected_resources(&model, &pi)
}

/// Model evaluated with γ_n replaced by measured RS1-selection frequencies,
/// approximating a gateway that mixes both receive slots.
pub fn mixed_slot_estimate<T: Scalar>(
    params: &MacParams<T>,
    radio: &RadioConfig,
    profile: &EnergyProfile<T>,
    slot_probs: &[T],
) -> Result<ResourceMetrics<T>> {
    if slot_probs.len() != params.max_transmissions {
        return Err(ModelError::param(
            "slot_probs",
            format!(
                "has {} entries, expected {}",
                slot_probs.len(),
                params.max_transmissions
            ),
        ));
    }
    let mixed = params.clone().with_slots(slot_probs.to_vec());
    evaluate(&mixed, radio, profile)
}
