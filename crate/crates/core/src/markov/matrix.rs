//! Transition probabilities of the confirmed-uplink chain.
//!
//! For attempt `n` the device walks send → RS1 (preamble detection,
//! preamble check, payload check) → RS2 (same three states) → wait, leaving
//! for the ACK state whenever an acknowledgement is decoded. The first
//! attempt draws its channel from all `m_c` channels; retransmissions avoid
//! the previous channel, so they use `m_c - 1` in the access probability.
//!
//! Under Case 1 the gateway acknowledges a frame counter only once, so every
//! gateway ACK-transmission factor at attempt `n >= 2` is scaled by the
//! probability that no ACK went out during the previous `n - 1` attempts.

use crate::airtime::{attempt_timing, AttemptTiming, RadioConfig};
use crate::error::{ModelError, Result};
use crate::linalg::DenseMatrix;
use crate::markov::params::{AckPolicy, MacParams};
use crate::markov::state::{state_count, State, StateKind};
use crate::scalar::Scalar;

/// Per-channel transmit / idle probabilities `(x, y)` of one device.
///
/// First attempt: `x = Δ/m_c`; retransmissions: `x' = Δ/(m_c - 1)`.
pub fn channel_access_probs<T: Scalar>(params: &MacParams<T>, attempt: usize) -> Result<(T, T)> {
    check_attempt(params, attempt)?;
    let channels = if attempt == 1 {
        params.channel_count
    } else {
        if params.channel_count < 2 {
            return Err(ModelError::param(
                "channel_count",
                "a retransmission needs a channel other than the previous one (m_c >= 2)",
            ));
        }
        params.channel_count - 1
    };
    let x = params.duty_cycle / T::from_count(channels);
    Ok((x, T::one() - x))
}

fn check_attempt<T: Scalar>(params: &MacParams<T>, attempt: usize) -> Result<()> {
    if (1..=params.max_transmissions).contains(&attempt) {
        Ok(())
    } else {
        Err(ModelError::param(
            "attempt",
            format!("{attempt} is outside 1..={}", params.max_transmissions),
        ))
    }
}

/// Channel-contention quantities for one attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contention<T> {
    /// Per-device transmit probability on the channel.
    pub x: T,
    /// Probability no contending device transmits, `y^k`.
    pub idle: T,
    /// `1 - y^k`, computed without cancellation.
    pub busy: T,
    /// Exactly one contender transmits: `k x y^(k-1)`.
    pub single: T,
}

pub fn contention<T: Scalar>(params: &MacParams<T>, attempt: usize) -> Result<Contention<T>> {
    let (x, _) = channel_access_probs(params, attempt)?;
    let k = params.contenders();
    if k == 0 {
        return Ok(Contention {
            x,
            idle: T::one(),
            busy: T::zero(),
            single: T::zero(),
        });
    }
    let kf = T::from_count(k);
    let log_y = (-x).ln_1p();
    let idle = (kf * log_y).exp();
    let busy = -(kf * log_y).exp_m1();
    let single = kf * x * ((kf - T::one()) * log_y).exp();
    Ok(Contention { x, idle, busy, single })
}

/// Case-1 probability that the gateway has not yet acknowledged the frame
/// before attempt `attempt`:
/// `[1 - α y'^A (γ_n y'^A + 1 - γ_n)]^(n-1)`.
///
/// Evaluated regardless of the configured policy; the matrix builder applies
/// it only under Case 1.
pub fn ack_history_factor<T: Scalar>(params: &MacParams<T>, attempt: usize) -> Result<T> {
    check_attempt(params, attempt)?;
    if attempt == 1 {
        return Ok(T::one());
    }
    let c = contention(params, 2)?;
    let alpha = params.channel_quality;
    let gamma = params.gamma(attempt);
    let sent = alpha * c.idle * (gamma * c.idle + T::one() - gamma);
    Ok((T::one() - sent).powi(attempt as i32 - 1))
}

/// Non-zero outgoing probabilities of the eight states of one attempt.
/// `pre2 → chk2` is always 1 and the wait state's exit is structural.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttemptTransitions<T> {
    pub recv1_recv2: T,
    pub recv1_pre1: T,
    pub pre1_chk1: T,
    pub pre1_recv2: T,
    pub chk1_ack: T,
    pub chk1_recv2: T,
    pub chk1_wait: T,
    pub recv2_pre2: T,
    pub recv2_wait: T,
    pub chk2_ack: T,
    pub chk2_wait: T,
}

fn checked<T: Scalar>(value: T, from: StateKind, to: &str, attempt: usize) -> Result<T> {
    let tol = T::prob_tolerance();
    if value.is_nan() || value < -tol || value > T::one() + tol {
        return Err(ModelError::Consistency {
            from: State::at(attempt, from).to_string(),
            to: to.to_string(),
            value: value.as_f64(),
        });
    }
    Ok(value.max(T::zero()).min(T::one()))
}

/// Transition probabilities for attempt `attempt` given its timings.
pub fn attempt_transitions<T: Scalar>(
    params: &MacParams<T>,
    timing: &AttemptTiming<T>,
    attempt: usize,
) -> Result<AttemptTransitions<T>> {
    let c = contention(params, attempt)?;
    let alpha = params.channel_quality;
    let gamma = params.gamma(attempt);
    let history = match params.ack_policy {
        AckPolicy::Case1 => ack_history_factor(params, attempt)?,
        AckPolicy::Case2 => T::one(),
    };
    let beta = if timing.rs1_ack_fits() { T::one() } else { T::zero() };
    let one = T::one();

    // gateway ACK in RS1 / RS2 for this uplink
    let rs1_ack = alpha * gamma * c.idle * history;
    let rs1_sent = alpha * gamma * history;
    let no_rs1_ack = (one - rs1_sent) + rs1_sent * c.busy;
    let rs2_ack = alpha * (one - gamma) * c.idle * history;

    let recv1_recv2 = checked(no_rs1_ack * c.idle, StateKind::Recv1, "recv2", attempt)?;
    let recv1_pre1 = checked(c.busy + rs1_ack * c.idle, StateKind::Recv1, "pre1", attempt)?;
    let pre1_chk1 = if recv1_pre1 > T::zero() {
        let only_one = rs1_ack * c.idle + no_rs1_ack * c.single;
        checked(only_one / recv1_pre1, StateKind::Pre1, "chk1", attempt)?
    } else {
        // unreachable state; take the vanishing-load limit
        one
    };
    let chk1_ack = checked(rs1_ack * alpha * c.idle, StateKind::Chk1, "ack", attempt)?;
    let chk1_recv2 = checked(
        beta * rs1_ack * (one - alpha) * c.idle,
        StateKind::Chk1,
        "recv2",
        attempt,
    )?;
    // Complements are written as (1 - c) + c (1 - y^k ...) so they stay
    // accurate when the channel is almost always idle.
    let decoded = rs1_sent * (alpha + beta * (one - alpha));
    let chk1_wait = checked(
        (one - decoded) + decoded * c.busy * (one + c.idle),
        StateKind::Chk1,
        "wait",
        attempt,
    )?;
    let pre1_recv2 = if recv1_pre1 > T::zero() {
        let collided = (c.busy - no_rs1_ack * c.single).max(T::zero());
        checked(collided / recv1_pre1, StateKind::Pre1, "recv2", attempt)?
    } else {
        T::zero()
    };
    let recv2_pre2 = checked(rs2_ack, StateKind::Recv2, "pre2", attempt)?;
    let rs2_sent = alpha * (one - gamma) * history;
    let recv2_wait = (one - rs2_sent) + rs2_sent * c.busy;

    Ok(AttemptTransitions {
        recv1_recv2,
        recv1_pre1,
        pre1_chk1,
        pre1_recv2,
        chk1_ack,
        chk1_recv2,
        chk1_wait,
        recv2_pre2,
        recv2_wait,
        chk2_ack: alpha,
        chk2_wait: one - alpha,
    })
}

/// Timings for attempts `1..=N`.
pub fn timings<T: Scalar>(params: &MacParams<T>, radio: &RadioConfig) -> Result<Vec<AttemptTiming<T>>> {
    (1..=params.max_transmissions)
        .map(|n| attempt_timing(radio, n))
        .collect()
}

/// The `(8N + 1)`-square row-stochastic transition matrix.
pub fn build_transition_matrix<T: Scalar>(
    params: &MacParams<T>,
    radio: &RadioConfig,
) -> Result<DenseMatrix<T>> {
    params.validate()?;
    radio.validate()?;
    let timings = timings(params, radio)?;
    assemble(params, &timings)
}

pub(crate) fn assemble<T: Scalar>(
    params: &MacParams<T>,
    timings: &[AttemptTiming<T>],
) -> Result<DenseMatrix<T>> {
    use StateKind::*;
    let n_max = params.max_transmissions;
    let mut p = DenseMatrix::zeros(state_count(n_max));
    let ack = State::Ack.index(n_max);
    for (i, timing) in timings.iter().enumerate() {
        let n = i + 1;
        let t = attempt_transitions(params, timing, n)?;
        let idx = |kind| State::at(n, kind).index(n_max);
        let mut put = |from, to: usize, v: T| p.set(idx(from), to, p.get(idx(from), to) + v);

        put(Send, idx(Recv1), T::one());
        put(Recv1, idx(Recv2), t.recv1_recv2);
        put(Recv1, idx(Pre1), t.recv1_pre1);
        put(Pre1, idx(Chk1), t.pre1_chk1);
        put(Pre1, idx(Recv2), t.pre1_recv2);
        put(Chk1, ack, t.chk1_ack);
        put(Chk1, idx(Recv2), t.chk1_recv2);
        put(Chk1, idx(Wait), t.chk1_wait);
        put(Recv2, idx(Pre2), t.recv2_pre2);
        put(Recv2, idx(Wait), t.recv2_wait);
        put(Pre2, idx(Chk2), T::one());
        put(Chk2, ack, t.chk2_ack);
        put(Chk2, idx(Wait), t.chk2_wait);
        let next = if n < n_max {
            State::at(n + 1, Send).index(n_max)
        } else {
            State::at(1, Send).index(n_max)
        };
        put(Wait, next, T::one());
    }
    // saturated devices start the next frame immediately
    p.set(ack, State::at(1, Send).index(n_max), T::one());
    Ok(p)
}

/// Largest deviation of a row sum from 1, and whether all entries are in [0, 1].
pub fn stochastic_defect<T: Scalar>(p: &DenseMatrix<T>) -> (T, bool) {
    let mut worst = T::zero();
    let mut in_range = true;
    for row in p.rows() {
        let s: T = row.iter().copied().sum();
        worst = worst.max((s - T::one()).abs());
        in_range &= row.iter().all(|&v| v >= T::zero() && v <= T::one());
    }
    (worst, in_range)
}
