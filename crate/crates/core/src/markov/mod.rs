//! Markov chain of a saturated Class A device sending confirmed uplinks.

mod matrix;
mod params;
mod simulate;
mod solve;
mod state;

pub use matrix::{
    ack_history_factor, attempt_transitions, build_transition_matrix, channel_access_probs,
    contention, stochastic_defect, timings, AttemptTransitions, Contention,
};
pub use params::{AckPolicy, Contention as ContentionModel, MacParams, MAX_TRANSMISSIONS};
pub use simulate::{simulate_chain, ChainSample, FrameSample};
pub use solve::{
    absorbing_stats, regenerative_distribution, stationary_cesaro, stationary_distribution, steady_state,
    AbsorbingStats,
};
pub use state::{state_count, State, StateKind};

use crate::airtime::RadioConfig;
use crate::error::{ModelError, Result};
use crate::linalg::DenseMatrix;
use crate::metrics::{self, EnergyProfile};
use crate::scalar::Scalar;

/// Transition matrix together with the per-state delay and energy vectors.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel<T> {
    params: MacParams<T>,
    matrix: DenseMatrix<T>,
    delay: Vec<T>,
    energy: Vec<T>,
}

impl<T: Scalar> ChainModel<T> {
    pub fn build(params: &MacParams<T>, radio: &RadioConfig, profile: &EnergyProfile<T>) -> Result<Self> {
        params.validate()?;
        radio.validate()?;
        profile.validate()?;
        let timings = timings(params, radio)?;
        let matrix = matrix::assemble(params, &timings)?;
        let costs = metrics::state_costs(params, &timings, profile)?;
        Ok(Self {
            params: params.clone(),
            matrix,
            delay: costs.delay,
            energy: costs.energy,
        })
    }

    /// Wraps an externally built chain; the layout must follow [`State`]
    /// indexing for `params.max_transmissions`.
    pub fn from_parts(params: MacParams<T>, matrix: DenseMatrix<T>, delay: Vec<T>, energy: Vec<T>) -> Result<Self> {
        let dim = state_count(params.max_transmissions);
        if matrix.dim() != dim || delay.len() != dim || energy.len() != dim {
            return Err(ModelError::param(
                "matrix",
                format!("expected {dim} states for N = {}", params.max_transmissions),
            ));
        }
        if delay.iter().chain(&energy).any(|v| !(v.is_finite() && *v >= T::zero())) {
            return Err(ModelError::param("delay/energy", "entries must be finite and non-negative"));
        }
        let (defect, in_range) = stochastic_defect(&matrix);
        if !in_range || defect > T::prob_tolerance() {
            return Err(ModelError::param("matrix", "not row-stochastic"));
        }
        Ok(Self {
            params,
            matrix,
            delay,
            energy,
        })
    }

    pub fn params(&self) -> &MacParams<T> {
        &self.params
    }

    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.matrix
    }

    /// Seconds spent per visit of each state.
    pub fn delay(&self) -> &[T] {
        &self.delay
    }

    /// Joules spent per visit of each state.
    pub fn energy(&self) -> &[T] {
        &self.energy
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn probability(&self, from: State, to: State) -> T {
        let n = self.params.max_transmissions;
        self.matrix.get(from.index(n), to.index(n))
    }

    pub fn labels(&self) -> Vec<String> {
        State::all(self.params.max_transmissions)
            .map(|s| s.to_string())
            .collect()
    }
}
