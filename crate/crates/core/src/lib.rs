//! Delay and energy model for confirmed LoRaWAN Class A uplinks.
//!
//! The [`markov`] module builds and solves a chain over the retransmission
//! states of one saturated device, [`metrics`] turns its stationary
//! distribution into expected time and energy per acknowledged frame, and
//! [`netsim`] is a discrete-event network simulator used to check the model.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`). The simulator
//! runs in `f64`.

pub mod airtime;
pub mod error;
pub mod linalg;
pub mod markov;
pub mod metrics;
pub mod netsim;
pub mod scalar;
pub mod scenario;

pub use airtime::{attempt_timing, time_on_air, AttemptTiming, RadioConfig, RateSchedule};
pub use error::{ModelError, Result};
pub use linalg::DenseMatrix;
pub use markov::{
    absorbing_stats, build_transition_matrix, simulate_chain, steady_state, AckPolicy, ChainModel,
    MacParams, State, StateKind,
};
pub use metrics::{evaluate, expected_resources, mixed_slot_estimate, EnergyProfile, ResourceMetrics};
pub use scalar::Scalar;
pub use scenario::{Scenario, ScenarioError};

pub type ChainModel64 = ChainModel<f64>;
pub type ChainModel32 = ChainModel<f32>;
pub type MacParams64 = MacParams<f64>;
pub type MacParams32 = MacParams<f32>;
pub type EnergyProfile64 = EnergyProfile<f64>;
pub type ResourceMetrics64 = ResourceMetrics<f64>;
