//! Discrete-event simulator of saturated Class A devices sending confirmed
//! uplinks to a single gateway.
//!
//! Collisions are all-or-nothing: any overlap on the same channel and SF
//! destroys every frame involved, RS1 ACKs included. The RS2 channel is
//! reserved and never collides.

mod config;
mod engine;
mod stats;

pub use config::{GatewayPolicy, SimConfig, SimSettings};
pub use engine::{run_once, DeviceCounters, FrameRecord, RunStats, Slot};
pub use stats::{
    estimate_slot_probabilities, frames_csv, run_simulation, summary_json, Estimate, SimStats, SimSummary,
    FRAME_CSV_HEADER,
};
