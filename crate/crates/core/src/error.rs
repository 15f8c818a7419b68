use thiserror::Error;

/// Errors raised by the analytical model and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// A transition probability left [0, 1]; indicates a formula regression.
    #[error("transition {from} -> {to} has probability {value}, outside [0, 1]")]
    Consistency {
        from: String,
        to: String,
        value: f64,
    },

    #[error("numerical error: {0}")]
    Solver(String),

    /// The chain never reaches the ACK state, so per-ACK costs are unbounded.
    #[error("no acknowledged frames: delay per ACK is unbounded")]
    NoSuccess,
}

impl ModelError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        ModelError::Parameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
