use std::fmt;

/// Per-attempt state kinds, in canonical index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateKind {
    Send,
    Recv1,
    Pre1,
    Chk1,
    Recv2,
    Pre2,
    Chk2,
    Wait,
}

impl StateKind {
    pub const ALL: [StateKind; 8] = [
        StateKind::Send,
        StateKind::Recv1,
        StateKind::Pre1,
        StateKind::Chk1,
        StateKind::Recv2,
        StateKind::Pre2,
        StateKind::Chk2,
        StateKind::Wait,
    ];

    pub fn offset(self) -> usize {
        self as usize
    }

    fn tag(self) -> &'static str {
        match self {
            StateKind::Send => "send",
            StateKind::Recv1 => "recv1",
            StateKind::Pre1 => "pre1",
            StateKind::Chk1 => "chk1",
            StateKind::Recv2 => "recv2",
            StateKind::Pre2 => "pre2",
            StateKind::Chk2 => "chk2",
            StateKind::Wait => "wait",
        }
    }
}

/// A state of the confirmed-uplink chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum State {
    /// `attempt` is 1-based.
    At { attempt: usize, kind: StateKind },
    Ack,
}

/// Dimension of the chain for retransmission limit `n`.
pub fn state_count(max_transmissions: usize) -> usize {
    8 * max_transmissions + 1
}

impl State {
    pub fn at(attempt: usize, kind: StateKind) -> Self {
        State::At { attempt, kind }
    }

    /// Canonical index `8(n-1) + offset`; the ACK state is last.
    pub fn index(self, max_transmissions: usize) -> usize {
        match self {
            State::At { attempt, kind } => {
                debug_assert!((1..=max_transmissions).contains(&attempt));
                8 * (attempt - 1) + kind.offset()
            }
            State::Ack => 8 * max_transmissions,
        }
    }

    pub fn from_index(index: usize, max_transmissions: usize) -> Option<Self> {
        let ack = 8 * max_transmissions;
        match index {
            i if i < ack => Some(State::at(i / 8 + 1, StateKind::ALL[i % 8])),
            i if i == ack => Some(State::Ack),
            _ => None,
        }
    }

    /// All states in index order.
    pub fn all(max_transmissions: usize) -> impl Iterator<Item = State> {
        (0..state_count(max_transmissions)).map(move |i| State::from_index(i, max_transmissions).unwrap())
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            State::At { attempt, kind } => write!(f, "{}_{}", kind.tag(), attempt),
            State::Ack => f.write_str("ack"),
        }
    }
}
