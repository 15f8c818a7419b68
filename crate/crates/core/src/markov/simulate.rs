//! Seeded random walk over a chain model, used to cross-check the solvers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::markov::state::{State, StateKind};
use crate::markov::ChainModel;
use crate::scalar::Scalar;

/// Outcome of one simulated frame (first send state to ACK or drop).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSample<T> {
    pub success: bool,
    pub attempts: u32,
    pub steps: u32,
    pub delay: T,
    pub energy: T,
}

/// Empirical statistics of a chain walk.
///
/// Frames are regeneration cycles (every frame starts in the first send
/// state), so state occupancies are ratio estimators over cycles and their
/// standard errors follow from the regenerative method.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSample<T> {
    pub visits: Vec<u64>,
    pub steps: u64,
    pub frames: Vec<FrameSample<T>>,
    visits_sq: Vec<f64>,
    visits_len: Vec<f64>,
    len_sq: f64,
}

pub fn simulate_chain<T: Scalar>(model: &ChainModel<T>, seed: u64, frames: usize) -> ChainSample<T> {
    let p = model.matrix();
    let dim = p.dim();
    let n_max = model.params().max_transmissions;
    let send1 = State::at(1, StateKind::Send).index(n_max);
    let ack = State::Ack.index(n_max);
    let is_send: Vec<bool> = (0..dim)
        .map(|i| matches!(State::from_index(i, n_max), Some(State::At { kind: StateKind::Send, .. })))
        .collect();

    // cumulative probabilities over each row's support
    let rows: Vec<Vec<(usize, f64)>> = p
        .rows()
        .map(|r| {
            let mut acc = 0.0;
            r.iter()
                .enumerate()
                .filter(|(_, v)| **v > T::zero())
                .map(|(j, v)| {
                    acc += v.as_f64();
                    (j, acc)
                })
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ChainSample {
        visits: vec![0; dim],
        steps: 0,
        frames: Vec::with_capacity(frames),
        visits_sq: vec![0.0; dim],
        visits_len: vec![0.0; dim],
        len_sq: 0.0,
    };
    let mut local = vec![0u32; dim];
    let mut touched: Vec<usize> = Vec::with_capacity(64);

    for _ in 0..frames {
        let mut state = send1;
        let mut sample = FrameSample {
            success: false,
            attempts: 0,
            steps: 0,
            delay: T::zero(),
            energy: T::zero(),
        };
        loop {
            if local[state] == 0 {
                touched.push(state);
            }
            local[state] += 1;
            sample.steps += 1;
            sample.delay += model.delay()[state];
            sample.energy += model.energy()[state];
            if is_send[state] {
                sample.attempts += 1;
            }
            let row = &rows[state];
            let u: f64 = rng.random::<f64>() * row.last().map_or(1.0, |l| l.1);
            let next = row.iter().find(|(_, c)| u < *c).unwrap_or(row.last().unwrap()).0;
            if next == send1 {
                sample.success = state == ack;
                break;
            }
            state = next;
        }
        let len = f64::from(sample.steps);
        out.steps += u64::from(sample.steps);
        out.len_sq += len * len;
        for &s in &touched {
            let y = f64::from(local[s]);
            out.visits[s] += u64::from(local[s]);
            out.visits_sq[s] += y * y;
            out.visits_len[s] += y * len;
            local[s] = 0;
        }
        touched.clear();
        out.frames.push(sample);
    }
    out
}

impl<T: Scalar> ChainSample<T> {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Fraction of steps spent in each state.
    pub fn occupancy(&self) -> Vec<f64> {
        let total = self.steps as f64;
        self.visits.iter().map(|v| *v as f64 / total).collect()
    }

    /// Regenerative standard error of each occupancy estimate.
    pub fn occupancy_std_error(&self) -> Vec<f64> {
        let n = self.frames.len() as f64;
        if n < 2.0 {
            return vec![f64::INFINITY; self.visits.len()];
        }
        let total = self.steps as f64;
        let mean_len = total / n;
        self.visits
            .iter()
            .zip(&self.visits_sq)
            .zip(&self.visits_len)
            .map(|((&v, &yy), &yl)| {
                let r = v as f64 / total;
                let s2 = ((yy - 2.0 * r * yl + r * r * self.len_sq) / (n - 1.0)).max(0.0);
                (s2 / n).sqrt() / mean_len
            })
            .collect()
    }

    pub fn successes(&self) -> usize {
        self.frames.iter().filter(|f| f.success).count()
    }

    pub fn success_rate(&self) -> f64 {
        self.successes() as f64 / self.frames.len() as f64
    }

    pub fn success_std_error(&self) -> f64 {
        let p = self.success_rate();
        (p * (1.0 - p) / self.frames.len() as f64).sqrt()
    }

    pub fn mean_attempts(&self) -> f64 {
        self.frames.iter().map(|f| f64::from(f.attempts)).sum::<f64>() / self.frames.len() as f64
    }

    /// Mean accumulated delay per frame, ACK'd or dropped.
    pub fn mean_frame_delay(&self) -> f64 {
        self.frames.iter().map(|f| f.delay.as_f64()).sum::<f64>() / self.frames.len() as f64
    }

    /// Total delay divided by the number of ACKs: mean time between ACK visits.
    pub fn delay_per_success(&self) -> f64 {
        self.frames.iter().map(|f| f.delay.as_f64()).sum::<f64>() / self.successes() as f64
    }

    pub fn energy_per_success(&self) -> f64 {
        self.frames.iter().map(|f| f.energy.as_f64()).sum::<f64>() / self.successes() as f64
    }
}
