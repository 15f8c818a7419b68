//! Stationary and per-frame (absorbing) analysis of a chain model.

use crate::error::{ModelError, Result};
use crate::linalg::{DenseMatrix, Lu};
use crate::markov::matrix::stochastic_defect;
use crate::markov::state::{State, StateKind};
use crate::markov::ChainModel;
use crate::scalar::Scalar;

fn ensure_stochastic<T: Scalar>(p: &DenseMatrix<T>) -> Result<()> {
    let (defect, in_range) = stochastic_defect(p);
    if !in_range || !(defect <= T::prob_tolerance()) {
        return Err(ModelError::param(
            "matrix",
            format!(
                "not row-stochastic (max row-sum error {:.3e}, entries in [0,1]: {in_range})",
                defect.as_f64()
            ),
        ));
    }
    Ok(())
}

/// Stationary distribution of `model`'s chain.
///
/// Every cycle of the chain passes through the first send state, so the
/// distribution is the normalised visit count of one frame, found by a
/// forward sweep. That avoids the cancellation a dense solve suffers when a
/// tiny duty cycle makes the wait state rare but very long. Falls back to
/// [`stationary_distribution`] for matrices without that shape.
pub fn steady_state<T: Scalar>(model: &ChainModel<T>) -> Result<Vec<T>> {
    let p = model.matrix();
    match regenerative_distribution(p)? {
        Some(pi) => Ok(pi),
        None => stationary_distribution(p),
    }
}

/// Stationary distribution of a chain whose only backward transitions lead
/// to state 0. Returns `None` when `p` has another backward edge.
pub fn regenerative_distribution<T: Scalar>(p: &DenseMatrix<T>) -> Result<Option<Vec<T>>> {
    ensure_stochastic(p)?;
    let n = p.dim();
    for i in 0..n {
        for j in 1..=i {
            if p.get(i, j) != T::zero() {
                return Ok(None);
            }
        }
    }
    let mut visits = vec![T::zero(); n];
    visits[0] = T::one();
    for i in 0..n {
        let v = visits[i];
        if v == T::zero() {
            continue;
        }
        for j in i + 1..n {
            visits[j] += v * p.get(i, j);
        }
    }
    let total: T = visits.iter().copied().sum();
    for v in visits.iter_mut() {
        *v /= total;
    }
    Ok(Some(visits))
}

/// Solves `π P = π`, `Σπ = 1` as a dense linear system: the transposed
/// balance equations with the last one replaced by the normalisation row.
///
/// Requires a single closed communicating class; states outside it get
/// zero mass.
pub fn stationary_distribution<T: Scalar>(p: &DenseMatrix<T>) -> Result<Vec<T>> {
    ensure_stochastic(p)?;
    let n = p.dim();
    let mut a = p.transpose();
    for i in 0..n {
        a.set(i, i, a.get(i, i) - T::one());
    }
    for j in 0..n {
        a.set(n - 1, j, T::one());
    }
    let mut rhs = vec![T::zero(); n];
    rhs[n - 1] = T::one();
    let mut pi = Lu::factor(a)?.solve(&rhs)?;

    let tol = T::epsilon().sqrt();
    if let Some((i, v)) = pi.iter().enumerate().find(|(_, v)| **v < -tol) {
        return Err(ModelError::Solver(format!(
            "stationary solution has negative mass {:.3e} at state {i}; chain may be reducible",
            v.as_f64()
        )));
    }
    for v in pi.iter_mut() {
        *v = v.max(T::zero());
    }
    let total: T = pi.iter().copied().sum();
    for v in pi.iter_mut() {
        *v /= total;
    }
    let image = p.left_mul(&pi);
    let residual = image
        .iter()
        .zip(&pi)
        .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
    if residual > tol {
        return Err(ModelError::Solver(format!(
            "stationary residual |πP - π| = {:.3e} exceeds {:.1e}",
            residual.as_f64(),
            tol.as_f64()
        )));
    }
    Ok(pi)
}

/// Cesàro average of `J0 · P^k` for `k = 1..=iterations`, starting from
/// the first send state. Converges to the stationary distribution even on
/// periodic chains, at rate O(1/iterations).
pub fn stationary_cesaro<T: Scalar>(p: &DenseMatrix<T>, iterations: usize) -> Result<Vec<T>> {
    ensure_stochastic(p)?;
    if iterations == 0 {
        return Err(ModelError::param("iterations", "must be positive"));
    }
    let n = p.dim();
    let sparse: Vec<Vec<(usize, T)>> = p
        .rows()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|(_, v)| **v != T::zero())
                .map(|(j, v)| (j, *v))
                .collect()
        })
        .collect();
    let mut j = vec![T::zero(); n];
    j[0] = T::one();
    let mut next = vec![T::zero(); n];
    let mut acc = vec![0.0f64; n];
    for _ in 0..iterations {
        next.iter_mut().for_each(|v| *v = T::zero());
        for (i, row) in sparse.iter().enumerate() {
            let m = j[i];
            if m == T::zero() {
                continue;
            }
            for &(c, pr) in row {
                next[c] += m * pr;
            }
        }
        std::mem::swap(&mut j, &mut next);
        for (a, v) in acc.iter_mut().zip(&j) {
            *a += v.as_f64();
        }
    }
    Ok(acc
        .into_iter()
        .map(|a| T::lit(a / iterations as f64))
        .collect())
}

/// Per-frame view: from the first send state until the ACK state or the
/// frame is dropped after the last wait state.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingStats<T> {
    pub success_probability: T,
    /// Expected number of transmissions of a frame, in [1, N].
    pub expected_attempts: T,
    /// Expected accumulated state delay until ACK or drop (seconds).
    pub expected_delay: T,
    /// Expected accumulated state energy until ACK or drop (joules).
    pub expected_energy: T,
    /// Expected visits to each transient state (index order, ACK excluded).
    pub visits: Vec<T>,
}

pub fn absorbing_stats<T: Scalar>(model: &ChainModel<T>) -> Result<AbsorbingStats<T>> {
    let p = model.matrix();
    ensure_stochastic(p)?;
    let n_max = model.params().max_transmissions;
    let ack = State::Ack.index(n_max);
    let last_wait = State::at(n_max, StateKind::Wait).index(n_max);
    let send1 = State::at(1, StateKind::Send).index(n_max);
    let transient = ack;

    // (I - Q)^T v = e_send1, with the wait_N -> send_1 renewal cut
    let mut m = DenseMatrix::zeros(transient);
    for i in 0..transient {
        for j in 0..transient {
            let q = if i == last_wait && j == send1 {
                T::zero()
            } else {
                p.get(i, j)
            };
            let id = if i == j { T::one() } else { T::zero() };
            m.set(j, i, id - q);
        }
    }
    let mut rhs = vec![T::zero(); transient];
    rhs[send1] = T::one();
    let visits = Lu::factor(m)?.solve(&rhs)?;

    let success_probability: T = visits
        .iter()
        .enumerate()
        .map(|(i, v)| *v * p.get(i, ack))
        .sum();
    let expected_attempts: T = (1..=n_max)
        .map(|n| visits[State::at(n, StateKind::Send).index(n_max)])
        .sum();
    let dot = |w: &[T]| -> T { visits.iter().zip(w).map(|(v, x)| *v * *x).sum() };
    Ok(AbsorbingStats {
        success_probability: success_probability.min(T::one()).max(T::zero()),
        expected_attempts,
        expected_delay: dot(model.delay()),
        expected_energy: dot(model.energy()),
        visits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airtime::RadioConfig;
    use crate::markov::{AckPolicy, MacParams};
    use crate::metrics::EnergyProfile;

    fn model(p: MacParams<f64>) -> ChainModel<f64> {
        ChainModel::build(&p, &RadioConfig::default(), &EnergyProfile::default()).unwrap()
    }

    #[test]
    fn forward_sweep_matches_dense_solve() {
        for case in [AckPolicy::Case1, AckPolicy::Case2] {
            let m = model(MacParams::new(60, 5, 0.05, 4, 0.8).with_uniform_slot(0.4).with_policy(case));
            let sweep = regenerative_distribution(m.matrix()).unwrap().unwrap();
            let dense = stationary_distribution(m.matrix()).unwrap();
            for (a, b) in sweep.iter().zip(&dense) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn forward_sweep_declines_general_chains() {
        let mut p = DenseMatrix::zeros(3);
        p.set(0, 1, 1.0);
        p.set(1, 2, 1.0);
        p.set(2, 1, 1.0);
        assert!(regenerative_distribution(&p).unwrap().is_none());
    }

    fn idx(n: usize, kind: StateKind) -> usize {
        State::at(n, kind).index(2)
    }

    #[test]
    fn unloaded_chain_is_a_five_cycle() {
        let m = model(MacParams::new(1, 2, 1e-12, 7, 1.0));
        let pi = steady_state(&m).unwrap();
        let cycle = [
            idx(1, StateKind::Send),
            idx(1, StateKind::Recv1),
            idx(1, StateKind::Pre1),
            idx(1, StateKind::Chk1),
            State::Ack.index(2),
        ];
        for (i, v) in pi.iter().enumerate() {
            let expect = if cycle.contains(&i) { 0.2 } else { 0.0 };
            assert!((v - expect).abs() < 1e-9, "state {i}: {v}");
        }
        let a = absorbing_stats(&m).unwrap();
        assert!((a.success_probability - 1.0).abs() < 1e-9);
        assert!((a.expected_attempts - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dead_channel_cycles_through_empty_slots() {
        // α = 0 still leaves Recv1 -> Pre1 open while other devices talk;
        // the deterministic 8-cycle needs the unloaded limit as well.
        let m = model(MacParams::new(10, 2, 1e-12, 3, 0.0));
        let pi = steady_state(&m).unwrap();
        let cycle: Vec<usize> = (1..=2)
            .flat_map(|n| [StateKind::Send, StateKind::Recv1, StateKind::Recv2, StateKind::Wait].map(|k| idx(n, k)))
            .collect();
        for (i, v) in pi.iter().enumerate() {
            let expect = if cycle.contains(&i) { 0.125 } else { 0.0 };
            assert!((v - expect).abs() < 1e-9, "state {i}: {v}");
        }
        assert_eq!(pi[State::Ack.index(2)], 0.0);
        let a = absorbing_stats(&m).unwrap();
        assert_eq!(a.success_probability, 0.0);
        assert!((a.expected_attempts - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cesaro_matches_linear_solve() {
        let m = model(MacParams::new(50, 2, 0.01, 3, 0.9));
        let exact = steady_state(&m).unwrap();
        let approx = stationary_cesaro(m.matrix(), 200_000).unwrap();
        for (a, b) in exact.iter().zip(&approx) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn renewal_reward_equals_absorbing_ratio() {
        let m = model(MacParams::new(50, 4, 0.01, 3, 0.9).with_uniform_slot(0.0));
        let pi = steady_state(&m).unwrap();
        let ack = State::Ack.index(4);
        let renewal: f64 = pi.iter().zip(m.delay()).map(|(p, d)| p * d).sum::<f64>() / pi[ack];
        let a = absorbing_stats(&m).unwrap();
        assert!((renewal - a.expected_delay / a.success_probability).abs() < 1e-8 * renewal);
    }

    #[test]
    fn rejects_non_stochastic() {
        let mut p = DenseMatrix::<f64>::identity(3);
        p.set(0, 1, 0.5);
        assert!(matches!(stationary_distribution(&p), Err(ModelError::Parameter { .. })));
        assert!(stationary_cesaro(&DenseMatrix::<f64>::identity(2), 0).is_err());
    }
}
