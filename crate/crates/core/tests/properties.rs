use lora_ack_model::airtime::{attempt_timing, time_on_air};
use lora_ack_model::markov::{
    absorbing_stats, build_transition_matrix, stationary_cesaro, steady_state, stochastic_defect, ChainModel,
    State,
};
use lora_ack_model::{AckPolicy, EnergyProfile, MacParams, RadioConfig};
use proptest::prelude::*;

fn mac_strategy() -> impl Strategy<Value = MacParams<f64>> {
    (
        1usize..=500,
        1usize..=8,
        prop_oneof![1e-4f64..=1.0, Just(1.0)],
        2usize..=8,
        0.0f64..=1.0,
        prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0], 8),
        prop_oneof![Just(AckPolicy::Case1), Just(AckPolicy::Case2)],
    )
        .prop_map(|(a, n, d, mc, alpha, g, case)| {
            MacParams::new(a, n, d, mc, alpha)
                .with_slots(g[..n].to_vec())
                .with_policy(case)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rows_are_stochastic(mac in mac_strategy()) {
        let p = build_transition_matrix(&mac, &RadioConfig::default()).unwrap();
        let (defect, in_range) = stochastic_defect(&p);
        prop_assert!(in_range);
        prop_assert!(defect <= 1e-12, "defect {defect}");
        prop_assert_eq!(p.dim(), 8 * mac.max_transmissions + 1);
    }

    #[test]
    fn single_attempt_ignores_ack_policy(a in 1usize..300, d in 1e-4f64..=1.0, mc in 1usize..8, alpha in 0.0f64..=1.0, g in 0.0f64..=1.0) {
        let base = MacParams::new(a, 1, d, mc, alpha).with_uniform_slot(g);
        let radio = RadioConfig::default();
        let c1 = build_transition_matrix(&base.clone().with_policy(AckPolicy::Case1), &radio).unwrap();
        let c2 = build_transition_matrix(&base.with_policy(AckPolicy::Case2), &radio).unwrap();
        prop_assert_eq!(c1, c2);
    }

    #[test]
    fn airtime_grows_with_payload(sf in 7u8..=12, pl in 1u16..=240, step in 1u16..=15) {
        let radio = RadioConfig { spreading_factor: sf, ..RadioConfig::default() };
        let short: f64 = time_on_air(pl, &radio).unwrap();
        let long: f64 = time_on_air(pl + step, &radio).unwrap();
        prop_assert!(long >= short);
        // one extra symbol block every 4·SF payload bits once past the header
        if pl >= 8 && step >= u16::from(sf) {
            prop_assert!(long > short);
        }
    }

    #[test]
    fn doubling_bandwidth_halves_durations(sf in 7u8..=12, pl in 1u16..=200, n in 1usize..=8) {
        let narrow = RadioConfig { spreading_factor: sf, data_payload_bytes: pl, ..RadioConfig::default() };
        let wide = RadioConfig { bandwidth: 2 * narrow.bandwidth, ..narrow.clone() };
        let a = attempt_timing::<f64>(&narrow, n).unwrap();
        let b = attempt_timing::<f64>(&wide, n).unwrap();
        for (x, y) in [(a.tx, b.tx), (a.rs1_preamble, b.rs1_preamble), (a.rs1_ack, b.rs1_ack), (a.rs2_ack, b.rs2_ack)] {
            prop_assert!((x - 2.0 * y).abs() <= 1e-12 * x);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_solve_matches_cesaro(mac in mac_strategy()) {
        let p = build_transition_matrix(&mac, &RadioConfig::default()).unwrap();
        let exact = steady_state(&ChainModel::build(&mac, &RadioConfig::default(), &EnergyProfile::default()).unwrap()).unwrap();
        let approx = stationary_cesaro(&p, 400_000).unwrap();
        for (i, (a, b)) in exact.iter().zip(&approx).enumerate() {
            prop_assert!((a - b).abs() < 2e-4, "state {i}: {a} vs {b}");
        }
    }

    #[test]
    fn renewal_reward_is_delay_over_success(mac in mac_strategy()) {
        let m = ChainModel::build(&mac, &RadioConfig::default(), &EnergyProfile::default()).unwrap();
        let a = absorbing_stats(&m).unwrap();
        prop_assume!(a.success_probability > 1e-6);
        let pi = steady_state(&m).unwrap();
        let ack = State::Ack.index(mac.max_transmissions);
        let renewal: f64 = pi.iter().zip(m.delay()).map(|(p, d)| p * d).sum::<f64>() / pi[ack];
        let ratio = a.expected_delay / a.success_probability;
        prop_assert!((renewal - ratio).abs() <= 1e-6 * ratio, "{renewal} vs {ratio}");
        prop_assert!(a.expected_attempts >= 1.0 - 1e-12 && a.expected_attempts <= mac.max_transmissions as f64 + 1e-9);
    }
}

#[test]
fn success_is_monotone_in_devices_and_attempts() {
    let radio = RadioConfig::default();
    let prof = EnergyProfile::default();
    for case in [AckPolicy::Case1, AckPolicy::Case2] {
        for g in [0.0, 1.0] {
            for n in 1..=8 {
                let mut last = f64::INFINITY;
                for a in [1, 5, 10, 25, 50, 100, 200, 400] {
                    let mac = MacParams::new(a, n, 0.01, 3, 0.9).with_policy(case).with_uniform_slot(g);
                    let s = absorbing_stats(&ChainModel::build(&mac, &radio, &prof).unwrap())
                        .unwrap()
                        .success_probability;
                    assert!(s <= last + 1e-12, "{case:?} γ={g} N={n} A={a}: {s} > {last}");
                    last = s;
                }
            }
            for a in [1, 10, 50, 200] {
                let mut last = 0.0;
                for n in 1..=8 {
                    let mac = MacParams::new(a, n, 0.01, 3, 0.9).with_policy(case).with_uniform_slot(g);
                    let s = absorbing_stats(&ChainModel::build(&mac, &radio, &prof).unwrap())
                        .unwrap()
                        .success_probability;
                    assert!(s >= last - 1e-12, "{case:?} γ={g} A={a} N={n}: {s} < {last}");
                    last = s;
                }
            }
        }
    }
}

#[test]
fn single_precision_tracks_double() {
    let radio = RadioConfig::default();
    let m64 = ChainModel::build(&MacParams::<f64>::new(50, 4, 0.01, 3, 0.9), &radio, &EnergyProfile::default()).unwrap();
    let m32 = ChainModel::build(&MacParams::<f32>::new(50, 4, 0.01, 3, 0.9), &radio, &EnergyProfile::default()).unwrap();
    let r64 = lora_ack_model::expected_resources(&m64, &steady_state(&m64).unwrap()).unwrap();
    let r32 = lora_ack_model::expected_resources(&m32, &steady_state(&m32).unwrap()).unwrap();
    let rel = (f64::from(r32.expected_delay_per_ack) - r64.expected_delay_per_ack).abs() / r64.expected_delay_per_ack;
    assert!(rel < 1e-3, "{rel}");
}

/// RS1 success needs the ACK to be both sent and decoded in RS1, so an
/// interior γ enters that path twice and a mixed estimate is not a blend
/// of the two pure-slot results.
#[test]
fn interior_slot_mix_is_not_interpolated() {
    let radio = RadioConfig::default();
    let prof = EnergyProfile::default();
    let mac = MacParams::new(10, 8, 0.01, 7, 1.0);
    let d = |g: f64| {
        lora_ack_model::evaluate(&mac.clone().with_uniform_slot(g), &radio, &prof)
            .unwrap()
            .expected_delay_per_ack
    };
    let (rs1, rs2, half) = (d(1.0), d(0.0), d(0.5));
    assert!(half > rs1.max(rs2), "{half} vs {rs1}, {rs2}");
}
