//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.
//!
//! Run with `cargo test -p lora-ack-cli --test acceptance`.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use lora_ack_model::airtime::preamble_duration;
use lora_ack_model::markov::{stochastic_defect, ContentionModel};
use lora_ack_model::netsim::{
    estimate_slot_probabilities, frames_csv, run_simulation, GatewayPolicy, SimConfig, SimSettings, SimStats,
};
use lora_ack_model::{
    absorbing_stats, build_transition_matrix, evaluate, mixed_slot_estimate, simulate_chain, steady_state,
    AckPolicy, ChainModel, EnergyProfile, MacParams, ModelError, RadioConfig, ResourceMetrics, State,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const BIN: &str = env!("CARGO_BIN_EXE_lora-ack");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn radio() -> RadioConfig {
    RadioConfig::default()
}

fn profile() -> EnergyProfile<f64> {
    EnergyProfile::default()
}

fn metrics(mac: &MacParams<f64>) -> ResourceMetrics<f64> {
    evaluate(mac, &radio(), &profile()).expect("model evaluation")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn random_mac(rng: &mut ChaCha8Rng) -> MacParams<f64> {
    let n = rng.random_range(1..=8);
    let delta = match rng.random_range(0..3) {
        0 => 1.0,
        1 => 0.01,
        _ => rng.random_range(0.01..=1.0),
    };
    let slots = (0..n)
        .map(|_| match rng.random_range(0..3) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random::<f64>(),
        })
        .collect();
    let case = if rng.random::<bool>() {
        AckPolicy::Case1
    } else {
        AckPolicy::Case2
    };
    MacParams::new(
        rng.random_range(1..=300),
        n,
        delta,
        rng.random_range(2..=8),
        rng.random::<f64>(),
    )
    .with_slots(slots)
    .with_policy(case)
}

fn airtime_anchor() -> Outcome {
    let t: f64 = preamble_duration(&radio()).unwrap();
    outcome((t - 0.401408).abs() <= 1e-9, format!("preamble {t:.9} s"))
}

fn row_sums() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut cases = [0usize; 2];
    for _ in 0..1000 {
        let mac = random_mac(&mut rng);
        cases[usize::from(mac.ack_policy == AckPolicy::Case2)] += 1;
        let p = build_transition_matrix(&mac, &radio()).unwrap();
        let (defect, in_range) = stochastic_defect(&p);
        if !in_range {
            return outcome(false, format!("entry outside [0, 1] for {mac:?}"));
        }
        worst = worst.max(defect);
    }
    outcome(
        worst <= 1e-12 && cases.iter().all(|c| *c > 0),
        format!("1000 matrices ({} case 1, {} case 2), worst row defect {worst:.2e}", cases[0], cases[1]),
    )
}

fn degenerate_chains() -> Outcome {
    let r = radio();
    let t_tx = 1.35168;
    let closed = 1.0 + t_tx + 0.401408 + (1.122304 - 0.401408);
    let mut notes = Vec::new();
    let mut pass = true;
    for n in [2, 8] {
        let mac = MacParams::new(1, n, 1e-12, 7, 1.0);
        let m = metrics(&mac);
        let ok = (m.success_probability - 1.0).abs() < 1e-9
            && (m.expected_attempts - 1.0).abs() < 1e-9
            && rel(m.expected_delay_per_ack, closed) <= 1e-6;
        pass &= ok;
        notes.push(format!(
            "N={n}: success {:.12} attempts {:.12} delay {:.9} vs closed form {closed:.9}",
            m.success_probability, m.expected_attempts, m.expected_delay_per_ack
        ));
    }
    // Counting only the other devices removes the sender's own y from the
    // idle probability; the Δ → 0 limit then has no residual wait mass.
    let mut alone = MacParams::new(1, 8, 1e-12, 7, 1.0);
    alone.contention = ContentionModel::OtherDevices;
    let others = metrics(&alone);
    notes.push(format!(
        "(other-devices contention gives {:.9})",
        others.expected_delay_per_ack
    ));

    let lossy = MacParams::new(20, 8, 0.01, 7, 0.0);
    let model = ChainModel::build(&lossy, &r, &profile()).unwrap();
    let success = absorbing_stats(&model).unwrap().success_probability;
    let err = evaluate(&lossy, &r, &profile());
    let no_success = success == 0.0 && matches!(err, Err(ModelError::NoSuccess));
    pass &= no_success;
    notes.push(format!("α=0: success {success}, evaluate -> {:?}", err.err()));
    outcome(pass, notes.join("; "))
}

fn solver_triangle() -> Outcome {
    const FRAMES: usize = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut models = Vec::new();
    while models.len() < 20 {
        let mac = random_mac(&mut rng);
        let m = ChainModel::build(&mac, &radio(), &profile()).unwrap();
        if absorbing_stats(&m).unwrap().success_probability >= 0.1 {
            models.push(m);
        }
    }
    let results: Vec<_> = models
        .par_iter()
        .enumerate()
        .map(|(i, m)| {
            let n_max = m.params().max_transmissions;
            let ack = State::Ack.index(n_max);
            let pi = steady_state(m).unwrap();
            let abs = absorbing_stats(m).unwrap();
            let sample = simulate_chain(m, 400 + i as u64, FRAMES);

            // steady state against the absorbing view: π_j / π_ack = visits_j / P(success)
            let exact_gap = pi
                .iter()
                .zip(&abs.visits)
                .map(|(p, v)| (p / pi[ack] - v / abs.success_probability).abs() * pi[ack] / p.max(1e-300))
                .fold(0.0f64, f64::max);

            let occ = sample.occupancy();
            let se = sample.occupancy_std_error();
            let total = sample.steps as f64;
            let mut beyond = 0;
            let mut compared = 0;
            for j in 0..pi.len() {
                if pi[j] == 0.0 && occ[j] == 0.0 {
                    continue;
                }
                compared += 1;
                // a state never visited carries no spread; one visit is the resolution
                let s = se[j].max(1.0 / total);
                if (occ[j] - pi[j]).abs() > 3.0 * s {
                    beyond += 1;
                }
            }
            let mean_delay = sample.frames.iter().map(|f| f.delay).sum::<f64>() / FRAMES as f64;
            let renewal = pi.iter().zip(m.delay()).map(|(p, d)| p * d).sum::<f64>() / pi[ack];
            let delay_err = rel(mean_delay, abs.expected_delay)
                .max(rel(renewal, abs.expected_delay / abs.success_probability));
            let succ_err = rel(sample.success_rate(), abs.success_probability);
            (exact_gap, beyond, compared, delay_err, succ_err)
        })
        .collect();

    let exact = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let beyond: usize = results.iter().map(|r| r.1).sum();
    let compared: usize = results.iter().map(|r| r.2).sum();
    let delay = results.iter().map(|r| r.3).fold(0.0, f64::max);
    let succ = results.iter().map(|r| r.4).fold(0.0, f64::max);
    outcome(
        exact < 1e-9 && beyond == 0 && delay < 0.01 && succ < 0.01,
        format!(
            "20 models × 10^6 frames: exact solvers agree to {exact:.1e}; {beyond}/{compared} occupancies beyond 3 SE \
             (≈{:.1} expected by chance); worst delay error {:.3}%, success error {:.3}%",
            compared as f64 * 0.0027,
            100.0 * delay,
            100.0 * succ
        ),
    )
}

fn dimension() -> Outcome {
    let p = build_transition_matrix(&MacParams::<f64>::new(40, 8, 0.01, 7, 1.0), &radio()).unwrap();
    outcome(p.dim() == 65, format!("{} states", p.dim()))
}

fn sim_config(a: usize, policy: GatewayPolicy) -> SimConfig {
    let settings = SimSettings {
        sim_duration: 7200.0,
        runs: 20,
        gateway_policy: policy,
        ..SimSettings::default()
    };
    SimConfig::new(MacParams::new(a, 8, 0.01, 7, 1.0), radio(), profile(), settings)
}

fn sim_errors(stats: &SimStats, model: &ResourceMetrics<f64>) -> (f64, f64) {
    let d = stats.summary.delay.as_ref().expect("acknowledged frames");
    let e = stats.summary.energy.as_ref().expect("acknowledged frames");
    (
        d.relative_error(model.expected_delay_per_ack),
        e.relative_error(model.expected_energy_per_ack),
    )
}

fn simulator_vs_model() -> Outcome {
    let counts = [10, 40, 80];
    let mut lines = Vec::new();
    let mut pass = [true; 3];
    for (k, (policy, label)) in [
        (GatewayPolicy::ForceRs1, "(i) rs1"),
        (GatewayPolicy::ForceRs2, "(ii) rs2"),
        (GatewayPolicy::PreferRs1ElseRs2, "(iii) mixed"),
    ]
    .into_iter()
    .enumerate()
    {
        let mut parts = Vec::new();
        for a in counts {
            let cfg = sim_config(a, policy);
            let stats = run_simulation(&cfg).unwrap();
            let model = match policy {
                GatewayPolicy::ForceRs1 => metrics(&cfg.mac.clone().with_uniform_slot(1.0)),
                GatewayPolicy::ForceRs2 => metrics(&cfg.mac.clone().with_uniform_slot(0.0)),
                GatewayPolicy::PreferRs1ElseRs2 => {
                    let slots = estimate_slot_probabilities(&stats).unwrap();
                    mixed_slot_estimate(&cfg.mac, &radio(), &profile(), &slots).unwrap()
                }
            };
            let (de, ee) = sim_errors(&stats, &model);
            pass[k] &= de <= 0.15 && ee <= 0.15;
            parts.push(format!("A={a} delay {:.1}% energy {:.1}%", 100.0 * de, 100.0 * ee));
        }
        lines.push(format!(
            "{label} {}: {}",
            if pass[k] { "ok" } else { "off" },
            parts.join(", ")
        ));
    }
    outcome(pass.iter().all(|p| *p), lines.join("; "))
}

fn devices_trend() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for case in [AckPolicy::Case1, AckPolicy::Case2] {
        let mut curves = Vec::new();
        for g in [1.0, 0.0] {
            let curve: Vec<ResourceMetrics<f64>> = [10, 25, 50, 100, 150, 200]
                .iter()
                .map(|&a| metrics(&MacParams::new(a, 2, 0.01, 3, 0.9).with_policy(case).with_uniform_slot(g)))
                .collect();
            let monotone = curve.windows(2).all(|w| {
                w[1].expected_delay_per_ack >= w[0].expected_delay_per_ack
                    && w[1].expected_energy_per_ack >= w[0].expected_energy_per_ack
            });
            if !monotone {
                notes.push(format!("{case:?} γ={g} not monotone"));
            }
            pass &= monotone;
            curves.push(curve);
        }
        // A = 50, 100, 150, 200
        let above = (2..6).all(|i| {
            curves[0][i].expected_delay_per_ack > curves[1][i].expected_delay_per_ack
                && curves[0][i].expected_energy_per_ack > curves[1][i].expected_energy_per_ack
        });
        if !above {
            notes.push(format!("{case:?} γ=1 not above γ=0"));
        }
        pass &= above;
        notes.push(format!(
            "{case:?} A=200 delay γ=1 {:.3} s, γ=0 {:.3} s",
            curves[0][5].expected_delay_per_ack, curves[1][5].expected_delay_per_ack
        ));
    }
    outcome(pass, notes.join("; "))
}

fn attempts_trend() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for g in [1.0, 0.0] {
        let mut gaps = Vec::new();
        for n in 1..=8 {
            let base = MacParams::new(50, n, 0.01, 3, 0.9).with_uniform_slot(g);
            let c1 = metrics(&base.clone().with_policy(AckPolicy::Case1));
            let c2 = metrics(&base.with_policy(AckPolicy::Case2));
            let gap = c1.expected_delay_per_ack - c2.expected_delay_per_ack;
            let egap = c1.expected_energy_per_ack - c2.expected_energy_per_ack;
            if n == 1 {
                pass &= c1 == c2;
            }
            pass &= gap >= 0.0 && egap >= 0.0;
            gaps.push((gap, egap));
        }
        pass &= gaps[7].0 > gaps[1].0 && gaps[7].1 > gaps[1].1;
        notes.push(format!("γ={g}: delay gap N=2 {:.3} s, N=8 {:.3} s", gaps[1].0, gaps[7].0));
    }
    outcome(pass, notes.join("; "))
}

fn simulator_invariants() -> Outcome {
    let mut cfg = sim_config(60, GatewayPolicy::PreferRs1ElseRs2);
    cfg.settings.runs = 6;
    cfg.mac.channel_quality = 0.8;
    cfg.mac.ack_policy = AckPolicy::Case1;
    let stats = run_simulation(&cfg).unwrap();
    let budget = cfg.mac.duty_cycle * cfg.settings.sim_duration + 1.35168 + 1e-9;
    let mut over_budget = 0;
    let mut reuse = 0;
    let mut extra_acks = 0;
    let mut frames = 0;
    for run in &stats.runs {
        over_budget += run.devices.iter().filter(|c| c.airtime > budget).count();
        for f in &run.frames {
            frames += 1;
            reuse += f.channels.windows(2).filter(|w| w[0] == w[1]).count();
            extra_acks += usize::from(f.acks_sent > 1);
        }
    }
    let csv = frames_csv(&stats);
    let identical = csv == frames_csv(&run_simulation(&cfg).unwrap());
    outcome(
        over_budget == 0 && reuse == 0 && extra_acks == 0 && identical && frames > 0,
        format!(
            "{frames} frames: {over_budget} devices over budget, {reuse} channel reuses, \
             {extra_acks} frames with >1 ACK, CSV byte-identical: {identical}"
        ),
    )
}

fn run_cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN).args(args).output().expect("spawn lora-ack");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn cli_contract() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let golden = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/evaluate_default.json"))
        .unwrap();
    let (code, out) = run_cli(&["evaluate"]);
    let same = code == 0 && out == golden;
    pass &= same;
    notes.push(format!("golden {}", if same { "matches" } else { "differs" }));

    let (code, out) = run_cli(&["sweep", "--param", "A", "--values", "10,50,100"]);
    let mut lines = out.lines();
    let header_ok = lines.next() == Some(lora_ack_cli::commands::SWEEP_HEADER);
    let rows: Vec<&str> = lines.collect();
    let width = lora_ack_cli::commands::SWEEP_HEADER.split(',').count();
    let shape_ok = code == 0 && header_ok && rows.len() == 12 && rows.iter().all(|r| r.split(',').count() == width);
    pass &= shape_ok;
    notes.push(format!("sweep rows {} header {}", rows.len(), header_ok));

    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p.to_string_lossy().into_owned()
    };
    let typo = write("typo.toml", "[mac]\ndevice_cout = 3\n");
    let tiny = write("tiny.toml", "[mac]\nduty_cycle = 1e-310\n");
    let lossy = write("lossy.toml", "[mac]\nchannel_quality = 0.0\n");
    let codes = [
        (run_cli(&["evaluate"]).0, 0),
        (run_cli(&["evaluate", "--scenario", &typo]).0, 2),
        (run_cli(&["evaluate", "--scenario", &tiny]).0, 3),
        (run_cli(&["evaluate", "--scenario", &lossy, "--strict"]).0, 4),
    ];
    let codes_ok = codes.iter().all(|(got, want)| got == want);
    pass &= codes_ok;
    notes.push(format!(
        "exit codes {:?}",
        codes.iter().map(|c| c.0).collect::<Vec<_>>()
    ));
    outcome(pass, notes.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("airtime anchor", airtime_anchor),
        ("row-stochastic matrices", row_sums),
        ("degenerate chains", degenerate_chains),
        ("solver triangle", solver_triangle),
        ("matrix dimension", dimension),
        ("simulator vs model", simulator_vs_model),
        ("delay/energy vs devices", devices_trend),
        ("ack policy vs attempts", attempts_trend),
        ("simulator invariants", simulator_invariants),
        ("cli contract", cli_contract),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "criterion {:>2} {}: {name}: {} ({:.1} s)",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
