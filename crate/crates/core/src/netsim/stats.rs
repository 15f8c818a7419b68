use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{ModelError, Result};
use crate::netsim::config::SimConfig;
use crate::netsim::engine::{run_once, RunStats, Slot};

/// Column names of the per-frame CSV.
pub const FRAME_CSV_HEADER: &str =
    "run,device,frame_counter,attempts,delay_s,energy_j,dropped,slots_used,channels,acks_sent";

/// Mean over runs with a 95% Student-t half-width (absent for one run).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci95: Option<f64>,
    /// Runs that contributed (those with at least one ACK).
    pub runs: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        let k = samples.len();
        if k == 0 {
            return None;
        }
        let n = k as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let ci95 = (k > 1).then(|| {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let t = StudentsT::new(0.0, 1.0, n - 1.0)
                .map(|d| d.inverse_cdf(0.975))
                .unwrap_or(f64::INFINITY);
            t * (var / n).sqrt()
        });
        Some(Self { mean, ci95, runs: k })
    }

    pub fn relative_error(&self, reference: f64) -> f64 {
        (reference - self.mean).abs() / self.mean.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub runs: usize,
    pub frames: usize,
    pub acked: usize,
    pub dropped: usize,
    pub drop_rate: f64,
    /// Seconds per acknowledged frame.
    pub delay: Option<Estimate>,
    /// Joules per acknowledged frame.
    pub energy: Option<Estimate>,
    pub acks_per_attempt: Vec<u64>,
    pub rs1_acks_per_attempt: Vec<u64>,
    /// Measured RS1 share per attempt; absent where no ACK was sent.
    pub rs1_share: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimStats {
    pub config: SimConfig,
    pub runs: Vec<RunStats>,
    pub summary: SimSummary,
}

/// Runs `settings.runs` independent replications in parallel. Results are
/// ordered by run index, so the output only depends on the configuration.
pub fn run_simulation(config: &SimConfig) -> Result<SimStats> {
    config.validate()?;
    let s = &config.settings;
    let runs = (0..s.runs)
        .into_par_iter()
        .map(|r| run_once(config, r, s.base_seed.wrapping_add(r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&runs, config.mac.max_transmissions);
    Ok(SimStats {
        config: config.clone(),
        runs,
        summary,
    })
}

fn summarize(runs: &[RunStats], n_max: usize) -> SimSummary {
    let frames: usize = runs.iter().map(|r| r.frames.len()).sum();
    let acked: usize = runs.iter().map(RunStats::acked).sum();
    let dropped = frames - acked;
    let delays: Vec<f64> = runs.iter().filter_map(RunStats::delay_per_ack).collect();
    let energies: Vec<f64> = runs.iter().filter_map(RunStats::energy_per_ack).collect();
    let mut acks = vec![0u64; n_max];
    let mut rs1 = vec![0u64; n_max];
    for r in runs {
        for n in 0..n_max {
            acks[n] += r.acks_per_attempt[n];
            rs1[n] += r.rs1_acks_per_attempt[n];
        }
    }
    let rs1_share = acks
        .iter()
        .zip(&rs1)
        .map(|(&a, &s)| (a > 0).then(|| s as f64 / a as f64))
        .collect();
    SimSummary {
        runs: runs.len(),
        frames,
        acked,
        dropped,
        drop_rate: if frames > 0 { dropped as f64 / frames as f64 } else { 0.0 },
        delay: Estimate::from_samples(&delays),
        energy: Estimate::from_samples(&energies),
        acks_per_attempt: acks,
        rs1_acks_per_attempt: rs1,
        rs1_share,
    }
}

/// RS1 selection frequency per attempt, for use as γ_n in the model.
/// Attempts where the gateway never sent an ACK fall back to the
/// configured γ_n.
pub fn estimate_slot_probabilities(stats: &SimStats) -> Result<Vec<f64>> {
    if stats.summary.frames == 0 && stats.summary.acks_per_attempt.iter().all(|&a| a == 0) {
        return Err(ModelError::param("stats", "simulation produced no frames"));
    }
    Ok(stats
        .summary
        .rs1_share
        .iter()
        .enumerate()
        .map(|(i, share)| {
            share.unwrap_or_else(|| {
                let g = stats.config.mac.gamma(i + 1);
                log::warn!("no ACK observed at attempt {}; using configured slot probability {g}", i + 1);
                g
            })
        })
        .collect())
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(";")
}

/// One line per completed frame, runs in order.
pub fn frames_csv(stats: &SimStats) -> String {
    let mut out = String::from(FRAME_CSV_HEADER);
    out.push('\n');
    for f in stats.runs.iter().flat_map(|r| &r.frames) {
        let slots = join(&f.slots, |s| {
            match s {
                None => "-",
                Some(Slot::Rs1) => "1",
                Some(Slot::Rs2) => "2",
            }
            .to_string()
        });
        let channels = join(&f.channels, |c| c.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{:.9e},{:.9e},{},{},{},{}",
            f.run, f.device, f.frame_counter, f.attempts, f.delay_s, f.energy_j, f.dropped, slots, channels, f.acks_sent
        );
    }
    out
}

pub fn summary_json(stats: &SimStats) -> String {
    #[derive(Serialize)]
    struct Report<'a> {
        config: &'a SimConfig,
        summary: &'a SimSummary,
    }
    serde_json::to_string_pretty(&Report {
        config: &stats.config,
        summary: &stats.summary,
    })
    .unwrap_or_default()
}
