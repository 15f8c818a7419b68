use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use lora_ack_model::markov::{absorbing_stats, steady_state, ChainModel};
use lora_ack_model::netsim::{estimate_slot_probabilities, frames_csv, run_simulation, summary_json, Estimate};
use lora_ack_model::{
    expected_resources, mixed_slot_estimate, AckPolicy, EnergyProfile, MacParams64, ModelError, RadioConfig,
    Scenario,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::{num, CliError, Result};

/// Slot-choice vector to evaluate with.
#[derive(Debug, Clone, PartialEq)]
pub enum Gamma {
    /// Whatever the scenario file says.
    Scenario,
    Rs1,
    Rs2,
    /// Per-attempt RS1 probabilities read from a file.
    Mixed(PathBuf),
}

impl FromStr for Gamma {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "scenario" => Ok(Gamma::Scenario),
            "rs1" => Ok(Gamma::Rs1),
            "rs2" => Ok(Gamma::Rs2),
            _ => match s.strip_prefix("mixed:") {
                Some(p) if !p.is_empty() => Ok(Gamma::Mixed(PathBuf::from(p))),
                _ => Err(format!("expected rs1, rs2, scenario or mixed:<path>, got `{s}`")),
            },
        }
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Scenario => f.write_str("scenario"),
            Gamma::Rs1 => f.write_str("rs1"),
            Gamma::Rs2 => f.write_str("rs2"),
            Gamma::Mixed(p) => write!(f, "mixed:{}", p.display()),
        }
    }
}

impl Gamma {
    pub fn apply(&self, mac: &MacParams64) -> Result<MacParams64> {
        let mac = match self {
            Gamma::Scenario => mac.clone(),
            Gamma::Rs1 => mac.clone().with_uniform_slot(1.0),
            Gamma::Rs2 => mac.clone().with_uniform_slot(0.0),
            Gamma::Mixed(path) => mac.clone().with_slots(read_slot_file(path)?),
        };
        mac.validate()?;
        Ok(mac)
    }
}

/// Numbers separated by commas, whitespace or newlines; `#` starts a comment.
pub fn read_slot_file(path: &PathBuf) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read slot probabilities {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let v = tok.parse::<f64>().map_err(|_| {
                CliError::Config(format!("{}:{}: `{tok}` is not a number", path.display(), i + 1))
            })?;
            out.push(v);
        }
    }
    Ok(out)
}

pub fn write_slot_file(probs: &[f64]) -> String {
    let mut s = String::from("# RS1 selection probability per attempt\n");
    for p in probs {
        let _ = writeln!(s, "{}", num(*p));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub case: u8,
    /// `ok`, or `unbounded delay` when no frame is ever acknowledged.
    pub status: &'static str,
    pub expected_delay_per_ack: Option<f64>,
    pub expected_energy_per_ack: Option<f64>,
    pub success_probability: f64,
    pub expected_attempts: f64,
    pub slot_probabilities: Vec<f64>,
}

impl CaseReport {
    fn bounded(&self) -> bool {
        self.expected_delay_per_ack.is_some()
    }
}

pub fn evaluate_case(mac: &MacParams64, radio: &RadioConfig, profile: &EnergyProfile<f64>) -> Result<CaseReport> {
    let model = ChainModel::build(mac, radio, profile)?;
    let frame = absorbing_stats(&model)?;
    let pi = steady_state(&model)?;
    let (delay, energy) = match expected_resources(&model, &pi) {
        Ok(r) => (Some(r.expected_delay_per_ack), Some(r.expected_energy_per_ack)),
        Err(ModelError::NoSuccess) => (None, None),
        Err(e) => return Err(e.into()),
    };
    Ok(CaseReport {
        case: mac.ack_policy.number(),
        status: if delay.is_some() { "ok" } else { "unbounded delay" },
        expected_delay_per_ack: delay,
        expected_energy_per_ack: energy,
        success_probability: frame.success_probability,
        expected_attempts: frame.expected_attempts,
        slot_probabilities: mac.slot_choice.clone(),
    })
}

#[derive(Serialize)]
struct EvaluateReport<'a> {
    scenario: &'a str,
    gamma: String,
    reports: Vec<CaseReport>,
}

/// JSON report for each requested case. With `strict`, a scenario that
/// never delivers an ACK is an error instead of an "unbounded delay" row.
pub fn evaluate(scenario: &Scenario, cases: &[AckPolicy], gamma: &Gamma, strict: bool) -> Result<String> {
    let mac = gamma.apply(&scenario.mac)?;
    let reports = cases
        .iter()
        .map(|&c| evaluate_case(&mac.clone().with_policy(c), &scenario.radio, &scenario.profile))
        .collect::<Result<Vec<_>>>()?;
    if strict {
        if let Some(r) = reports.iter().find(|r| !r.bounded()) {
            return Err(CliError::NoSuccess(format!(
                "scenario `{}`, case {}: no frame is ever acknowledged, delay per ACK is unbounded",
                scenario.name, r.case
            )));
        }
    }
    let report = EvaluateReport {
        scenario: &scenario.name,
        gamma: gamma.to_string(),
        reports,
    };
    let mut out = serde_json::to_string_pretty(&report).map_err(|e| CliError::Numerical(e.to_string()))?;
    out.push('\n');
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Devices,
    Transmissions,
    DutyCycle,
    ChannelQuality,
    Channels,
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "A" | "devices" | "device_count" => SweepParam::Devices,
            "N" | "max_transmissions" => SweepParam::Transmissions,
            "delta" | "duty_cycle" => SweepParam::DutyCycle,
            "alpha" | "channel_quality" => SweepParam::ChannelQuality,
            "mc" | "m_c" | "channel_count" => SweepParam::Channels,
            _ => return Err(format!("unknown sweep parameter `{s}` (use A, N, delta, alpha or mc)")),
        })
    }
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Devices => "device_count",
            SweepParam::Transmissions => "max_transmissions",
            SweepParam::DutyCycle => "duty_cycle",
            SweepParam::ChannelQuality => "channel_quality",
            SweepParam::Channels => "channel_count",
        }
    }

    fn integral(self) -> bool {
        matches!(self, SweepParam::Devices | SweepParam::Transmissions | SweepParam::Channels)
    }

    fn apply(self, mac: &MacParams64, raw: &str) -> std::result::Result<(MacParams64, String), String> {
        let raw = raw.trim();
        let mut m = mac.clone();
        if self.integral() {
            let v: usize = raw.parse().map_err(|_| "not a non-negative integer".to_string())?;
            match self {
                SweepParam::Devices => m.device_count = v,
                SweepParam::Transmissions => m = m.with_max_transmissions(v),
                _ => m.channel_count = v,
            }
            m.validate().map_err(|e| e.to_string())?;
            Ok((m, v.to_string()))
        } else {
            let v: f64 = raw.parse().map_err(|_| "not a number".to_string())?;
            if self == SweepParam::DutyCycle {
                m.duty_cycle = v;
            } else {
                m.channel_quality = v;
            }
            m.validate().map_err(|e| e.to_string())?;
            Ok((m, num(v)))
        }
    }
}

pub const SWEEP_HEADER: &str =
    "parameter,value,gamma,case,status,delay_per_ack_s,energy_per_ack_j,success_probability,expected_attempts";

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// One row per value, γ ∈ {1, 0} and case ∈ {1, 2}, in that nesting order.
pub fn sweep(scenario: &Scenario, param: SweepParam, values: &[String]) -> Result<String> {
    let points = values
        .iter()
        .enumerate()
        .map(|(i, raw)| {
            param.apply(&scenario.mac, raw).map_err(|e| {
                CliError::Config(format!("sweep value #{} `{}` for {}: {e}", i + 1, raw.trim(), param.name()))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(String, f64, MacParams64)> = points
        .iter()
        .flat_map(|(mac, label)| {
            [1.0, 0.0].into_iter().flat_map(move |g| {
                [AckPolicy::Case1, AckPolicy::Case2]
                    .into_iter()
                    .map(move |c| (label.clone(), g, mac.clone().with_uniform_slot(g).with_policy(c)))
            })
        })
        .collect();
    let rows = jobs
        .par_iter()
        .map(|(label, g, mac)| {
            let r = evaluate_case(mac, &scenario.radio, &scenario.profile)?;
            Ok(format!(
                "{},{},{},{},{},{},{},{},{}",
                param.name(),
                label,
                g,
                r.case,
                if r.bounded() { "ok" } else { "unbounded" },
                opt(r.expected_delay_per_ack),
                opt(r.expected_energy_per_ack),
                num(r.success_probability),
                num(r.expected_attempts)
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    Ok(out)
}

pub const VALIDATE_HEADER: &str = "devices,policy,case,runs,sim_delay_s,sim_delay_ci95_s,sim_energy_j,sim_energy_ci95_j,\
sim_drop_rate,model_rs1_delay_s,model_rs1_energy_j,model_rs2_delay_s,model_rs2_energy_j,mixed_delay_s,mixed_energy_j,\
mixed_delay_rel_err,mixed_energy_rel_err,slot_probabilities";

fn bounded_metric(mac: &MacParams64, scenario: &Scenario) -> Result<Option<(f64, f64)>> {
    let r = evaluate_case(mac, &scenario.radio, &scenario.profile)?;
    Ok(r.expected_delay_per_ack.zip(r.expected_energy_per_ack))
}

fn pair(v: Option<(f64, f64)>) -> (String, String) {
    (opt(v.map(|p| p.0)), opt(v.map(|p| p.1)))
}

fn est(e: Option<Estimate>) -> (String, String) {
    (opt(e.map(|e| e.mean)), opt(e.and_then(|e| e.ci95)))
}

/// Simulator against the γ = 1, γ = 0 and measured-γ model for each
/// device count, using the scenario's simulation settings.
pub fn validate(scenario: &Scenario, device_counts: &[usize]) -> Result<String> {
    let mut out = String::from(VALIDATE_HEADER);
    out.push('\n');
    for &a in device_counts {
        let mut sc = scenario.clone();
        sc.mac.device_count = a;
        sc.validate().map_err(|e| CliError::Config(format!("device count {a}: {e}")))?;
        let stats = run_simulation(&sc.sim_config())?;
        let slots = estimate_slot_probabilities(&stats)?;
        let rs1 = bounded_metric(&sc.mac.clone().with_uniform_slot(1.0), &sc)?;
        let rs2 = bounded_metric(&sc.mac.clone().with_uniform_slot(0.0), &sc)?;
        let mixed = match mixed_slot_estimate(&sc.mac, &sc.radio, &sc.profile, &slots) {
            Ok(r) => Some((r.expected_delay_per_ack, r.expected_energy_per_ack)),
            Err(ModelError::NoSuccess) => None,
            Err(e) => return Err(e.into()),
        };
        let s = &stats.summary;
        let rel = |e: Option<Estimate>, m: Option<f64>| e.zip(m).map(|(e, m)| e.relative_error(m));
        let (sd, sdc) = est(s.delay);
        let (se, sec) = est(s.energy);
        let (r1d, r1e) = pair(rs1);
        let (r2d, r2e) = pair(rs2);
        let (md, me) = pair(mixed);
        let slot_list = slots.iter().map(|p| num(*p)).collect::<Vec<_>>().join(";");
        let _ = writeln!(
            out,
            "{a},{},{},{},{sd},{sdc},{se},{sec},{},{r1d},{r1e},{r2d},{r2e},{md},{me},{},{},{slot_list}",
            sc.sim.gateway_policy.label(),
            sc.mac.ack_policy.number(),
            sc.sim.runs,
            num(s.drop_rate),
            opt(rel(s.delay, mixed.map(|m| m.0))),
            opt(rel(s.energy, mixed.map(|m| m.1))),
        );
    }
    Ok(out)
}

pub struct SimOutput {
    pub summary_json: String,
    pub frames_csv: String,
    pub slot_probabilities: Vec<f64>,
}

pub fn simulate(scenario: &Scenario) -> Result<SimOutput> {
    let stats = run_simulation(&scenario.sim_config())?;
    let slot_probabilities = estimate_slot_probabilities(&stats)?;
    let mut summary = summary_json(&stats);
    summary.push('\n');
    Ok(SimOutput {
        summary_json: summary,
        frames_csv: frames_csv(&stats),
        slot_probabilities,
    })
}

/// Transition matrix as CSV: a header of state labels, then one row per
/// state.
pub fn export_matrix(scenario: &Scenario, gamma: &Gamma) -> Result<String> {
    let mac = gamma.apply(&scenario.mac)?;
    let model = ChainModel::build(&mac, &scenario.radio, &scenario.profile)?;
    let labels = model.labels();
    let mut out = format!("state,{}\n", labels.join(","));
    for (label, row) in labels.iter().zip(model.matrix().rows()) {
        out.push_str(label);
        for v in row {
            out.push(',');
            out.push_str(&num(*v));
        }
        out.push('\n');
    }
    Ok(out)
}
