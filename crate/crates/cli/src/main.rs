use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lora_ack_cli::commands::write_slot_file;
use lora_ack_cli::{evaluate, export_matrix, simulate, sweep, validate, CliError, Gamma, Result, SweepParam};
use lora_ack_model::netsim::GatewayPolicy;
use lora_ack_model::{AckPolicy, Scenario};

#[derive(Parser)]
#[command(name = "lora-ack", version, about = "Delay and energy of confirmed LoRaWAN Class A uplinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML); the built-in default when omitted
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Write the main output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimOverrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// Simulated seconds per run
    #[arg(long)]
    duration: Option<f64>,
    /// Gateway slot policy: prefer, rs1 or rs2
    #[arg(long, value_parser = parse_policy)]
    policy: Option<GatewayPolicy>,
}

#[derive(Subcommand)]
enum Command {
    /// Expected delay and energy per ACK for one scenario (JSON)
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// 1, 2 or both; the scenario's policy when omitted
        #[arg(long)]
        case: Option<String>,
        /// rs1, rs2, scenario or mixed:<path>
        #[arg(long, default_value = "scenario")]
        gamma: Gamma,
        /// Fail with exit code 4 when no frame is ever acknowledged
        #[arg(long)]
        strict: bool,
    },
    /// Model over a list of values of one parameter (CSV)
    Sweep {
        #[command(flatten)]
        common: Common,
        /// A, N, delta, alpha or mc
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values
        #[arg(long, default_value = "")]
        values: String,
    },
    /// Simulator against the model for several device counts (CSV)
    Validate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimOverrides,
        #[arg(long)]
        case: Option<String>,
        /// Comma-separated device counts
        #[arg(long, default_value = "10,40,80")]
        devices: String,
    },
    /// Run the network simulator (summary JSON)
    Sim {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimOverrides,
        #[arg(long)]
        case: Option<String>,
        /// Also write the per-frame CSV here
        #[arg(long)]
        frames: Option<PathBuf>,
        /// Also write the measured RS1 probabilities, usable as --gamma mixed:<path>
        #[arg(long)]
        slots_out: Option<PathBuf>,
    },
    /// Transition matrix as CSV
    ExportMatrix {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        case: Option<String>,
        #[arg(long, default_value = "scenario")]
        gamma: Gamma,
    },
}

fn parse_policy(s: &str) -> std::result::Result<GatewayPolicy, String> {
    match s {
        "prefer" => Ok(GatewayPolicy::PreferRs1ElseRs2),
        "rs1" => Ok(GatewayPolicy::ForceRs1),
        "rs2" => Ok(GatewayPolicy::ForceRs2),
        _ => Err(format!("expected prefer, rs1 or rs2, got `{s}`")),
    }
}

fn parse_case(s: &str) -> Result<AckPolicy> {
    match s {
        "1" => Ok(AckPolicy::Case1),
        "2" => Ok(AckPolicy::Case2),
        _ => Err(CliError::Config(format!("--case must be 1 or 2, got `{s}`"))),
    }
}

fn cases(arg: Option<&str>, scenario: &Scenario) -> Result<Vec<AckPolicy>> {
    match arg {
        None => Ok(vec![scenario.mac.ack_policy]),
        Some("both") => Ok(vec![AckPolicy::Case1, AckPolicy::Case2]),
        Some(s) => Ok(vec![parse_case(s)?]),
    }
}

fn single_case(arg: Option<&str>, scenario: &mut Scenario) -> Result<()> {
    if let Some(s) = arg {
        scenario.mac.ack_policy = parse_case(s)?;
    }
    Ok(())
}

fn load(common: &Common) -> Result<Scenario> {
    match &common.scenario {
        Some(p) => Ok(Scenario::from_path(p)?),
        None => Ok(Scenario::default()),
    }
}

fn apply_sim(scenario: &mut Scenario, o: &SimOverrides) -> Result<()> {
    let s = &mut scenario.sim;
    if let Some(v) = o.seed {
        s.base_seed = v;
    }
    if let Some(v) = o.runs {
        s.runs = v;
    }
    if let Some(v) = o.duration {
        s.sim_duration = v;
    }
    if let Some(v) = o.policy {
        s.gateway_policy = v;
    }
    scenario.validate()?;
    Ok(())
}

fn write(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Output {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn list(raw: &str) -> Vec<String> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Evaluate {
            common,
            case,
            gamma,
            strict,
        } => {
            let sc = load(&common)?;
            let cases = cases(case.as_deref(), &sc)?;
            write(common.out.as_deref(), &evaluate(&sc, &cases, &gamma, strict)?)
        }
        Command::Sweep { common, param, values } => {
            let sc = load(&common)?;
            write(common.out.as_deref(), &sweep(&sc, param, &list(&values))?)
        }
        Command::Validate {
            common,
            sim,
            case,
            devices,
        } => {
            let mut sc = load(&common)?;
            apply_sim(&mut sc, &sim)?;
            single_case(case.as_deref(), &mut sc)?;
            let counts = list(&devices)
                .iter()
                .map(|d| {
                    d.parse::<usize>()
                        .map_err(|_| CliError::Config(format!("--devices: `{d}` is not a device count")))
                })
                .collect::<Result<Vec<_>>>()?;
            write(common.out.as_deref(), &validate(&sc, &counts)?)
        }
        Command::Sim {
            common,
            sim,
            case,
            frames,
            slots_out,
        } => {
            let mut sc = load(&common)?;
            apply_sim(&mut sc, &sim)?;
            single_case(case.as_deref(), &mut sc)?;
            let out = simulate(&sc)?;
            if let Some(p) = frames.as_deref() {
                write(Some(p), &out.frames_csv)?;
            }
            if let Some(p) = slots_out.as_deref() {
                write(Some(p), &write_slot_file(&out.slot_probabilities))?;
            }
            write(common.out.as_deref(), &out.summary_json)
        }
        Command::ExportMatrix { common, case, gamma } => {
            let mut sc = load(&common)?;
            single_case(case.as_deref(), &mut sc)?;
            write(common.out.as_deref(), &export_matrix(&sc, &gamma)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
