use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use gridflex::acpf::{solve_ac, total_losses};
use gridflex::aggregation::{build_envelope, EnvelopeOptions, FlexibilityEnvelope};
use gridflex::linear_models::{build_model, BasePoint, ModelKind, ModelOptions, StorageSplit};
use gridflex::network::{generate_campus_like, load_network, load_profile, DayProfile, Network};
use gridflex::reporting::{
    injections_from_power_flow_csv, model_json, power_flow_csv, read_injections, run_campaign, CampaignConfig,
    ModelChoice,
};
use gridflex::scheduling::{
    schedule_ac_benchmark, schedule_over_envelope, BenchmarkOptions, ScheduleProblem, ScheduleResult,
};
use gridflex::verification::verify_schedule;
use gridflex::{Error, Result};

#[derive(Parser)]
#[command(name = "gridflex", version, about = "PCC flexibility aggregation and storage scheduling with AC verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Split {
    Free,
    Proportional,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the AC power flow.
    Pf {
        #[arg(long)]
        net: PathBuf,
        /// CSV `bus,p,q` of net injections in p.u.; nominal loads when absent.
        #[arg(long)]
        injections: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a linear model and dump it as JSON.
    Model {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        net: PathBuf,
        /// Power-flow table (from `pf`) whose injections define the base point.
        #[arg(long)]
        base: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        load_scale: f64,
        #[arg(long, default_value_t = 0.0)]
        pv_scale: f64,
        #[arg(long, value_enum, default_value_t = Split::Free)]
        split: Split,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the power-energy envelope over a horizon.
    Aggregate {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        model: String,
        /// Profile CSV `hour,load_pu,pv_pu`; bundled workday when absent.
        #[arg(long)]
        profiles: Option<PathBuf>,
        #[arg(long, default_value_t = 24)]
        horizon: usize,
        #[arg(long, default_value_t = 64)]
        directions: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Day-ahead schedule of the PCC exchange.
    Schedule {
        #[arg(long)]
        net: PathBuf,
        /// A linear model kind, `ac` for the benchmark, or `envelope`.
        #[arg(long)]
        model: String,
        /// Envelope JSON used with `--model envelope`.
        #[arg(long)]
        envelope: Option<PathBuf>,
        #[arg(long)]
        profiles: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long, default_value_t = 24)]
        horizon: usize,
        #[arg(long, default_value_t = 64)]
        directions: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON summary path; printed to stderr when absent.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Replay a schedule against the AC model.
    Verify {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        profiles: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Violations JSON path; printed to stderr when absent.
        #[arg(long)]
        violations: Option<PathBuf>,
    },
    /// Run a full campaign from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the synthetic campus-like network as JSON.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn side_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            eprintln!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn profile_or_default(path: Option<&Path>) -> Result<DayProfile> {
    path.map_or_else(|| Ok(DayProfile::workday()), load_profile)
}

fn linear_envelope(
    net: &Network,
    kind: ModelKind,
    prob: &ScheduleProblem,
    directions: usize,
) -> Result<FlexibilityEnvelope> {
    let base = if kind.needs_base() {
        Some(BasePoint::from_profile(net, &prob.profile)?)
    } else {
        None
    };
    let opts = EnvelopeOptions {
        directions,
        ..EnvelopeOptions::default()
    };
    build_envelope(net, kind, base.as_ref(), &prob.profile, prob.steps(), &opts)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Pf { net, injections, out } => {
            let net = load_network(&net)?;
            let inj = match injections {
                Some(p) => read_injections(read(&p)?.as_bytes(), &net)?,
                None => net.injections(1.0, 0.0),
            };
            let st = solve_ac(&net, &inj)?;
            emit(out.as_deref(), &power_flow_csv(&net, &st, total_losses(&st, &net))?)?;
        }
        Command::Model {
            kind,
            net,
            base,
            load_scale,
            pv_scale,
            split,
            out,
        } => {
            let kind = ModelKind::from_str(&kind)?;
            let net = load_network(&net)?;
            let inj = net.injections(load_scale, pv_scale);
            let base = if kind.needs_base() {
                Some(match base {
                    Some(p) => {
                        let base_inj = injections_from_power_flow_csv(read(&p)?.as_bytes(), &net)?;
                        BasePoint::solve(&net, &base_inj, p.display().to_string())?
                    }
                    None => BasePoint::solve(&net, &inj, "nominal")?,
                })
            } else {
                None
            };
            let opts = ModelOptions {
                split: match split {
                    Split::Free => StorageSplit::Free,
                    Split::Proportional => StorageSplit::Proportional,
                },
                ..ModelOptions::default()
            };
            let model = build_model(kind, &net, base.as_ref(), &inj, opts)?;
            emit(out.as_deref(), &(model_json(&model)? + "\n"))?;
        }
        Command::Aggregate {
            net,
            model,
            profiles,
            horizon,
            directions,
            out,
        } => {
            let kind = ModelKind::from_str(&model)?;
            let net = load_network(&net)?;
            let prob = ScheduleProblem::new(&profile_or_default(profiles.as_deref())?, horizon, 1.0, 0.0)?;
            let env = linear_envelope(&net, kind, &prob, directions)?;
            emit(out.as_deref(), &(env.to_json()? + "\n"))?;
        }
        Command::Schedule {
            net,
            model,
            envelope,
            profiles,
            alpha,
            beta,
            horizon,
            directions,
            out,
            summary,
        } => {
            let net = load_network(&net)?;
            let prob = ScheduleProblem::new(&profile_or_default(profiles.as_deref())?, horizon, alpha, beta)?;
            let result = if model == "envelope" {
                let path = envelope
                    .ok_or_else(|| Error::Invalid("--model envelope needs --envelope <json>".into()))?;
                let env: FlexibilityEnvelope = serde_json::from_str(&read(&path)?)?;
                schedule_over_envelope(&net, &prob, &env)?
            } else {
                match ModelChoice::from_str(&model)? {
                    ModelChoice::Ac => schedule_ac_benchmark(&net, &prob, &BenchmarkOptions::default())?,
                    ModelChoice::Linear(kind) => {
                        let env = linear_envelope(&net, kind, &prob, directions)?;
                        schedule_over_envelope(&net, &prob, &env)?
                    }
                }
            };
            emit(out.as_deref(), &result.to_csv(&prob)?)?;
            side_output(summary.as_deref(), &serde_json::to_string_pretty(&result)?)?;
        }
        Command::Verify {
            net,
            schedule,
            profiles,
            out,
            violations,
        } => {
            let net = load_network(&net)?;
            let profile = profile_or_default(profiles.as_deref())?;
            let text = read(&schedule)?;
            let steps = text.lines().count().saturating_sub(1);
            let prob = ScheduleProblem::new(&profile, steps, 1.0, 0.0)?;
            let sched = ScheduleResult::from_csv(text.as_bytes(), &net, &prob)?;
            let report = verify_schedule(&net, &sched, &prob.profile)?;
            emit(out.as_deref(), &report.to_csv()?)?;
            side_output(violations.as_deref(), &report.violations_json()?)?;
        }
        Command::Run { config } => {
            let cfg = CampaignConfig::from_file(&config)?;
            let run = run_campaign(&cfg)?;
            for r in &run.runs {
                match &r.result {
                    Ok(o) => eprintln!(
                        "{}: final SOC {:.2} %, cumulative loss error {:.6} p.u.h",
                        r.name,
                        100.0 * o.report.final_soc(),
                        o.report.total_loss_error()
                    ),
                    Err(msg) => eprintln!("{}: failed: {msg}", r.name),
                }
            }
            if run.all_failed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Generate { seed, out } => {
            let net = generate_campus_like(seed);
            emit(out.as_deref(), &(net.to_file().to_json()? + "\n"))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
