use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::svg::{emit_svg, Axes, Series};
use crate::aggregation::{build_envelope, EnvelopeOptions};
use crate::error::{Error, Result};
use crate::linear_models::{BasePoint, ModelKind};
use crate::network::{generate_campus_like, load_network, load_profile, DayProfile, Network};
use crate::scheduling::{schedule_ac_benchmark, schedule_over_envelope, BenchmarkOptions, ScheduleProblem};
use crate::verification::{
    comparison_csv, comparison_report, scan_negative_losses, verify_schedule, CampaignOutcome, ComparisonRow,
    NegativeLoss,
};

fn default_horizon() -> usize {
    24
}

fn default_directions() -> usize {
    64
}

fn default_alpha() -> f64 {
    1.0
}

/// Campaign description, read from JSON. Relative paths resolve against the
/// directory of the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    /// Network file; the campus-like generator is used when absent.
    #[serde(default)]
    pub network: Option<PathBuf>,
    /// Profile CSV; the bundled workday profile is used when absent.
    #[serde(default)]
    pub profiles: Option<PathBuf>,
    /// Model names (`lindistflow`, `dc`, `dc-enhanced`, `lin-ac`) and `ac`
    /// for the benchmark.
    pub models: Vec<String>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_directions")]
    pub directions: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    pub output: PathBuf,
    /// Seed of the campus-like generator.
    #[serde(default)]
    pub seed: u64,
}

impl CampaignConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        let dir = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let Some(p) = cfg.network.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.profiles.as_mut() {
            resolve(p);
        }
        resolve(&mut cfg.output);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Invalid("campaign lists no models".into()));
        }
        for m in &self.models {
            ModelChoice::from_str(m)?;
        }
        if self.horizon == 0 || self.directions < 3 {
            return Err(Error::Invalid("horizon must be positive and directions at least 3".into()));
        }
        Ok(())
    }
}

/// A linear model or the AC benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelChoice {
    Linear(ModelKind),
    Ac,
}

impl ModelChoice {
    pub fn name(self) -> &'static str {
        match self {
            ModelChoice::Linear(k) => k.name(),
            ModelChoice::Ac => "ac",
        }
    }
}

impl FromStr for ModelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("ac") {
            Ok(ModelChoice::Ac)
        } else {
            ModelKind::from_str(s).map(ModelChoice::Linear)
        }
    }
}

/// Result of one model branch; failures keep their message.
#[derive(Debug)]
pub struct ModelRun {
    pub name: String,
    pub result: std::result::Result<CampaignOutcome, String>,
}

#[derive(Debug)]
pub struct CampaignRun {
    pub runs: Vec<ModelRun>,
    /// Present when at least two branches succeeded.
    pub comparison: Option<Vec<ComparisonRow>>,
}

impl CampaignRun {
    pub fn all_failed(&self) -> bool {
        self.runs.iter().all(|r| r.result.is_err())
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct BranchSummary<'a> {
    model: &'a str,
    method: &'a str,
    objective: f64,
    iterations: usize,
    final_soc: f64,
    final_soc_miss_pp: f64,
    cum_loss_error: f64,
    negative_loss: String,
    violations: usize,
}

/// Aggregates, schedules and verifies each model concurrently, then writes
/// the comparison matrix and the two figures. Setup errors (network,
/// profile, output directory) abort; a failing model only ends its branch.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignRun> {
    cfg.validate()?;
    let net = match &cfg.network {
        Some(p) => load_network(p)?,
        None => generate_campus_like(cfg.seed),
    };
    let profile = match &cfg.profiles {
        Some(p) => load_profile(p)?,
        None => DayProfile::workday(),
    };
    let prob = ScheduleProblem::new(&profile, cfg.horizon, cfg.alpha, cfg.beta)?;
    fs::create_dir_all(&cfg.output).map_err(|e| Error::io(&cfg.output, e))?;
    let choices: Vec<ModelChoice> = cfg
        .models
        .iter()
        .map(|m| ModelChoice::from_str(m))
        .collect::<Result<_>>()?;
    let needs_base = choices
        .iter()
        .any(|c| matches!(c, ModelChoice::Linear(k) if k.needs_base()));
    let base = if needs_base {
        Some(BasePoint::from_profile(&net, &prob.profile).map_err(|e| e.to_string()))
    } else {
        None
    };

    let runs: Vec<ModelRun> = choices
        .par_iter()
        .map(|&choice| {
            let result = run_branch(&net, &prob, cfg, choice, base.as_ref()).map_err(|e| e.to_string());
            if let Err(msg) = &result {
                let dir = cfg.output.join(choice.name());
                // best effort: the failure is also returned to the caller
                let _ = fs::create_dir_all(&dir).and_then(|_| fs::write(dir.join("error.txt"), format!("{msg}\n")));
            }
            ModelRun {
                name: choice.name().to_string(),
                result,
            }
        })
        .collect();

    let ok: Vec<&CampaignOutcome> = runs.iter().filter_map(|r| r.result.as_ref().ok()).collect();
    let comparison = if ok.len() >= 2 {
        let owned: Vec<CampaignOutcome> = ok.iter().map(|o| (*o).clone()).collect();
        let rows = comparison_report(&owned)?;
        write(&cfg.output.join("comparison.csv"), &comparison_csv(&rows)?)?;
        Some(rows)
    } else {
        None
    };
    if !ok.is_empty() {
        let names: Vec<&str> = runs.iter().filter(|r| r.result.is_ok()).map(|r| r.name.as_str()).collect();
        let ppcc: Vec<Series> = names
            .iter()
            .zip(&ok)
            .map(|(n, o)| Series {
                label: n.to_string(),
                values: o.schedule.p_pcc.iter().map(|p| p * net.base_mva).collect(),
            })
            .collect();
        let soc: Vec<Series> = names
            .iter()
            .zip(&ok)
            .map(|(n, o)| Series {
                label: n.to_string(),
                values: o.report.soc_agg.iter().map(|s| 100.0 * s).collect(),
            })
            .collect();
        let ppcc_axes = Axes {
            title: "Scheduled PCC exchange".into(),
            x_label: "hour".into(),
            y_label: "P_pcc [MW]".into(),
            x_start: f64::from(prob.profile.hours[0]),
        };
        let soc_axes = Axes {
            title: "Aggregate SOC after AC verification".into(),
            x_label: "hour".into(),
            y_label: "SOC [%]".into(),
            x_start: f64::from(prob.profile.hours[0]),
        };
        write(&cfg.output.join("fig_ppcc.svg"), &emit_svg(&ppcc, &ppcc_axes)?)?;
        write(&cfg.output.join("fig_soc.svg"), &emit_svg(&soc, &soc_axes)?)?;
    }
    Ok(CampaignRun { runs, comparison })
}

fn run_branch(
    net: &Network,
    prob: &ScheduleProblem,
    cfg: &CampaignConfig,
    choice: ModelChoice,
    base: Option<&std::result::Result<BasePoint, String>>,
) -> Result<CampaignOutcome> {
    let dir = cfg.output.join(choice.name());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let (kind, schedule, negative_loss) = match choice {
        ModelChoice::Ac => {
            let s = schedule_ac_benchmark(net, prob, &BenchmarkOptions::default())?;
            (None, s, NegativeLoss::Exact)
        }
        ModelChoice::Linear(kind) => {
            let base = if kind.needs_base() {
                match base {
                    Some(Ok(b)) => Some(b),
                    Some(Err(msg)) => return Err(Error::Invalid(format!("base point: {msg}"))),
                    None => return Err(Error::Invalid("base point missing".into())),
                }
            } else {
                None
            };
            let opts = EnvelopeOptions {
                directions: cfg.directions,
                ..EnvelopeOptions::default()
            };
            let env = build_envelope(net, kind, base, &prob.profile, prob.steps(), &opts)?;
            write(&dir.join("envelope.json"), &env.to_json()?)?;
            let s = schedule_over_envelope(net, prob, &env)?;
            let neg = scan_negative_losses(net, kind, base, &prob.profile, &s)?;
            (Some(kind), s, neg)
        }
    };
    let report = verify_schedule(net, &schedule, &prob.profile)?;
    write(&dir.join("schedule.csv"), &schedule.to_csv(prob)?)?;
    write(&dir.join("verify.csv"), &report.to_csv()?)?;
    write(&dir.join("violations.json"), &report.violations_json()?)?;
    let summary = BranchSummary {
        model: choice.name(),
        method: &schedule.method,
        objective: schedule.objective,
        iterations: schedule.iterations,
        final_soc: report.final_soc(),
        final_soc_miss_pp: 100.0 * report.final_soc_miss(),
        cum_loss_error: report.total_loss_error(),
        negative_loss: negative_loss.to_string(),
        violations: report.violations.len(),
    };
    write(&dir.join("summary.json"), &serde_json::to_string_pretty(&summary)?)?;
    Ok(CampaignOutcome {
        kind,
        schedule,
        report,
        negative_loss,
    })
}
