use std::fmt;

use serde::Serialize;

use super::VerificationReport;
use crate::error::{Error, Result};
use crate::linear_models::{
    build_model, detect_negative_losses, BasePoint, ModelKind, ModelOptions, StorageSplit, X_CHARGE,
};
use crate::network::{DayProfile, Network};
use crate::scheduling::{fmt_num, ScheduleResult};

/// Whether the modeled branch losses went negative along a schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeLoss {
    /// The model has no loss terms.
    Lossless,
    /// Losses come from the AC equations themselves.
    Exact,
    Occurred(bool),
}

impl fmt::Display for NegativeLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NegativeLoss::Lossless => "n/a (lossless)",
            NegativeLoss::Exact => "n/a (exact)",
            NegativeLoss::Occurred(true) => "yes",
            NegativeLoss::Occurred(false) => "no",
        })
    }
}

/// One model's run through scheduling and verification. `kind` is `None`
/// for the AC benchmark.
#[derive(Clone, Debug)]
pub struct CampaignOutcome {
    pub kind: Option<ModelKind>,
    pub schedule: ScheduleResult,
    pub report: VerificationReport,
    pub negative_loss: NegativeLoss,
}

/// Evaluates the model's branch losses at every scheduled step. The internal
/// dispatch is recovered from the scheduled storage power, split in
/// proportion to `p_max` as in verification; the model then fixes the
/// exchange.
pub fn scan_negative_losses(
    net: &Network,
    kind: ModelKind,
    base: Option<&BasePoint>,
    profile: &DayProfile,
    schedule: &ScheduleResult,
) -> Result<NegativeLoss> {
    if kind.is_lossless() {
        return Ok(NegativeLoss::Lossless);
    }
    let opts = ModelOptions {
        split: StorageSplit::Proportional,
        ..ModelOptions::default()
    };
    for t in 0..schedule.p_pcc.len() {
        let model = build_model(kind, net, base, &profile.injections(net, t), opts)?;
        let point = model
            .complete(&[(X_CHARGE, schedule.charge[t])])
            .map_err(|e| Error::at_step(t, e))?;
        if detect_negative_losses(&model, &point).any_negative() {
            return Ok(NegativeLoss::Occurred(true));
        }
    }
    Ok(NegativeLoss::Occurred(false))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub model: String,
    pub topology: String,
    pub voltage: String,
    pub angle: String,
    pub reactive: String,
    pub loss: String,
    pub negative_loss: String,
    pub final_soc: f64,
    /// Final SOC minus target, in percentage points.
    pub final_soc_miss_pp: f64,
    pub cum_loss_error: f64,
    pub objective: f64,
}

/// Feature and outcome matrix over at least two campaigns, in input order.
pub fn comparison_report(outcomes: &[CampaignOutcome]) -> Result<Vec<ComparisonRow>> {
    if outcomes.len() < 2 {
        return Err(Error::Invalid("need ≥ 2 campaigns".into()));
    }
    Ok(outcomes
        .iter()
        .map(|o| {
            let f: [&str; 6] = match o.kind {
                Some(k) => {
                    let f = k.features();
                    [f.model, f.topology, f.voltage, f.angle, f.reactive, f.loss]
                }
                None => ["AC PF (benchmark)", "meshed", "standard", "standard", "standard", "exact"],
            };
            ComparisonRow {
                model: f[0].into(),
                topology: f[1].into(),
                voltage: f[2].into(),
                angle: f[3].into(),
                reactive: f[4].into(),
                loss: f[5].into(),
                negative_loss: o.negative_loss.to_string(),
                final_soc: o.report.final_soc(),
                final_soc_miss_pp: 100.0 * o.report.final_soc_miss(),
                cum_loss_error: o.report.total_loss_error(),
                objective: o.schedule.objective,
            }
        })
        .collect())
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "model",
        "topology",
        "voltage_magnitude",
        "voltage_angle",
        "reactive_power",
        "line_loss",
        "negative_loss",
        "final_soc",
        "final_soc_miss_pp",
        "cum_loss_error",
        "objective",
    ])?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.topology.clone(),
            r.voltage.clone(),
            r.angle.clone(),
            r.reactive.clone(),
            r.loss.clone(),
            r.negative_loss.clone(),
            fmt_num(r.final_soc),
            fmt_num(r.final_soc_miss_pp),
            fmt_num(r.cum_loss_error),
            fmt_num(r.objective),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduling::{schedule_full_linear, ScheduleProblem};
    use crate::verification::verify_schedule;

    fn outcome(net: &Network, prob: &ScheduleProblem, kind: ModelKind) -> CampaignOutcome {
        let base = BasePoint::from_profile(net, &prob.profile).unwrap();
        let base = kind.needs_base().then_some(&base);
        let schedule = schedule_full_linear(net, prob, kind, base, ModelOptions::default()).unwrap();
        let report = verify_schedule(net, &schedule, &prob.profile).unwrap();
        let negative_loss = scan_negative_losses(net, kind, base, &prob.profile, &schedule).unwrap();
        CampaignOutcome {
            kind: Some(kind),
            schedule,
            report,
            negative_loss,
        }
    }

    #[test]
    fn lossless_models_are_not_applicable() {
        let net = Network::ieee33();
        let prob = ScheduleProblem::new(&DayProfile::workday(), 4, 1.0, 0.0).unwrap();
        let rows = comparison_report(&[
            outcome(&net, &prob, ModelKind::Dc),
            outcome(&net, &prob, ModelKind::LinDistFlow),
        ])
        .unwrap();
        assert!(rows.iter().all(|r| r.negative_loss == "n/a (lossless)"));
        assert_eq!(rows[0].model, "Classic DC PF");
        let csv = comparison_csv(&rows).unwrap();
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn single_campaign_rejected() {
        let net = Network::ieee33();
        let prob = ScheduleProblem::new(&DayProfile::workday(), 2, 1.0, 0.0).unwrap();
        let err = comparison_report(&[outcome(&net, &prob, ModelKind::Dc)]).unwrap_err();
        assert_eq!(err.to_string(), "need ≥ 2 campaigns");
    }

    #[test]
    fn lossy_models_scan_their_losses() {
        let net = Network::ieee33();
        let prob = ScheduleProblem::new(&DayProfile::workday(), 6, 1.0, 0.0).unwrap();
        for kind in [ModelKind::DcEnhanced, ModelKind::LinAc] {
            let o = outcome(&net, &prob, kind);
            assert!(matches!(o.negative_loss, NegativeLoss::Occurred(_)));
        }
    }
}
