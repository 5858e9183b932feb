//! Post-verification of a schedule against the exact AC model.
//!
//! The PCC exchange is held at its scheduled value every hour and the storage
//! fleet absorbs whatever the linear model got wrong: a scalar root-find on
//! the aggregate storage power (shared in proportion to `p_max`) matches the
//! AC exchange to the schedule, then the state of charge is integrated
//! forward. Excursions are recorded, never clipped.

mod compare;

use serde::Serialize;

pub use compare::{
    comparison_csv, comparison_report, scan_negative_losses, CampaignOutcome, ComparisonRow, NegativeLoss,
};

use crate::acpf::{solve_ac_with, total_losses, AcOptions, PowerFlowState};
use crate::error::{Error, Result};
use crate::network::{DayProfile, Injections, Network};
use crate::scheduling::{fmt_num, ScheduleResult};

/// Final SOC tolerance in fraction units (0.1 percentage points).
pub const FINAL_SOC_TOL: f64 = 1e-3;
const LIMIT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub dt: f64,
    /// Accepted PCC mismatch of the storage root-find (p.u.).
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            dt: 1.0,
            tol: 1e-8,
            max_iter: 60,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    SocBelowZero,
    SocAboveOne,
    FinalSocMiss,
    Voltage,
    Flow,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub step: usize,
    pub kind: ViolationKind,
    /// Distance outside the admissible range (SOC fraction, p.u. voltage or
    /// p.u. apparent power).
    pub magnitude: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub method: String,
    pub hours: Vec<u32>,
    pub dt: f64,
    pub p_pcc: Vec<f64>,
    /// Aggregate storage charging power that balances the AC network.
    pub charge: Vec<f64>,
    pub loss_realized: Vec<f64>,
    pub loss_model: Vec<f64>,
    pub loss_error: Vec<f64>,
    /// Running sum of `loss_error·dt` through each step.
    pub cumulative_loss_error: Vec<f64>,
    /// Aggregate SOC, `T + 1` entries.
    pub soc_agg: Vec<f64>,
    /// SOC per storage unit, each with `T + 1` entries.
    pub soc_units: Vec<Vec<f64>>,
    pub target_soc: f64,
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn final_soc(&self) -> f64 {
        *self.soc_agg.last().expect("SOC series has the initial entry")
    }

    /// Signed miss of the final aggregate SOC against its target.
    pub fn final_soc_miss(&self) -> f64 {
        self.final_soc() - self.target_soc
    }

    pub fn total_loss_error(&self) -> f64 {
        self.cumulative_loss_error.last().copied().unwrap_or(0.0)
    }

    /// CSV `hour,p_pcc,soc_agg,soc_unit_*,loss_realized,loss_model,loss_error,cum_loss_error`
    /// with SOC at the end of each hour.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["hour".to_string(), "p_pcc".into(), "soc_agg".into()];
        header.extend((0..self.soc_units.len()).map(|s| format!("soc_unit_{s}")));
        header.extend(["loss_realized", "loss_model", "loss_error", "cum_loss_error"].map(String::from));
        w.write_record(&header)?;
        for t in 0..self.p_pcc.len() {
            let mut rec = vec![self.hours[t].to_string(), fmt_num(self.p_pcc[t]), fmt_num(self.soc_agg[t + 1])];
            rec.extend(self.soc_units.iter().map(|u| fmt_num(u[t + 1])));
            rec.extend(
                [
                    self.loss_realized[t],
                    self.loss_model[t],
                    self.loss_error[t],
                    self.cumulative_loss_error[t],
                ]
                .map(fmt_num),
            );
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn violations_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.violations)?)
    }
}

/// Per-step and cumulative loss error of a report.
pub fn loss_error_series(report: &VerificationReport) -> (Vec<f64>, Vec<f64>) {
    (report.loss_error.clone(), report.cumulative_loss_error.clone())
}

pub fn verify_schedule(net: &Network, schedule: &ScheduleResult, profile: &DayProfile) -> Result<VerificationReport> {
    verify_schedule_with(net, schedule, profile, &VerifyOptions::default())
}

pub fn verify_schedule_with(
    net: &Network,
    schedule: &ScheduleResult,
    profile: &DayProfile,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    let steps = schedule.p_pcc.len();
    if profile.len() < steps || schedule.model_losses.len() != steps || schedule.charge.len() != steps {
        return Err(Error::Dimension(format!(
            "schedule covers {steps} steps, profile {}",
            profile.len()
        )));
    }
    if net.storage.is_empty() {
        return Err(Error::Invalid("verification needs at least one storage unit".into()));
    }
    let shares = net.storage_shares();
    let cap = net.total_e_cap();
    let mut soc_agg = vec![net.initial_energy() / cap];
    let mut soc_units: Vec<Vec<f64>> = net.storage.iter().map(|s| vec![s.soc_init]).collect();
    let mut rep = VerificationReport {
        method: schedule.method.clone(),
        hours: profile.hours[..steps].to_vec(),
        dt: opts.dt,
        p_pcc: schedule.p_pcc.clone(),
        charge: Vec::with_capacity(steps),
        loss_realized: Vec::with_capacity(steps),
        loss_model: schedule.model_losses.clone(),
        loss_error: Vec::with_capacity(steps),
        cumulative_loss_error: Vec::with_capacity(steps),
        soc_agg: Vec::new(),
        soc_units: Vec::new(),
        target_soc: net.final_energy() / cap,
        violations: Vec::new(),
    };
    let mut warm: Option<PowerFlowState> = None;
    let mut cumulative = 0.0;
    for t in 0..steps {
        let fixed = profile.injections(net, t);
        let (c, state) = balance_step(net, &fixed, &shares, schedule.p_pcc[t], schedule.charge[t], warm.as_ref(), opts)
            .map_err(|e| Error::at_step(t, e))?;
        let loss = total_losses(&state, net);
        let err = loss - schedule.model_losses[t];
        cumulative += err * opts.dt;
        rep.charge.push(c);
        rep.loss_realized.push(loss);
        rep.loss_error.push(err);
        rep.cumulative_loss_error.push(cumulative);

        let next = soc_agg[t] + opts.dt * c / cap;
        soc_agg.push(next);
        for ((unit, hist), share) in net.storage.iter().zip(soc_units.iter_mut()).zip(&shares) {
            let last = hist[t];
            hist.push(last + opts.dt * share * c / unit.e_cap);
        }
        if next < 0.0 {
            rep.violations.push(Violation {
                step: t,
                kind: ViolationKind::SocBelowZero,
                magnitude: -next,
            });
        } else if next > 1.0 {
            rep.violations.push(Violation {
                step: t,
                kind: ViolationKind::SocAboveOne,
                magnitude: next - 1.0,
            });
        }
        if let Some(m) = voltage_excess(net, &state) {
            rep.violations.push(Violation {
                step: t,
                kind: ViolationKind::Voltage,
                magnitude: m,
            });
        }
        if let Some(m) = flow_excess(net, &state) {
            rep.violations.push(Violation {
                step: t,
                kind: ViolationKind::Flow,
                magnitude: m,
            });
        }
        if t + 1 == steps && (next - rep.target_soc).abs() > FINAL_SOC_TOL {
            rep.violations.push(Violation {
                step: t,
                kind: ViolationKind::FinalSocMiss,
                magnitude: (next - rep.target_soc).abs(),
            });
        }
        warm = Some(state);
    }
    rep.soc_agg = soc_agg;
    rep.soc_units = soc_units;
    Ok(rep)
}

/// Finds the aggregate charge `C` with AC exchange equal to `p_target` by a
/// safeguarded secant iteration: secant steps with the last slope, falling
/// back to bisection once a sign change is bracketed and a step leaves it.
fn balance_step(
    net: &Network,
    fixed: &Injections,
    shares: &[f64],
    p_target: f64,
    c_start: f64,
    warm: Option<&PowerFlowState>,
    opts: &VerifyOptions,
) -> Result<(f64, PowerFlowState)> {
    let mut prev_state = warm.cloned();
    let mut eval = |c: f64| -> Result<(f64, PowerFlowState)> {
        let units: Vec<f64> = shares.iter().map(|s| s * c).collect();
        let inj = net.with_storage(fixed, &units);
        let ac = AcOptions {
            init: prev_state.as_ref(),
            ..AcOptions::default()
        };
        let st = solve_ac_with(net, &inj, &ac)?;
        let at_slack: f64 = net
            .storage
            .iter()
            .zip(&units)
            .filter(|(s, _)| s.bus == net.slack)
            .map(|(_, u)| u)
            .sum();
        let p = st.p[net.slack] - fixed.p[net.slack] + at_slack;
        prev_state = Some(st.clone());
        Ok((p - p_target, st))
    };
    let (mut c, (mut f, mut st)) = (c_start, eval(c_start)?);
    let mut lo: Option<f64> = None;
    let mut hi: Option<f64> = None;
    let mut slope = 1.0;
    for _ in 0..opts.max_iter {
        if f.abs() <= opts.tol {
            return Ok((c, st));
        }
        if f < 0.0 {
            lo = Some(c);
        } else {
            hi = Some(c);
        }
        let mut next = c - f / slope;
        if let (Some(a), Some(b)) = (lo, hi) {
            let (l, h) = (a.min(b), a.max(b));
            if !(next > l && next < h) {
                next = 0.5 * (l + h);
            }
        }
        let (f_next, st_next) = eval(next)?;
        let s = (f_next - f) / (next - c);
        if s.is_finite() && s > 0.0 {
            slope = s;
        }
        c = next;
        f = f_next;
        st = st_next;
    }
    if f.abs() <= opts.tol {
        return Ok((c, st));
    }
    Err(Error::NonConvergence {
        solver: "storage root-find",
        iterations: opts.max_iter,
        mismatch: f.abs(),
    })
}

fn voltage_excess(net: &Network, st: &PowerFlowState) -> Option<f64> {
    let worst = net
        .buses
        .iter()
        .zip(&st.v)
        .map(|(b, v)| (b.v_min - v).max(v - b.v_max))
        .fold(0.0, f64::max);
    (worst > LIMIT_TOL).then_some(worst)
}

fn flow_excess(net: &Network, st: &PowerFlowState) -> Option<f64> {
    let worst = net
        .branches
        .iter()
        .enumerate()
        .filter_map(|(k, br)| {
            br.flow_limit.map(|lim| {
                let from = st.branch_p[k].hypot(st.branch_q[k]);
                let to = st.branch_p_to[k].hypot(st.branch_q_to[k]);
                from.max(to) - lim
            })
        })
        .fold(0.0, f64::max);
    (worst > LIMIT_TOL).then_some(worst)
}
