//! Day-ahead dispatch with a quadratic cost on the PCC exchange, solved over
//! an aggregated envelope, over the stacked linear model, or against AC via
//! sequential linearization.

mod benchmark;
mod stacked;

use serde::Serialize;

pub use benchmark::{schedule_ac_benchmark, BenchmarkOptions};
pub use stacked::{schedule_full_linear, StackedModel};

use crate::aggregation::FlexibilityEnvelope;
use crate::error::{Error, Result};
use crate::network::{DayProfile, Network};
use crate::solver::{solve_qp, Matrix, QpOutcome, QpProblem};

/// Day-ahead problem data.
#[derive(Clone, Debug)]
pub struct ScheduleProblem {
    pub profile: DayProfile,
    pub dt: f64,
    /// Quadratic and linear cost on `P_pcc` per step.
    pub alpha: f64,
    pub beta: f64,
}

impl ScheduleProblem {
    pub fn new(profile: &DayProfile, steps: usize, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !beta.is_finite() {
            return Err(Error::Invalid(format!("invalid cost α={alpha}, β={beta}")));
        }
        Ok(Self {
            profile: profile.truncate(steps)?,
            dt: 1.0,
            alpha,
            beta,
        })
    }

    pub fn steps(&self) -> usize {
        self.profile.len()
    }

    pub fn cost(&self, p_pcc: &[f64]) -> f64 {
        p_pcc.iter().map(|p| self.alpha * p * p + self.beta * p).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Sequential linearization stopped at the iteration cap.
    IterationLimit,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScheduleResult {
    pub method: String,
    pub p_pcc: Vec<f64>,
    /// Aggregate stored energy, `T + 1` entries starting with the initial one.
    pub e_agg: Vec<f64>,
    /// Aggregate charging power per step.
    pub charge: Vec<f64>,
    /// Charging power per storage unit and step.
    pub unit_power: Vec<Vec<f64>>,
    pub objective: f64,
    /// `P_pcc − net demand − charge` as implied by the model used.
    pub model_losses: Vec<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
}

impl ScheduleResult {
    pub(crate) fn assemble(
        method: String,
        net: &Network,
        prob: &ScheduleProblem,
        p_pcc: Vec<f64>,
        charge: Vec<f64>,
        unit_power: Option<Vec<Vec<f64>>>,
    ) -> Self {
        let mut e_agg = vec![net.initial_energy()];
        for c in &charge {
            let last = *e_agg.last().expect("non-empty");
            e_agg.push(last + prob.dt * c);
        }
        let shares = net.storage_shares();
        let unit_power = unit_power.unwrap_or_else(|| {
            charge
                .iter()
                .map(|c| shares.iter().map(|s| s * c).collect())
                .collect()
        });
        let demand = prob.profile.net_demand(net);
        let model_losses = (0..p_pcc.len())
            .map(|t| p_pcc[t] - demand[t] - charge[t])
            .collect();
        Self {
            method,
            objective: prob.cost(&p_pcc),
            p_pcc,
            e_agg,
            charge,
            unit_power,
            model_losses,
            status: SolveStatus::Optimal,
            iterations: 1,
        }
    }

    /// Aggregate SOC fractions.
    pub fn soc(&self, net: &Network) -> Vec<f64> {
        let cap = net.total_e_cap();
        self.e_agg.iter().map(|e| e / cap).collect()
    }

    /// CSV `hour,p_pcc,e_agg,objective_contrib`, where `e_agg` is the energy
    /// at the end of the hour.
    pub fn to_csv(&self, prob: &ScheduleProblem) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["hour", "p_pcc", "e_agg", "objective_contrib"])?;
        for t in 0..self.p_pcc.len() {
            let p = self.p_pcc[t];
            w.write_record([
                prob.profile.hours[t].to_string(),
                fmt_num(p),
                fmt_num(self.e_agg[t + 1]),
                fmt_num(prob.alpha * p * p + prob.beta * p),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

impl ScheduleResult {
    /// Reads a schedule written by [`ScheduleResult::to_csv`]. Storage power
    /// and model losses are rebuilt from the energy column and the profile.
    pub fn from_csv<R: std::io::Read>(reader: R, net: &Network, prob: &ScheduleProblem) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(reader);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        if header != ["hour", "p_pcc", "e_agg", "objective_contrib"] {
            return Err(Error::Invalid(format!("unexpected schedule header {header:?}")));
        }
        let mut p_pcc = Vec::new();
        let mut e_end = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Invalid(format!("bad number {:?} in schedule", &rec[i])))
            };
            p_pcc.push(num(1)?);
            e_end.push(num(2)?);
        }
        if p_pcc.len() != prob.steps() {
            return Err(Error::Dimension(format!(
                "schedule has {} steps, profile {}",
                p_pcc.len(),
                prob.steps()
            )));
        }
        let e0 = net.initial_energy();
        let charge = (0..e_end.len())
            .map(|t| (e_end[t] - if t == 0 { e0 } else { e_end[t - 1] }) / prob.dt)
            .collect();
        Ok(Self::assemble("csv".into(), net, prob, p_pcc, charge, None))
    }
}

/// Fixed-precision number formatting shared by all CSV outputs.
pub fn fmt_num(v: f64) -> String {
    let s = format!("{v:.10}");
    if s == "-0.0000000000" {
        "0.0000000000".into()
    } else {
        s
    }
}

fn solve_or_infeasible(qp: &QpProblem, what: &str) -> Result<Vec<f64>> {
    match solve_qp(qp)? {
        QpOutcome::Optimal(sol) => Ok(sol.x),
        QpOutcome::Infeasible => Err(Error::Infeasible(format!("{what} schedule has no feasible point"))),
    }
}

/// QP over the envelope's halfspaces in `(P_pcc, E_agg)`.
pub fn schedule_over_envelope(
    net: &Network,
    prob: &ScheduleProblem,
    env: &FlexibilityEnvelope,
) -> Result<ScheduleResult> {
    let steps = prob.steps();
    if env.dim() != 2 * steps {
        return Err(Error::Dimension(format!(
            "envelope has {} coordinates for a {steps}-step horizon",
            env.dim()
        )));
    }
    let n = 2 * steps;
    let mut hess = Matrix::zeros(n, n);
    let mut lin = vec![0.0; n];
    for t in 0..steps {
        hess[(t, t)] = 2.0 * prob.alpha;
        lin[t] = prob.beta;
    }
    let mut qp = QpProblem::new(hess, lin);
    for hs in &env.halfspaces {
        qp.add_inequality(&hs.n, hs.h);
    }
    let w = solve_or_infeasible(&qp, "envelope")?;
    let e0 = env.initial_energy.unwrap_or_else(|| net.initial_energy());
    let dt = env.dt.unwrap_or(prob.dt);
    let p_pcc = w[..steps].to_vec();
    let charge = (0..steps)
        .map(|t| {
            let prev = if t == 0 { e0 } else { w[steps + t - 1] };
            (w[steps + t] - prev) / dt
        })
        .collect();
    Ok(ScheduleResult::assemble(
        format!("envelope:{}", env.provenance),
        net,
        prob,
        p_pcc,
        charge,
        None,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::{build_envelope, EnvelopeOptions};
    use crate::linear_models::ModelKind;

    /// Copper plate with one unit: p_max 1, e_cap 2, SOC 50 % → 50 %.
    pub(crate) fn copper_plate(load: f64) -> Network {
        Network::from_json(&format!(
            r#"{{"buses": [{{"id": 0, "kind": "slack", "p_load": {load}}}],
                "branches": [],
                "storage": [{{"bus": 0, "p_max": 1.0, "e_cap": 2.0, "soc_init": 0.5, "soc_final": 0.5}}]}}"#
        ))
        .unwrap()
    }

    #[test]
    fn two_step_hand_oracle() {
        // loads (2, 0): minimize P1² + P2² with P1 + P2 = 2, |P_t − load_t| ≤ 1
        let net = copper_plate(1.0);
        let prof = DayProfile::new(vec![2.0, 0.0], vec![0.0, 0.0]).unwrap();
        let prob = ScheduleProblem::new(&prof, 2, 1.0, 0.0).unwrap();
        let env = build_envelope(&net, ModelKind::Dc, None, &prof, 2, &EnvelopeOptions::default()).unwrap();
        let r = schedule_over_envelope(&net, &prob, &env).unwrap();
        assert!((r.p_pcc[0] - 1.0).abs() < 1e-7 && (r.p_pcc[1] - 1.0).abs() < 1e-7);
        assert!((r.objective - 2.0).abs() < 1e-6);
        assert!((r.e_agg[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_load_is_flat() {
        let net = copper_plate(1.0);
        let prof = DayProfile::constant(6, 1.0, 0.0);
        let prob = ScheduleProblem::new(&prof, 6, 1.0, 0.0).unwrap();
        let env = build_envelope(&net, ModelKind::Dc, None, &prof, 6, &EnvelopeOptions::default()).unwrap();
        let r = schedule_over_envelope(&net, &prob, &env).unwrap();
        assert!(r.p_pcc.iter().all(|p| (p - 1.0).abs() < 1e-7));
    }

    #[test]
    fn csv_header() {
        let net = copper_plate(1.0);
        let prof = DayProfile::constant(2, 1.0, 0.0);
        let prob = ScheduleProblem::new(&prof, 2, 1.0, 0.0).unwrap();
        let env = build_envelope(&net, ModelKind::Dc, None, &prof, 2, &EnvelopeOptions::default()).unwrap();
        let r = schedule_over_envelope(&net, &prob, &env).unwrap();
        let csv = r.to_csv(&prob).unwrap();
        assert!(csv.starts_with("hour,p_pcc,e_agg,objective_contrib\n0,"));
        let back = ScheduleResult::from_csv(csv.as_bytes(), &net, &prob).unwrap();
        for t in 0..2 {
            assert!((back.p_pcc[t] - r.p_pcc[t]).abs() < 1e-9);
            assert!((back.charge[t] - r.charge[t]).abs() < 1e-9);
        }
    }
}
