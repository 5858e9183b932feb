use rayon::prelude::*;

use super::{ScheduleProblem, ScheduleResult, SolveStatus, StackedModel};
use crate::acpf::{solve_ac_with, AcOptions, PowerFlowState};
use crate::error::{Error, Result};
use crate::linear_models::{build_lin_ac, BasePoint, StorageSplit};
use crate::network::{Injections, Network};

#[derive(Clone, Copy, Debug)]
pub struct BenchmarkOptions {
    pub max_iter: usize,
    /// Stop once the linearized and AC exchanges differ by less than this.
    pub tol: f64,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            max_iter: 20,
            tol: 1e-6,
        }
    }
}

fn unit_charges(net: &Network, charge: f64) -> Vec<f64> {
    net.storage_shares().iter().map(|s| s * charge).collect()
}

/// PCC exchange implied by an AC state: slack injection minus the fixed
/// slack-bus injection plus any storage charging at the slack bus.
pub(crate) fn pcc_from_state(net: &Network, fixed: &Injections, units: &[f64], st: &PowerFlowState) -> f64 {
    let at_slack: f64 = net
        .storage
        .iter()
        .zip(units)
        .filter(|(s, _)| s.bus == net.slack)
        .map(|(_, c)| c)
        .sum();
    st.p[net.slack] - fixed.p[net.slack] + at_slack
}

/// Exact-AC dispatch by sequential linearization: each round rebuilds the
/// linearized AC model at the current per-step AC solutions, solves the
/// stacked QP, and re-solves AC at the new storage dispatch. Storage units
/// share the aggregate power in proportion to their ratings.
pub fn schedule_ac_benchmark(
    net: &Network,
    prob: &ScheduleProblem,
    opts: &BenchmarkOptions,
) -> Result<ScheduleResult> {
    let steps = prob.steps();
    let fixed: Vec<Injections> = (0..steps).map(|t| prob.profile.injections(net, t)).collect();
    let solve_all = |charges: &[f64], prev: Option<&[PowerFlowState]>| -> Result<Vec<PowerFlowState>> {
        (0..steps)
            .into_par_iter()
            .map(|t| {
                let inj = net.with_storage(&fixed[t], &unit_charges(net, charges[t]));
                let ac = AcOptions {
                    init: prev.map(|p| &p[t]),
                    ..AcOptions::default()
                };
                solve_ac_with(net, &inj, &ac)
            })
            .collect()
    };
    let mut charges = vec![0.0; steps];
    let mut states = solve_all(&charges, None)?;
    let mut gap = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        let models = (0..steps)
            .into_par_iter()
            .map(|t| {
                let base = BasePoint {
                    state: states[t].clone(),
                    id: format!("sl{iter}t{t}"),
                };
                build_lin_ac(net, &base, &fixed[t], StorageSplit::Proportional)
            })
            .collect::<Result<Vec<_>>>()?;
        let stacked = StackedModel::new(net, prob, models)?;
        let (p_lin, c, _) = stacked.solve()?;
        charges = c;
        states = solve_all(&charges, Some(&states))?;
        let p_ac: Vec<f64> = (0..steps)
            .map(|t| pcc_from_state(net, &fixed[t], &unit_charges(net, charges[t]), &states[t]))
            .collect();
        gap = p_lin
            .iter()
            .zip(&p_ac)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if gap < opts.tol {
            let mut r = ScheduleResult::assemble("ac".into(), net, prob, p_ac, charges, None);
            r.iterations = iter;
            r.status = SolveStatus::Optimal;
            return Ok(r);
        }
    }
    Err(Error::NonConvergence {
        solver: "AC benchmark",
        iterations: opts.max_iter,
        mismatch: gap,
    })
}
