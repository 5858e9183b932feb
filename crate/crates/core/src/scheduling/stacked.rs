use rayon::prelude::*;

use super::{solve_or_infeasible, ScheduleProblem, ScheduleResult};
use crate::error::{Error, Result};
use crate::linear_models::{build_model, BasePoint, LinearModel, ModelKind, ModelOptions, ReducedModel, X_CHARGE, X_PCC};
use crate::network::Network;
use crate::solver::{maximize, LpOutcome, LpProblem, Matrix, QpProblem};

/// Per-step reduced models chained by the aggregate energy balance
/// `E[t] = E[t−1] + Δt·C[t]`, with `E[T]` pinned to the final target.
pub struct StackedModel {
    pub models: Vec<LinearModel>,
    reduced: Vec<ReducedModel>,
    offsets: Vec<usize>,
    e_offset: usize,
    qp: QpProblem,
}

impl StackedModel {
    pub fn new(net: &Network, prob: &ScheduleProblem, models: Vec<LinearModel>) -> Result<Self> {
        let steps = prob.steps();
        if models.len() != steps {
            return Err(Error::Dimension(format!("{} models for {steps} steps", models.len())));
        }
        let reduced: Vec<ReducedModel> = models.par_iter().map(ReducedModel::new).collect::<Result<_>>()?;
        let mut offsets = Vec::with_capacity(steps);
        let mut n = 0;
        for r in &reduced {
            offsets.push(n);
            n += r.nz();
        }
        let e_offset = n;
        n += steps;

        let mut hess = Matrix::zeros(n, n);
        let mut lin = vec![0.0; n];
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for (t, r) in reduced.iter().enumerate() {
            let o = offsets[t];
            hess[(o + X_PCC, o + X_PCC)] = 2.0 * prob.alpha;
            lin[o + X_PCC] = prob.beta;
            lower[o..o + r.nz()].copy_from_slice(&r.lower);
            upper[o..o + r.nz()].copy_from_slice(&r.upper);
        }
        let cap = net.total_e_cap();
        for t in 0..steps {
            upper[e_offset + t] = cap;
        }
        let mut qp = QpProblem::new(hess, lin).with_bounds(lower, upper);
        for (t, r) in reduced.iter().enumerate() {
            let o = offsets[t];
            for i in 0..r.h.len() {
                let mut row = vec![0.0; n];
                row[o..o + r.nz()].copy_from_slice(r.g.row(i));
                qp.add_inequality(&row, r.h[i]);
            }
            for i in 0..r.f.len() {
                let mut row = vec![0.0; n];
                row[o..o + r.nz()].copy_from_slice(r.e.row(i));
                qp.add_equality(&row, r.f[i]);
            }
            // E[t] − E[t−1] − Δt·C[t] = 0
            let mut row = vec![0.0; n];
            row[e_offset + t] = 1.0;
            row[o + X_CHARGE] = -prob.dt;
            let mut rhs = 0.0;
            if t == 0 {
                rhs = net.initial_energy();
            } else {
                row[e_offset + t - 1] = -1.0;
            }
            qp.add_equality(&row, rhs);
        }
        let mut row = vec![0.0; n];
        row[e_offset + steps - 1] = 1.0;
        qp.add_equality(&row, net.final_energy());
        Ok(Self {
            models,
            reduced,
            offsets,
            e_offset,
            qp,
        })
    }

    pub fn steps(&self) -> usize {
        self.models.len()
    }

    pub fn qp(&self) -> &QpProblem {
        &self.qp
    }

    /// Full model points per step from a stacked solution vector.
    pub fn step_points(&self, w: &[f64]) -> Vec<Vec<f64>> {
        self.reduced
            .iter()
            .enumerate()
            .map(|(t, r)| r.recover(&w[self.offsets[t]..self.offsets[t] + r.nz()]))
            .collect()
    }

    /// Coupling trajectory `(P_pcc[1..T], E_agg[1..T])` of a stacked vector.
    pub fn coupling(&self, w: &[f64]) -> Vec<f64> {
        let steps = self.steps();
        (0..steps)
            .map(|t| w[self.offsets[t] + X_PCC])
            .chain((0..steps).map(|t| w[self.e_offset + t]))
            .collect()
    }

    /// Maximizes `d·coupling` over the stacked feasible set.
    pub fn coupling_support(&self, d: &[f64]) -> Result<Option<Vec<f64>>> {
        let steps = self.steps();
        let n = self.qp.num_vars();
        let m = self.qp.h_ineq.len();
        let mut lower = self.qp.lower.clone();
        let mut upper = self.qp.upper.clone();
        lower.resize(n + m, 0.0);
        upper.resize(n + m, f64::INFINITY);
        let mut lp = LpProblem::new(vec![0.0; n + m]).with_bounds(lower, upper);
        for i in 0..m {
            let mut row = self.qp.g_ineq.row(i).to_vec();
            row.resize(n + m, 0.0);
            row[n + i] = 1.0;
            lp.add_equality(&row, self.qp.h_ineq[i]);
        }
        for i in 0..self.qp.b_eq.len() {
            let mut row = self.qp.a_eq.row(i).to_vec();
            row.resize(n + m, 0.0);
            lp.add_equality(&row, self.qp.b_eq[i]);
        }
        let mut c = vec![0.0; n];
        for t in 0..steps {
            c[self.offsets[t] + X_PCC] = d[t];
            c[self.e_offset + t] = d[steps + t];
        }
        match maximize(&lp, &c)? {
            LpOutcome::Optimal(s) => Ok(Some(self.coupling(&s.x[..n]))),
            LpOutcome::Unbounded => Ok(None),
            LpOutcome::Infeasible => Err(Error::Infeasible("stacked model has no feasible point".into())),
        }
    }

    pub(crate) fn solve(&self) -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
        let w = solve_or_infeasible(&self.qp, "full-linear")?;
        let steps = self.steps();
        let p: Vec<f64> = (0..steps).map(|t| w[self.offsets[t] + X_PCC]).collect();
        let c: Vec<f64> = (0..steps).map(|t| w[self.offsets[t] + X_CHARGE]).collect();
        let pts = self.step_points(&w);
        let units = self
            .models
            .iter()
            .zip(&pts)
            .map(|(m, pt)| {
                (0..)
                    .map_while(|s| m.column(&format!("p_ess[{s}]")))
                    .map(|col| pt[col])
                    .collect()
            })
            .collect();
        Ok((p, c, units))
    }
}

/// QP over all per-step model variables with storage dynamics.
pub fn schedule_full_linear(
    net: &Network,
    prob: &ScheduleProblem,
    kind: ModelKind,
    base: Option<&BasePoint>,
    opts: ModelOptions,
) -> Result<ScheduleResult> {
    let models = (0..prob.steps())
        .into_par_iter()
        .map(|t| build_model(kind, net, base, &prob.profile.injections(net, t), opts))
        .collect::<Result<Vec<_>>>()?;
    let stacked = StackedModel::new(net, prob, models)?;
    let (p, c, units) = stacked.solve()?;
    Ok(ScheduleResult::assemble(
        format!("full:{kind}"),
        net,
        prob,
        p,
        c,
        Some(units),
    ))
}
