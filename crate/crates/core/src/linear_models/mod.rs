//! Linear power-flow approximations in the standard form `A x + B y = c`,
//! `x ∈ X`, `y ∈ Y`, with coupling variables `x = (p_pcc, ess_charge)`.

mod builder;
mod dc;
mod features;
mod lin_ac;
mod lindistflow;
mod reduce;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use dc::{build_dc, build_enhanced_dc, LossVariant};
pub use features::{feature_table, ModelFeatures};
pub use lin_ac::build_lin_ac;
pub use lindistflow::build_lindistflow;
pub use reduce::ReducedModel;

use crate::acpf::{ac_residual, solve_ac, PowerFlowState};
use crate::error::{Error, Result};
use crate::network::{DayProfile, Injections, Network};
use crate::solver::linalg::norm_inf;
use crate::solver::Matrix;

/// Threshold below which a modeled branch loss counts as negative.
pub const NEGATIVE_LOSS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[serde(rename = "lindistflow")]
    LinDistFlow,
    Dc,
    DcEnhanced,
    LinAc,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::LinDistFlow,
        ModelKind::Dc,
        ModelKind::DcEnhanced,
        ModelKind::LinAc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::LinDistFlow => "lindistflow",
            ModelKind::Dc => "dc",
            ModelKind::DcEnhanced => "dc-enhanced",
            ModelKind::LinAc => "lin-ac",
        }
    }

    pub fn is_lossless(self) -> bool {
        matches!(self, ModelKind::LinDistFlow | ModelKind::Dc)
    }

    pub fn needs_base(self) -> bool {
        !self.is_lossless()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lindistflow" => Ok(ModelKind::LinDistFlow),
            "dc" => Ok(ModelKind::Dc),
            "dc-enhanced" | "dc_enhanced" => Ok(ModelKind::DcEnhanced),
            "lin-ac" | "lin_ac" => Ok(ModelKind::LinAc),
            _ => Err(Error::Invalid(format!("unknown model kind '{s}'"))),
        }
    }
}

/// How storage units share the aggregate charging power `ess_charge`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StorageSplit {
    /// Each unit is a free variable; only the sum is coupled.
    #[default]
    Free,
    /// Each unit takes a share proportional to its power rating.
    Proportional,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ModelOptions {
    pub split: StorageSplit,
    pub loss_variant: LossVariant,
}

/// Converged AC operating point used as the linearization anchor.
#[derive(Clone, Debug)]
pub struct BasePoint {
    pub state: PowerFlowState,
    pub id: String,
}

impl BasePoint {
    /// Checks the residual contract of a supplied state.
    pub fn new(state: PowerFlowState, net: &Network, id: impl Into<String>) -> Result<Self> {
        if state.v.len() != net.num_buses() {
            return Err(Error::Dimension("base state does not match network".into()));
        }
        let mismatch = norm_inf(&ac_residual(&state, net));
        if mismatch > 1e-8 {
            return Err(Error::Invalid(format!(
                "base point is not a power-flow solution (mismatch {mismatch:e})"
            )));
        }
        Ok(Self {
            state,
            id: id.into(),
        })
    }

    /// Solves AC at the given fixed injections with storage idle.
    pub fn solve(net: &Network, inj: &Injections, id: impl Into<String>) -> Result<Self> {
        Ok(Self {
            state: solve_ac(net, inj)?,
            id: id.into(),
        })
    }

    /// AC solution at the profile's mean load and PV levels with idle storage.
    pub fn from_profile(net: &Network, profile: &DayProfile) -> Result<Self> {
        let (load, pv) = profile.mean();
        Self::solve(net, &net.injections(load, pv), "profile-mean")
    }
}

/// Affine function of the model columns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AffineExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn eval(&self, point: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(c, a)| a * point[*c]).sum::<f64>()
    }
}

/// Standard-form linear model of one time step.
///
/// Columns are ordered `[x; y]`: the coupling variables come first.
#[derive(Clone, Debug)]
pub struct LinearModel {
    /// `None` for hand-assembled models.
    pub kind: Option<ModelKind>,
    pub a: Matrix,
    pub b: Matrix,
    pub c: Vec<f64>,
    pub x_lower: Vec<f64>,
    pub x_upper: Vec<f64>,
    pub y_lower: Vec<f64>,
    pub y_upper: Vec<f64>,
    pub var_index: BTreeMap<String, usize>,
    /// Column of each bus's active injection `p_i`.
    pub bus_p: Vec<usize>,
    /// Modeled active and reactive loss per branch; empty for lossless kinds.
    pub branch_p_loss: Vec<AffineExpr>,
    pub branch_q_loss: Vec<AffineExpr>,
    pub num_branches: usize,
    pub base_id: Option<String>,
}

/// Index of the PCC power within `x`.
pub const X_PCC: usize = 0;
/// Index of the aggregate storage charging power within `x`.
pub const X_CHARGE: usize = 1;

impl LinearModel {
    /// Assembles a model from raw parts without physical metadata.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        a: Matrix,
        b: Matrix,
        c: Vec<f64>,
        x_bounds: (Vec<f64>, Vec<f64>),
        y_bounds: (Vec<f64>, Vec<f64>),
    ) -> Result<Self> {
        let (nx, ny, m) = (a.cols(), b.cols(), c.len());
        if a.rows() != m || b.rows() != m || x_bounds.0.len() != nx || x_bounds.1.len() != nx
            || y_bounds.0.len() != ny || y_bounds.1.len() != ny
        {
            return Err(Error::Dimension("model parts disagree in size".into()));
        }
        let var_index = (0..nx)
            .map(|i| (format!("x[{i}]"), i))
            .chain((0..ny).map(|j| (format!("y[{j}]"), nx + j)))
            .collect();
        Ok(Self {
            kind: None,
            a,
            b,
            c,
            x_lower: x_bounds.0,
            x_upper: x_bounds.1,
            y_lower: y_bounds.0,
            y_upper: y_bounds.1,
            var_index,
            bus_p: Vec::new(),
            branch_p_loss: Vec::new(),
            branch_q_loss: Vec::new(),
            num_branches: 0,
            base_id: None,
        })
    }

    pub fn nx(&self) -> usize {
        self.a.cols()
    }

    pub fn ny(&self) -> usize {
        self.b.cols()
    }

    pub fn num_cols(&self) -> usize {
        self.nx() + self.ny()
    }

    pub fn num_rows(&self) -> usize {
        self.c.len()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    /// Column names in column order.
    pub fn column_names(&self) -> Vec<String> {
        let mut names = vec![String::new(); self.num_cols()];
        for (name, &c) in &self.var_index {
            names[c] = name.clone();
        }
        names
    }

    pub fn lower(&self) -> Vec<f64> {
        self.x_lower.iter().chain(&self.y_lower).copied().collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.x_upper.iter().chain(&self.y_upper).copied().collect()
    }

    /// `[A B]` as one matrix over all columns.
    pub fn joined(&self) -> Matrix {
        let (nx, ny) = (self.nx(), self.ny());
        let mut m = Matrix::zeros(self.num_rows(), nx + ny);
        for r in 0..self.num_rows() {
            let row = m.row_mut(r);
            row[..nx].copy_from_slice(self.a.row(r));
            row[nx..].copy_from_slice(self.b.row(r));
        }
        m
    }

    /// `A x + B y − c` at a full column vector.
    pub fn residual(&self, point: &[f64]) -> Vec<f64> {
        let (x, y) = point.split_at(self.nx());
        let ax = self.a.mul_vec(x);
        let by = self.b.mul_vec(y);
        (0..self.num_rows()).map(|r| ax[r] + by[r] - self.c[r]).collect()
    }

    /// Largest bound violation of a full column vector.
    pub fn bound_violation(&self, point: &[f64]) -> f64 {
        let (lo, hi) = (self.lower(), self.upper());
        point
            .iter()
            .zip(lo.iter().zip(&hi))
            .map(|(v, (l, h))| (l - v).max(v - h).max(0.0))
            .fold(0.0, f64::max)
    }

    /// `Σ_i p_i` at a point.
    pub fn injection_sum(&self, point: &[f64]) -> f64 {
        self.bus_p.iter().map(|&c| point[c]).sum()
    }

    /// Solves the equality rows for every column not fixed by `fixed` or by
    /// equal bounds. Fails when the remaining columns are not determined.
    pub fn complete(&self, fixed: &[(usize, f64)]) -> Result<Vec<f64>> {
        let n = self.num_cols();
        let (lo, hi) = (self.lower(), self.upper());
        let mut known: Vec<Option<f64>> = (0..n).map(|c| (lo[c] == hi[c]).then_some(lo[c])).collect();
        for &(c, v) in fixed {
            known[c] = Some(v);
        }
        let unknown: Vec<usize> = (0..n).filter(|&c| known[c].is_none()).collect();
        let joined = self.joined();
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(self.num_rows());
        let mut rhs = Vec::with_capacity(self.num_rows());
        for r in 0..self.num_rows() {
            let full = joined.row(r);
            let mut b = self.c[r];
            for c in 0..n {
                if let Some(v) = known[c] {
                    b -= full[c] * v;
                }
            }
            rows.push(unknown.iter().map(|&c| full[c]).collect());
            rhs.push(b);
        }
        let sol = solve_consistent(rows, rhs, unknown.len())?;
        let mut point: Vec<f64> = known.iter().map(|v| v.unwrap_or(0.0)).collect();
        for (k, &c) in unknown.iter().enumerate() {
            point[c] = sol[k];
        }
        Ok(point)
    }
}

/// Gaussian elimination with full pivoting for a possibly overdetermined but
/// consistent system with a unique solution.
fn solve_consistent(mut rows: Vec<Vec<f64>>, mut rhs: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    let m = rows.len();
    let scale = rows
        .iter()
        .flatten()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .max(1.0);
    let tol = 1e-11 * scale;
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    while rank < n.min(m) {
        let (mut pr, mut pc, mut best) = (rank, rank, 0.0);
        for (r, row) in rows.iter().enumerate().skip(rank) {
            for (c, v) in row.iter().enumerate().skip(rank) {
                if v.abs() > best {
                    (pr, pc, best) = (r, c, v.abs());
                }
            }
        }
        if best <= tol {
            break;
        }
        rows.swap(rank, pr);
        rhs.swap(rank, pr);
        for row in rows.iter_mut() {
            row.swap(rank, pc);
        }
        col_perm.swap(rank, pc);
        let piv = rows[rank].clone();
        let prhs = rhs[rank];
        for r in rank + 1..m {
            let f = rows[r][rank] / piv[rank];
            if f != 0.0 {
                for c in rank..n {
                    rows[r][c] -= f * piv[c];
                }
                rhs[r] -= f * prhs;
            }
        }
        rank += 1;
    }
    if rank < n {
        return Err(Error::Singular {
            column: col_perm[rank],
            pivot: 0.0,
        });
    }
    let rhs_scale = rhs.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if rhs[n..].iter().any(|v| v.abs() > 1e-9 * rhs_scale) {
        return Err(Error::Infeasible("inconsistent equality rows".into()));
    }
    let mut z = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|c| rows[k][c] * z[c]).sum();
        z[k] = (rhs[k] - s) / rows[k][k];
    }
    let mut out = vec![0.0; n];
    for (k, &c) in col_perm.iter().enumerate() {
        out[c] = z[k];
    }
    Ok(out)
}

/// Builds any model kind for one step with fixed injections `inj`.
pub fn build_model(
    kind: ModelKind,
    net: &Network,
    base: Option<&BasePoint>,
    inj: &Injections,
    opts: ModelOptions,
) -> Result<LinearModel> {
    let need_base = || {
        base.ok_or_else(|| Error::Invalid(format!("model '{kind}' needs a base point")))
    };
    match kind {
        ModelKind::LinDistFlow => build_lindistflow(net, inj, opts.split),
        ModelKind::Dc => build_dc(net, inj, opts.split),
        ModelKind::DcEnhanced => {
            build_enhanced_dc(net, need_base()?, inj, opts.split, opts.loss_variant).map(|(m, _)| m)
        }
        ModelKind::LinAc => build_lin_ac(net, need_base()?, inj, opts.split),
    }
}

/// Modeled per-branch losses and negative-loss flags at a model point.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LossReport {
    pub p_loss: Vec<f64>,
    pub q_loss: Vec<f64>,
    pub negative_loss_flags: Vec<bool>,
}

impl LossReport {
    pub fn any_negative(&self) -> bool {
        self.negative_loss_flags.iter().any(|f| *f)
    }

    pub fn total_p(&self) -> f64 {
        self.p_loss.iter().sum()
    }
}

/// Evaluates the modeled losses. Lossless kinds report zeros and never flag.
pub fn detect_negative_losses(model: &LinearModel, point: &[f64]) -> LossReport {
    let m = model.num_branches;
    if model.branch_p_loss.is_empty() {
        return LossReport {
            p_loss: vec![0.0; m],
            q_loss: vec![0.0; m],
            negative_loss_flags: vec![false; m],
        };
    }
    let p_loss: Vec<f64> = model.branch_p_loss.iter().map(|e| e.eval(point)).collect();
    let q_loss = model.branch_q_loss.iter().map(|e| e.eval(point)).collect();
    let negative_loss_flags = p_loss.iter().map(|l| *l < -NEGATIVE_LOSS_TOL).collect();
    LossReport {
        p_loss,
        q_loss,
        negative_loss_flags,
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
        }
        assert!("ac".parse::<ModelKind>().is_err());
    }

    #[test]
    fn consistent_solver_handles_redundant_rows() {
        let rows = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![2.0, 0.0]];
        let x = solve_consistent(rows, vec![3.0, 1.0, 4.0], 2).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        let bad = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![2.0, 0.0]];
        assert!(solve_consistent(bad, vec![3.0, 1.0, 5.0], 2).is_err());
    }
}
