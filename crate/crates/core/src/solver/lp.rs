//! Bounded-variable primal simplex on a dense tableau.
//!
//! Solves `min cᵀx  s.t.  A x = b,  l ≤ x ≤ u` where bounds may be infinite.
//! Phase one drives artificial variables out of the basis; phase two optimizes
//! the true cost. Entering variables follow Dantzig pricing with lowest-index
//! tie breaking, and the solver switches permanently to Bland's rule once a
//! run of degenerate pivots is detected.

use crate::error::{Error, Result};
use crate::solver::linalg::{dot, norm_inf, Lu, Matrix};

const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-10;
const DEGENERATE_RUN: usize = 50;
const REFACTOR_EVERY: usize = 64;

#[derive(Clone, Debug)]
pub struct LpProblem {
    pub cost: Vec<f64>,
    pub a_eq: Matrix,
    pub b_eq: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    /// Problem with `n` variables, no rows, and free bounds.
    pub fn new(cost: Vec<f64>) -> Self {
        let n = cost.len();
        Self {
            cost,
            a_eq: Matrix::zeros(0, n),
            b_eq: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn add_equality(&mut self, row: &[f64], rhs: f64) {
        self.a_eq.push_row(row);
        self.b_eq.push(rhs);
    }

    /// Builds `min cᵀz s.t. G z ≤ h` with free `z` by appending one
    /// nonnegative slack per row.
    pub fn from_inequalities(cost: &[f64], g: &Matrix, h: &[f64]) -> Result<Self> {
        let n = cost.len();
        let m = g.rows();
        if g.cols() != n || h.len() != m {
            return Err(Error::Dimension(format!(
                "inequality matrix {}x{} for {} vars and {} rhs",
                g.rows(),
                g.cols(),
                n,
                h.len()
            )));
        }
        let mut c = cost.to_vec();
        c.resize(n + m, 0.0);
        let mut a = Matrix::zeros(m, n + m);
        for i in 0..m {
            a.row_mut(i)[..n].copy_from_slice(g.row(i));
            a[(i, n + i)] = 1.0;
        }
        let mut lower = vec![f64::NEG_INFINITY; n];
        lower.resize(n + m, 0.0);
        Ok(Self {
            cost: c,
            a_eq: a,
            b_eq: h.to_vec(),
            lower,
            upper: vec![f64::INFINITY; n + m],
        })
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.a_eq.cols() != n
            || self.a_eq.rows() != self.b_eq.len()
            || self.lower.len() != n
            || self.upper.len() != n
        {
            return Err(Error::Dimension(format!(
                "LP with {} costs, {}x{} rows, {} rhs, {}/{} bounds",
                n,
                self.a_eq.rows(),
                self.a_eq.cols(),
                self.b_eq.len(),
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| l > u) {
            return Err(Error::Invalid("LP lower bound exceeds upper bound".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row multipliers `y` with `c − Aᵀy` the reduced costs.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    /// Dual objective `bᵀy + Σ d_j·bound_j` with each reduced cost paired
    /// with the bound its sign selects.
    pub fn dual_objective(&self, p: &LpProblem) -> f64 {
        let mut v = dot(&p.b_eq, &self.duals);
        for (j, d) in self.reduced_costs.iter().enumerate() {
            if d.abs() <= 1e-14 {
                continue;
            }
            let bound = if *d > 0.0 { p.lower[j] } else { p.upper[j] };
            if bound.is_finite() {
                v += d * bound;
            } else {
                // reduced cost on an unbounded side is dual-infeasible at
                // tolerance level; evaluate at the primal value instead
                v += d * self.x[j];
            }
        }
        v
    }
}

#[derive(Clone, Debug)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable resting at zero.
    Zero,
}

struct Tableau<'a> {
    p: &'a LpProblem,
    m: usize,
    n: usize,
    /// `B⁻¹ [A | S]` where `S` holds the artificial columns.
    t: Matrix,
    art_sign: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    bland: bool,
    degenerate: usize,
    pivots: usize,
    iterations: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl<'a> Tableau<'a> {
    fn new(p: &'a LpProblem) -> Self {
        let m = p.a_eq.rows();
        let n = p.num_vars();
        let total = n + m;
        let mut x = vec![0.0; total];
        let mut state = vec![VarState::Basic; total];
        for j in 0..n {
            let (l, u) = (p.lower[j], p.upper[j]);
            (x[j], state[j]) = if l.is_finite() {
                (l, VarState::Lower)
            } else if u.is_finite() {
                (u, VarState::Upper)
            } else {
                (0.0, VarState::Zero)
            };
        }
        let r: Vec<f64> = (0..m)
            .map(|i| p.b_eq[i] - dot(p.a_eq.row(i), &x[..n]))
            .collect();
        let art_sign: Vec<f64> = r.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let mut t = Matrix::zeros(m, total);
        for i in 0..m {
            let row = t.row_mut(i);
            for (dst, src) in row[..n].iter_mut().zip(p.a_eq.row(i)) {
                *dst = art_sign[i] * src;
            }
            row[n + i] = 1.0;
            x[n + i] = r[i].abs();
        }
        let mut lower = p.lower.clone();
        lower.resize(total, 0.0);
        let mut upper = p.upper.clone();
        upper.resize(total, f64::INFINITY);
        Self {
            p,
            m,
            n,
            t,
            art_sign,
            basis: (n..total).collect(),
            state,
            x,
            lower,
            upper,
            bland: false,
            degenerate: 0,
            pivots: 0,
            iterations: 0,
        }
    }

    fn total(&self) -> usize {
        self.n + self.m
    }

    fn reduced_costs(&self, c: &[f64]) -> Vec<f64> {
        let mut d = c.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = c[b];
            if cb != 0.0 {
                for (dj, tij) in d.iter_mut().zip(self.t.row(i)) {
                    *dj -= cb * tij;
                }
            }
        }
        d
    }

    fn choose_entering(&self, d: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.total() {
            if self.lower[j] == self.upper[j] {
                continue;
            }
            let dir = match self.state[j] {
                VarState::Basic => continue,
                VarState::Lower if d[j] < -OPT_TOL => 1.0,
                VarState::Upper if d[j] > OPT_TOL => -1.0,
                VarState::Zero if d[j].abs() > OPT_TOL => -d[j].signum(),
                _ => continue,
            };
            if self.bland {
                return Some((j, dir));
            }
            let score = d[j].abs();
            if best.is_none_or(|(_, _, s)| score > s) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn step(&mut self, c: &[f64]) -> Step {
        let d = self.reduced_costs(c);
        let Some((j, dir)) = self.choose_entering(&d) else {
            return Step::Optimal;
        };
        self.iterations += 1;

        // ratio test; `None` row means a bound flip of the entering variable
        let mut theta = self.upper[j] - self.lower[j];
        let mut leave: Option<(usize, bool)> = None;
        let mut leave_key = f64::NEG_INFINITY;
        for i in 0..self.m {
            let tij = self.t[(i, j)];
            if tij.abs() <= PIVOT_TOL {
                continue;
            }
            let b = self.basis[i];
            let delta = -dir * tij;
            let (limit, to_upper) = if delta < 0.0 {
                if !self.lower[b].is_finite() {
                    continue;
                }
                (((self.x[b] - self.lower[b]) / -delta).max(0.0), false)
            } else {
                if !self.upper[b].is_finite() {
                    continue;
                }
                (((self.upper[b] - self.x[b]) / delta).max(0.0), true)
            };
            let key = if self.bland { -(b as f64) } else { tij.abs() };
            let take = match leave {
                None => limit <= theta + 1e-12,
                Some(_) => limit < theta - 1e-12 || (limit <= theta + 1e-12 && key > leave_key),
            };
            if take {
                theta = limit;
                leave = Some((i, to_upper));
                leave_key = key;
            }
        }
        if !theta.is_finite() {
            return Step::Unbounded;
        }

        self.x[j] += dir * theta;
        for i in 0..self.m {
            let b = self.basis[i];
            self.x[b] -= dir * self.t[(i, j)] * theta;
        }

        if theta <= 1e-12 {
            self.degenerate += 1;
            if self.degenerate > DEGENERATE_RUN {
                self.bland = true;
            }
        } else {
            self.degenerate = 0;
        }

        match leave {
            None => {
                self.state[j] = if dir > 0.0 {
                    self.x[j] = self.upper[j];
                    VarState::Upper
                } else {
                    self.x[j] = self.lower[j];
                    VarState::Lower
                };
            }
            Some((r, to_upper)) => {
                let b = self.basis[r];
                if to_upper {
                    self.x[b] = self.upper[b];
                    self.state[b] = VarState::Upper;
                } else {
                    self.x[b] = self.lower[b];
                    self.state[b] = VarState::Lower;
                }
                self.pivot(r, j);
                self.basis[r] = j;
                self.state[j] = VarState::Basic;
                self.pivots += 1;
                if self.pivots % REFACTOR_EVERY == 0 {
                    self.refactor();
                }
            }
        }
        Step::Moved
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let total = self.total();
        let inv = 1.0 / self.t[(r, j)];
        for v in self.t.row_mut(r) {
            *v *= inv;
        }
        let prow = self.t.row(r).to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[(i, j)];
            if f != 0.0 {
                let row = self.t.row_mut(i);
                for k in 0..total {
                    row[k] -= f * prow[k];
                }
                row[j] = 0.0;
            }
        }
    }

    fn column(&self, j: usize) -> Vec<f64> {
        if j < self.n {
            (0..self.m).map(|i| self.p.a_eq[(i, j)]).collect()
        } else {
            let mut col = vec![0.0; self.m];
            col[j - self.n] = self.art_sign[j - self.n];
            col
        }
    }

    fn basis_matrix(&self) -> Matrix {
        let mut bm = Matrix::zeros(self.m, self.m);
        for (k, &b) in self.basis.iter().enumerate() {
            for (i, v) in self.column(b).into_iter().enumerate() {
                bm[(i, k)] = v;
            }
        }
        bm
    }

    /// Rebuilds the tableau and basic values from the original data.
    fn refactor(&mut self) {
        if self.m == 0 {
            return;
        }
        let Ok(lu) = Lu::factor_with_tol(&self.basis_matrix(), 1e-14) else {
            return;
        };
        let total = self.total();
        let mut t = Matrix::zeros(self.m, total);
        for j in 0..total {
            let col = lu.solve(&self.column(j));
            for i in 0..self.m {
                t[(i, j)] = col[i];
            }
        }
        self.t = t;
        self.recompute_basics(&lu);
    }

    fn recompute_basics(&mut self, lu: &Lu) {
        let mut rhs = self.p.b_eq.clone();
        for j in 0..self.total() {
            if self.state[j] == VarState::Basic || self.x[j] == 0.0 {
                continue;
            }
            for (i, v) in self.column(j).into_iter().enumerate() {
                rhs[i] -= v * self.x[j];
            }
        }
        let xb = lu.solve(&rhs);
        for (k, &b) in self.basis.iter().enumerate() {
            self.x[b] = xb[k];
        }
    }

    fn run(&mut self, c: &[f64], limit: usize) -> Result<Step> {
        loop {
            if self.iterations > limit {
                return Err(Error::NonConvergence {
                    solver: "simplex",
                    iterations: self.iterations,
                    mismatch: f64::NAN,
                });
            }
            match self.step(c) {
                Step::Moved => {}
                other => return Ok(other),
            }
        }
    }
}

/// Solves the LP, reporting infeasibility and unboundedness as outcomes.
pub fn solve_lp(p: &LpProblem) -> Result<LpOutcome> {
    p.validate()?;
    let mut tab = Tableau::new(p);
    let (n, m) = (tab.n, tab.m);
    let total = n + m;
    let limit = 50 * (total + m) + 1000;

    let mut phase1 = vec![0.0; total];
    phase1[n..].fill(1.0);
    tab.run(&phase1, limit)?;
    tab.refactor();
    let infeas: f64 = tab.x[n..].iter().sum();
    let scale = 1.0 + norm_inf(&p.b_eq);
    if infeas > FEAS_TOL * scale {
        return Ok(LpOutcome::Infeasible);
    }
    for j in n..total {
        tab.upper[j] = 0.0;
        tab.lower[j] = 0.0;
        if tab.state[j] != VarState::Basic {
            tab.x[j] = 0.0;
            tab.state[j] = VarState::Lower;
        }
    }
    tab.bland = false;
    tab.degenerate = 0;

    let mut phase2 = p.cost.clone();
    phase2.resize(total, 0.0);
    if let Step::Unbounded = tab.run(&phase2, limit)? {
        return Ok(LpOutcome::Unbounded);
    }
    tab.refactor();

    let x: Vec<f64> = tab.x[..n].to_vec();
    let (duals, reduced_costs) = if m == 0 {
        (Vec::new(), p.cost.clone())
    } else {
        let lu = Lu::factor_with_tol(&tab.basis_matrix(), 1e-14)?;
        let cb: Vec<f64> = tab.basis.iter().map(|&b| phase2[b]).collect();
        let y = lu.solve_transpose(&cb);
        let aty = p.a_eq.tr_mul_vec(&y);
        let d = p.cost.iter().zip(aty).map(|(c, a)| c - a).collect();
        (y, d)
    };
    Ok(LpOutcome::Optimal(LpSolution {
        objective: dot(&p.cost, &x),
        x,
        duals,
        reduced_costs,
        iterations: tab.iterations,
    }))
}

/// Maximizes `cᵀx` subject to the problem's constraints (its own cost is
/// ignored). The returned objective is the maximum.
pub fn maximize(p: &LpProblem, c: &[f64]) -> Result<LpOutcome> {
    let mut q = p.clone();
    q.cost = c.iter().map(|v| -v).collect();
    q.cost.resize(p.num_vars(), 0.0);
    Ok(match solve_lp(&q)? {
        LpOutcome::Optimal(mut s) => {
            s.objective = -s.objective;
            LpOutcome::Optimal(s)
        }
        other => other,
    })
}
