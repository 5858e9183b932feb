//! Dual active-set method (Goldfarb–Idnani) for convex quadratic programs
//!
//! `min ½ xᵀH x + fᵀx  s.t.  A x = b,  G x ≤ h,  l ≤ x ≤ u`
//!
//! with `H` symmetric positive semidefinite. The method starts from the
//! unconstrained minimizer and adds the most violated constraint at each
//! stage, keeping dual feasibility; linearly dependent and degenerate
//! constraints are handled by pure dual steps. Semidefinite Hessians get a
//! small ridge of size ε = 1e-9·max(1, ‖H‖) along their flat directions,
//! which selects the least-norm
//! point among equal-cost solutions.

use crate::error::{Error, Result};
use crate::solver::linalg::{dot, norm_inf, Matrix};

const RIDGE: f64 = 1e-9;
const VIOLATION_TOL: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct QpProblem {
    pub hessian: Matrix,
    pub linear: Vec<f64>,
    pub a_eq: Matrix,
    pub b_eq: Vec<f64>,
    pub g_ineq: Matrix,
    pub h_ineq: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl QpProblem {
    pub fn new(hessian: Matrix, linear: Vec<f64>) -> Self {
        let n = linear.len();
        Self {
            hessian,
            linear,
            a_eq: Matrix::zeros(0, n),
            b_eq: Vec::new(),
            g_ineq: Matrix::zeros(0, n),
            h_ineq: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.linear.len()
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

    pub fn add_inequality(&mut self, row: &[f64], rhs: f64) {
        self.g_ineq.push_row(row);
        self.h_ineq.push(rhs);
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, &self.hessian.mul_vec(x)) + dot(&self.linear, x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.hessian.mul_vec(x);
        for (gi, fi) in g.iter_mut().zip(&self.linear) {
            *gi += fi;
        }
        g
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let ok = self.hessian.rows() == n
            && self.hessian.cols() == n
            && self.a_eq.cols() == n
            && self.a_eq.rows() == self.b_eq.len()
            && self.g_ineq.cols() == n
            && self.g_ineq.rows() == self.h_ineq.len()
            && self.lower.len() == n
            && self.upper.len() == n;
        if !ok {
            return Err(Error::Dimension(format!("QP with {n} variables")));
        }
        if !self.hessian.is_symmetric(1e-12 * (1.0 + self.hessian.max_abs())) {
            return Err(Error::Invalid("QP Hessian is not symmetric".into()));
        }
        Ok(())
    }

    /// Largest violation of any constraint at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut v: f64 = 0.0;
        for i in 0..self.a_eq.rows() {
            v = v.max((dot(self.a_eq.row(i), x) - self.b_eq[i]).abs());
        }
        for i in 0..self.g_ineq.rows() {
            v = v.max(dot(self.g_ineq.row(i), x) - self.h_ineq[i]);
        }
        for (j, xj) in x.iter().enumerate() {
            v = v.max(self.lower[j] - xj).max(xj - self.upper[j]);
        }
        v
    }
}

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Multipliers with `∇f + Aᵀλ_eq + Gᵀλ_in − λ_lo + λ_up = 0`.
    pub eq_multipliers: Vec<f64>,
    pub ineq_multipliers: Vec<f64>,
    pub lower_multipliers: Vec<f64>,
    pub upper_multipliers: Vec<f64>,
    pub iterations: usize,
}

impl QpSolution {
    /// Stationarity residual `‖∇f + Aᵀλ_eq + Gᵀλ_in − λ_lo + λ_up‖∞`.
    pub fn stationarity(&self, p: &QpProblem) -> f64 {
        let mut r = p.gradient(&self.x);
        let ae = p.a_eq.tr_mul_vec(&self.eq_multipliers);
        let gi = p.g_ineq.tr_mul_vec(&self.ineq_multipliers);
        for j in 0..r.len() {
            r[j] += ae[j] + gi[j] - self.lower_multipliers[j] + self.upper_multipliers[j];
        }
        norm_inf(&r)
    }
}

#[derive(Clone, Debug)]
pub enum QpOutcome {
    Optimal(QpSolution),
    Infeasible,
}

impl QpOutcome {
    pub fn optimal(self) -> Option<QpSolution> {
        match self {
            QpOutcome::Optimal(s) => Some(s),
            QpOutcome::Infeasible => None,
        }
    }
}

struct Constraint {
    /// Constraint is `n·x + b ≥ 0` (or `= 0` for equalities).
    n: Vec<f64>,
    b: f64,
    origin: Origin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Origin {
    Eq(usize),
    Ineq(usize),
    Lower(usize),
    Upper(usize),
}

fn collect_constraints(p: &QpProblem) -> Vec<Constraint> {
    let n = p.num_vars();
    let mut out = Vec::new();
    for i in 0..p.a_eq.rows() {
        out.push(Constraint {
            n: p.a_eq.row(i).to_vec(),
            b: -p.b_eq[i],
            origin: Origin::Eq(i),
        });
    }
    for i in 0..p.g_ineq.rows() {
        out.push(Constraint {
            n: p.g_ineq.row(i).iter().map(|v| -v).collect(),
            b: p.h_ineq[i],
            origin: Origin::Ineq(i),
        });
    }
    for j in 0..n {
        if p.lower[j].is_finite() {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            out.push(Constraint {
                n: e,
                b: -p.lower[j],
                origin: Origin::Lower(j),
            });
        }
        if p.upper[j].is_finite() {
            let mut e = vec![0.0; n];
            e[j] = -1.0;
            out.push(Constraint {
                n: e,
                b: p.upper[j],
                origin: Origin::Upper(j),
            });
        }
    }
    out
}

/// Lower Cholesky factor; pivots below `floor` are raised to it, which adds
/// the ridge only along (numerically) flat directions.
fn cholesky(a: &Matrix, floor: f64) -> Result<Matrix> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -floor * 1e3 || d.is_nan() {
            return Err(Error::Invalid("QP Hessian is not positive semidefinite".into()));
        }
        let d = d.max(floor);
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Working state: `J` (columns span the primal space, the first `q` tied to
/// the active constraints) and the upper-triangular `R` with `Jᵀ N = [R; 0]`.
struct Factors {
    n: usize,
    j: Vec<f64>,
    r: Vec<f64>,
    q: usize,
    r_norm: f64,
}

impl Factors {
    fn jget(&self, row: usize, col: usize) -> f64 {
        self.j[row * self.n + col]
    }

    fn rget(&self, row: usize, col: usize) -> f64 {
        self.r[row * self.n + col]
    }

    /// `d = Jᵀ np`.
    fn project(&self, np: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut d = vec![0.0; n];
        for (row, &v) in np.iter().enumerate() {
            if v != 0.0 {
                let jr = &self.j[row * n..(row + 1) * n];
                for (dk, jk) in d.iter_mut().zip(jr) {
                    *dk += jk * v;
                }
            }
        }
        d
    }

    /// Primal step direction `z = J₂ d₂`.
    fn primal_dir(&self, d: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|row| (self.q..n).map(|k| self.jget(row, k) * d[k]).sum())
            .collect()
    }

    /// Dual step direction `r = R⁻¹ d₁`.
    fn dual_dir(&self, d: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.q];
        for i in (0..self.q).rev() {
            let mut s = d[i];
            for k in i + 1..self.q {
                s -= self.rget(i, k) * r[k];
            }
            r[i] = s / self.rget(i, i);
        }
        r
    }

    /// Appends a constraint whose projection is `d`; false when it is
    /// numerically dependent on the active set.
    fn add(&mut self, d: &mut [f64]) -> bool {
        let n = self.n;
        for jc in (self.q + 1..n).rev() {
            let (mut cc, mut ss) = (d[jc - 1], d[jc]);
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            d[jc] = 0.0;
            ss /= h;
            cc /= h;
            if cc < 0.0 {
                cc = -cc;
                ss = -ss;
                d[jc - 1] = -h;
            } else {
                d[jc - 1] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in 0..n {
                let t1 = self.j[k * n + jc - 1];
                let t2 = self.j[k * n + jc];
                let a = t1 * cc + t2 * ss;
                self.j[k * n + jc - 1] = a;
                self.j[k * n + jc] = xny * (t1 + a) - t2;
            }
        }
        self.q += 1;
        for i in 0..self.q {
            self.r[i * n + self.q - 1] = d[i];
        }
        let last = d[self.q - 1].abs();
        if last <= f64::EPSILON * self.r_norm.max(1.0) * 1e3 {
            return false;
        }
        self.r_norm = self.r_norm.max(last);
        true
    }

    /// Removes active position `l` and restores the triangular form.
    fn drop(&mut self, l: usize) {
        let n = self.n;
        for col in l..self.q - 1 {
            for i in 0..n {
                self.r[i * n + col] = self.r[i * n + col + 1];
            }
        }
        for i in 0..n {
            self.r[i * n + self.q - 1] = 0.0;
        }
        self.q -= 1;
        for jc in l..self.q {
            let (mut cc, mut ss) = (self.rget(jc, jc), self.rget(jc + 1, jc));
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            cc /= h;
            ss /= h;
            self.r[(jc + 1) * n + jc] = 0.0;
            if cc < 0.0 {
                self.r[jc * n + jc] = -h;
                cc = -cc;
                ss = -ss;
            } else {
                self.r[jc * n + jc] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in jc + 1..self.q {
                let t1 = self.r[jc * n + k];
                let t2 = self.r[(jc + 1) * n + k];
                let a = t1 * cc + t2 * ss;
                self.r[jc * n + k] = a;
                self.r[(jc + 1) * n + k] = xny * (t1 + a) - t2;
            }
            for k in 0..n {
                let t1 = self.j[k * n + jc];
                let t2 = self.j[k * n + jc + 1];
                let a = t1 * cc + t2 * ss;
                self.j[k * n + jc] = a;
                self.j[k * n + jc + 1] = xny * (a + t1) - t2;
            }
        }
    }
}

/// Solves the QP; returns `Infeasible` when no point satisfies the constraints.
pub fn solve_qp(p: &QpProblem) -> Result<QpOutcome> {
    p.validate()?;
    let n = p.num_vars();
    let cons = collect_constraints(p);
    let eps = RIDGE * p.hessian.max_abs().max(1.0);
    let l = cholesky(&p.hessian, eps)?;
    // J = L⁻ᵀ, upper triangular
    let mut j = vec![0.0; n * n];
    for col in 0..n {
        // solve Lᵀ y = e_col
        let mut y = vec![0.0; n];
        for i in (0..=col).rev() {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in i + 1..=col {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in 0..n {
            j[i * n + col] = y[i];
        }
    }
    let mut fac = Factors {
        n,
        j,
        r: vec![0.0; n * n],
        q: 0,
        r_norm: 1.0,
    };
    // unconstrained minimizer x = −J Jᵀ f
    let jt_f = fac.project(&p.linear);
    let mut x: Vec<f64> = (0..n)
        .map(|row| -(0..n).map(|k| fac.jget(row, k) * jt_f[k]).sum::<f64>())
        .collect();

    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let n_eq = p.a_eq.rows();
    let scale_x = |x: &[f64]| 1.0 + norm_inf(x);

    for (k, c) in cons.iter().enumerate().take(n_eq) {
        let mut d = fac.project(&c.n);
        let z = fac.primal_dir(&d);
        let r = fac.dual_dir(&d);
        let s = dot(&c.n, &x) + c.b;
        let zn = dot(&z, &c.n);
        if zn.abs() <= 1e-12 * norm_inf(&c.n).max(1e-300) * norm_inf(&c.n) {
            if s.abs() > 1e-9 * (1.0 + c.b.abs()) {
                return Ok(QpOutcome::Infeasible);
            }
            continue;
        }
        let t2 = -s / zn;
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += t2 * zi;
        }
        for (ui, ri) in u.iter_mut().zip(&r) {
            *ui -= t2 * ri;
        }
        if !fac.add(&mut d) {
            return Err(Error::Invalid("dependent equality constraints in QP".into()));
        }
        active.push(k);
        u.push(t2);
    }
    let eq_active = active.len();

    let max_iter = 50 * (n + cons.len()) + 100;
    let mut iterations = 0;
    let mut is_active = vec![false; cons.len()];
    for &k in &active {
        is_active[k] = true;
    }
    let mut excluded = vec![false; cons.len()];
    loop {
        // most violated inequality
        let sx = scale_x(&x);
        let mut pick: Option<(usize, f64)> = None;
        for (k, c) in cons.iter().enumerate().skip(n_eq) {
            if is_active[k] || excluded[k] {
                continue;
            }
            let s = dot(&c.n, &x) + c.b;
            let tol = VIOLATION_TOL * (1.0 + c.b.abs() + norm_inf(&c.n) * sx);
            if s < -tol && pick.is_none_or(|(_, v)| s < v) {
                pick = Some((k, s));
            }
        }
        let Some((pk, mut sp)) = pick else {
            return Ok(QpOutcome::Optimal(finish(p, &cons, &active, &u, x, iterations)));
        };
        let np = &cons[pk].n;
        let mut u_plus = 0.0;
        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::NonConvergence {
                    solver: "dual active-set QP",
                    iterations,
                    mismatch: -sp,
                });
            }
            let mut d = fac.project(np);
            let z = fac.primal_dir(&d);
            let r = fac.dual_dir(&d);
            let mut t1 = f64::INFINITY;
            let mut drop_at = None;
            for k in eq_active..fac.q {
                if r[k] > 0.0 {
                    let ratio = u[k] / r[k];
                    if ratio < t1 {
                        t1 = ratio;
                        drop_at = Some(k);
                    }
                }
            }
            let zn = dot(&z, np);
            let t2 = if norm_inf(&z) > 1e-14 * norm_inf(np) && zn > 0.0 {
                -sp / zn
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Ok(QpOutcome::Infeasible);
            }
            for (ui, ri) in u.iter_mut().zip(&r) {
                *ui -= t * ri;
            }
            u_plus += t;
            if t2.is_finite() {
                for (xi, zi) in x.iter_mut().zip(&z) {
                    *xi += t * zi;
                }
            }
            if t2.is_finite() && t2 <= t1 {
                if fac.add(&mut d) {
                    active.push(pk);
                    u.push(u_plus);
                    is_active[pk] = true;
                    excluded.iter_mut().for_each(|e| *e = false);
                } else {
                    // numerically dependent: undo the column and skip it
                    fac.drop(fac.q - 1);
                    excluded[pk] = true;
                }
                break;
            }
            let l = drop_at.expect("finite partial step has a blocking constraint");
            fac.drop(l);
            is_active[active[l]] = false;
            active.remove(l);
            u.remove(l);
            sp = dot(np, &x) + cons[pk].b;
            if sp >= 0.0 {
                break;
            }
        }
    }
}

fn finish(
    p: &QpProblem,
    cons: &[Constraint],
    active: &[usize],
    u: &[f64],
    x: Vec<f64>,
    iterations: usize,
) -> QpSolution {
    let n = p.num_vars();
    let mut sol = QpSolution {
        objective: p.objective(&x),
        x,
        eq_multipliers: vec![0.0; p.a_eq.rows()],
        ineq_multipliers: vec![0.0; p.g_ineq.rows()],
        lower_multipliers: vec![0.0; n],
        upper_multipliers: vec![0.0; n],
        iterations,
    };
    // ∇f = Σ u_k n_k over the active set
    for (pos, &k) in active.iter().enumerate() {
        let v = u[pos];
        match cons[k].origin {
            Origin::Eq(i) => sol.eq_multipliers[i] = -v,
            Origin::Ineq(i) => sol.ineq_multipliers[i] = v.max(0.0),
            Origin::Lower(j) => sol.lower_multipliers[j] = v.max(0.0),
            Origin::Upper(j) => sol.upper_multipliers[j] = v.max(0.0),
        }
    }
    sol
}
