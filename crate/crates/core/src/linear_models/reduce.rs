//! Equality elimination: rewrites `A x + B y = c` with bounds into an
//! inequality system over `z = [x; y_free]`, keeping a map back to all columns.

use super::LinearModel;
use crate::error::{Error, Result};
use crate::solver::{maximize, LpOutcome, LpProblem, Matrix};

#[derive(Clone, Debug)]
pub struct ReducedModel {
    pub nx: usize,
    /// Original column of each reduced variable.
    pub z_cols: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// `G z ≤ h`, from the bounds of eliminated columns.
    pub g: Matrix,
    pub h: Vec<f64>,
    /// `E z = f`; only the coupling columns appear here.
    pub e: Matrix,
    pub f: Vec<f64>,
    /// Eliminated column `col = constant − coefs·z`.
    dependent: Vec<(usize, f64, Vec<f64>)>,
    fixed: Vec<(usize, f64)>,
    num_cols: usize,
}

impl ReducedModel {
    pub fn new(model: &LinearModel) -> Result<Self> {
        let nx = model.nx();
        let n = model.num_cols();
        let (lo, hi) = (model.lower(), model.upper());
        let fixed: Vec<(usize, f64)> = (nx..n).filter(|&c| lo[c] == hi[c]).map(|c| (c, lo[c])).collect();
        let is_fixed = |c: usize| lo[c] == hi[c] && c >= nx;
        let joined = model.joined();
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(model.num_rows());
        let mut rhs = Vec::with_capacity(model.num_rows());
        for r in 0..model.num_rows() {
            let mut row = joined.row(r).to_vec();
            let mut b = model.c[r];
            for &(c, v) in &fixed {
                b -= row[c] * v;
                row[c] = 0.0;
            }
            rows.push(row);
            rhs.push(b);
        }
        let scale = rows.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
        let tol = 1e-11 * scale;

        let candidates: Vec<usize> = (nx..n).filter(|&c| !is_fixed(c)).collect();
        let mut col_done = vec![false; n];
        let mut row_done = vec![false; rows.len()];
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        loop {
            let mut best = (0.0, 0, 0);
            for (r, row) in rows.iter().enumerate() {
                if row_done[r] {
                    continue;
                }
                for &c in &candidates {
                    if !col_done[c] && row[c].abs() > best.0 {
                        best = (row[c].abs(), r, c);
                    }
                }
            }
            let (mag, pr, pc) = best;
            if mag <= tol {
                break;
            }
            let inv = 1.0 / rows[pr][pc];
            for v in rows[pr].iter_mut() {
                *v *= inv;
            }
            rhs[pr] *= inv;
            rows[pr][pc] = 1.0;
            let pivot_row = rows[pr].clone();
            let pivot_rhs = rhs[pr];
            for r in 0..rows.len() {
                if r == pr {
                    continue;
                }
                let f = rows[r][pc];
                if f != 0.0 {
                    for (v, p) in rows[r].iter_mut().zip(&pivot_row) {
                        *v -= f * p;
                    }
                    rows[r][pc] = 0.0;
                    rhs[r] -= f * pivot_rhs;
                }
            }
            row_done[pr] = true;
            col_done[pc] = true;
            pivots.push((pr, pc));
        }

        let z_cols: Vec<usize> = (0..nx)
            .chain(candidates.iter().copied().filter(|&c| !col_done[c]))
            .collect();
        let nz = z_cols.len();
        let dependent: Vec<(usize, f64, Vec<f64>)> = pivots
            .iter()
            .map(|&(r, c)| {
                let coefs = z_cols.iter().map(|&zc| rows[r][zc]).collect();
                (c, rhs[r], coefs)
            })
            .collect();

        // Rows left without a pivot involve only the coupling columns.
        let mut x_rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            if row_done[r] {
                continue;
            }
            let coefs: Vec<f64> = row[..nx].to_vec();
            if coefs.iter().all(|v| v.abs() <= tol) {
                if rhs[r].abs() > 1e-9 * scale.max(rhs[r].abs()) {
                    return Err(Error::Infeasible(format!(
                        "equality rows are inconsistent (residual {:e})",
                        rhs[r]
                    )));
                }
                continue;
            }
            x_rows.push((coefs, rhs[r]));
        }
        let x_rows = independent_rows(x_rows, tol);
        let mut e = Matrix::zeros(0, nz);
        let mut f = Vec::new();
        for (coefs, b) in x_rows {
            let mut row = vec![0.0; nz];
            row[..nx].copy_from_slice(&coefs);
            e.push_row(&row);
            f.push(b);
        }

        let mut g = Matrix::zeros(0, nz);
        let mut h = Vec::new();
        for (c, k, coefs) in &dependent {
            let trivial = coefs.iter().all(|v| v.abs() <= tol);
            // lo ≤ k − coefs·z ≤ hi
            if lo[*c].is_finite() {
                if trivial {
                    if k < &(lo[*c] - 1e-9) {
                        return Err(Error::Infeasible(format!("column {c} below its bound")));
                    }
                } else {
                    g.push_row(coefs);
                    h.push(k - lo[*c]);
                }
            }
            if hi[*c].is_finite() {
                if trivial {
                    if k > &(hi[*c] + 1e-9) {
                        return Err(Error::Infeasible(format!("column {c} above its bound")));
                    }
                } else {
                    let neg: Vec<f64> = coefs.iter().map(|v| -v).collect();
                    g.push_row(&neg);
                    h.push(hi[*c] - k);
                }
            }
        }
        Ok(Self {
            nx,
            lower: z_cols.iter().map(|&c| lo[c]).collect(),
            upper: z_cols.iter().map(|&c| hi[c]).collect(),
            z_cols,
            g,
            h,
            e,
            f,
            dependent,
            fixed,
            num_cols: n,
        })
    }

    pub fn nz(&self) -> usize {
        self.z_cols.len()
    }

    /// Full column vector of the original model at `z`.
    pub fn recover(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_cols];
        for (k, &c) in self.z_cols.iter().enumerate() {
            out[c] = z[k];
        }
        for &(c, v) in &self.fixed {
            out[c] = v;
        }
        for (c, k, coefs) in &self.dependent {
            out[*c] = k - coefs.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
        }
        out
    }

    /// Extracts `z` from a full column vector.
    pub fn restrict(&self, point: &[f64]) -> Vec<f64> {
        self.z_cols.iter().map(|&c| point[c]).collect()
    }

    /// LP `min cost·z` over the reduced set, with one slack per inequality.
    pub fn lp(&self, cost: &[f64]) -> LpProblem {
        let nz = self.nz();
        let m = self.h.len();
        let mut full_cost = cost.to_vec();
        full_cost.resize(nz + m, 0.0);
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        lower.resize(nz + m, 0.0);
        upper.resize(nz + m, f64::INFINITY);
        let mut p = LpProblem::new(full_cost).with_bounds(lower, upper);
        for r in 0..m {
            let mut row = self.g.row(r).to_vec();
            row.resize(nz + m, 0.0);
            row[nz + r] = 1.0;
            p.add_equality(&row, self.h[r]);
        }
        for r in 0..self.f.len() {
            let mut row = self.e.row(r).to_vec();
            row.resize(nz + m, 0.0);
            p.add_equality(&row, self.f[r]);
        }
        p
    }

    /// `max dir·x` over the coupling columns. `Ok(None)` when unbounded.
    pub fn support(&self, dir: &[f64]) -> Result<Option<(f64, Vec<f64>)>> {
        let mut c = dir.to_vec();
        c.resize(self.nz(), 0.0);
        let p = self.lp(&vec![0.0; self.nz()]);
        let mut c_full = c;
        c_full.resize(p.num_vars(), 0.0);
        match maximize(&p, &c_full)? {
            LpOutcome::Optimal(sol) => {
                let z = sol.x[..self.nz()].to_vec();
                let val = dir.iter().zip(&z).map(|(a, b)| a * b).sum();
                Ok(Some((val, z)))
            }
            LpOutcome::Unbounded => Ok(None),
            LpOutcome::Infeasible => Err(Error::Infeasible("model has no feasible point".into())),
        }
    }

    /// Every constraint as a halfspace `a·z ≤ b`: inequalities, finite box
    /// bounds and each equality as two opposing rows.
    pub fn halfspaces(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let nz = self.nz();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for r in 0..self.h.len() {
            a.push(self.g.row(r).to_vec());
            b.push(self.h[r]);
        }
        for k in 0..nz {
            let mut unit = vec![0.0; nz];
            if self.upper[k].is_finite() {
                unit[k] = 1.0;
                a.push(unit.clone());
                b.push(self.upper[k]);
            }
            if self.lower[k].is_finite() {
                unit[k] = -1.0;
                a.push(unit);
                b.push(-self.lower[k]);
            }
        }
        for r in 0..self.f.len() {
            let row = self.e.row(r).to_vec();
            a.push(row.iter().map(|v| -v).collect());
            b.push(-self.f[r]);
            a.push(row);
            b.push(self.f[r]);
        }
        (a, b)
    }
}

/// Keeps a linearly independent subset of rows (elimination with partial
/// pivoting on a copy), rejecting inconsistent combinations.
fn independent_rows(rows: Vec<(Vec<f64>, f64)>, tol: f64) -> Vec<(Vec<f64>, f64)> {
    let mut basis: Vec<(Vec<f64>, f64, usize)> = Vec::new();
    let mut kept = Vec::new();
    for (row, b) in rows {
        let mut r = row.clone();
        let mut rb = b;
        for (br, bb, pc) in &basis {
            let f = r[*pc] / br[*pc];
            if f != 0.0 {
                for (v, p) in r.iter_mut().zip(br) {
                    *v -= f * p;
                }
                rb -= f * bb;
            }
        }
        let (pc, mag) = r
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
        if mag > tol {
            basis.push((r, rb, pc));
            kept.push((row, b));
        }
    }
    kept
}
