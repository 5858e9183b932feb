use std::collections::BTreeMap;

use super::{AffineExpr, LinearModel, ModelKind, StorageSplit};
use crate::error::{Error, Result};
use crate::network::{Injections, Network};
use crate::solver::Matrix;

const INF: f64 = f64::INFINITY;

/// Collects named columns and sparse equality rows.
pub(super) struct ModelBuilder {
    names: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    nx: usize,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
}

/// Columns shared by every model kind.
pub(super) struct Coupling {
    pub p_pcc: usize,
    pub p_ess: Vec<usize>,
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            nx: 0,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    fn push(&mut self, name: String, lo: f64, hi: f64) -> usize {
        self.names.push(name);
        self.lower.push(lo);
        self.upper.push(hi);
        self.names.len() - 1
    }

    pub fn add_x(&mut self, name: impl Into<String>, lo: f64, hi: f64) -> usize {
        assert_eq!(self.nx, self.names.len(), "coupling columns come first");
        self.nx += 1;
        self.push(name.into(), lo, hi)
    }

    pub fn add_y(&mut self, name: impl Into<String>, lo: f64, hi: f64) -> usize {
        self.push(name.into(), lo, hi)
    }

    pub fn add_free(&mut self, name: impl Into<String>) -> usize {
        self.add_y(name, -INF, INF)
    }

    pub fn add_fixed(&mut self, name: impl Into<String>, value: f64) -> usize {
        self.add_y(name, value, value)
    }

    /// Adds `Σ coef·col = rhs`; repeated columns are summed.
    pub fn add_row(&mut self, terms: &[(usize, f64)], rhs: f64) {
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for &(c, a) in terms {
            match row.iter_mut().find(|(rc, _)| *rc == c) {
                Some(e) => e.1 += a,
                None => row.push((c, a)),
            }
        }
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    /// Coupling columns `(p_pcc, ess_charge)`, per-unit storage powers and the
    /// split rows.
    pub fn add_coupling(&mut self, net: &Network, split: StorageSplit) -> Coupling {
        let total = net.total_p_max();
        let p_pcc = self.add_x("p_pcc", -INF, INF);
        let charge = self.add_x("ess_charge", -total, total);
        let p_ess: Vec<usize> = net
            .storage
            .iter()
            .enumerate()
            .map(|(k, s)| self.add_y(format!("p_ess[{k}]"), -s.p_max, s.p_max))
            .collect();
        match split {
            StorageSplit::Free => {
                let mut terms = vec![(charge, 1.0)];
                terms.extend(p_ess.iter().map(|&c| (c, -1.0)));
                self.add_row(&terms, 0.0);
            }
            StorageSplit::Proportional => {
                for (&c, share) in p_ess.iter().zip(net.storage_shares()) {
                    self.add_row(&[(c, 1.0), (charge, -share)], 0.0);
                }
            }
        }
        Coupling { p_pcc, p_ess }
    }

    /// Rows tying the bus injection columns to fixed injections, storage
    /// charging and the PCC exchange. `q` columns are optional; the slack
    /// reactive injection stays free.
    pub fn add_injection_rows(
        &mut self,
        net: &Network,
        inj: &Injections,
        cp: &Coupling,
        p_cols: &[usize],
        q_cols: Option<&[usize]>,
    ) -> Result<()> {
        if inj.len() != net.num_buses() {
            return Err(Error::Dimension(format!(
                "{} injections for {} buses",
                inj.len(),
                net.num_buses()
            )));
        }
        for (i, &pc) in p_cols.iter().enumerate() {
            let mut terms = vec![(pc, 1.0)];
            for (k, s) in net.storage.iter().enumerate() {
                if s.bus == i {
                    terms.push((cp.p_ess[k], 1.0));
                }
            }
            if i == net.slack {
                terms.push((cp.p_pcc, -1.0));
            }
            self.add_row(&terms, inj.p[i]);
        }
        if let Some(q_cols) = q_cols {
            for (i, &qc) in q_cols.iter().enumerate() {
                if i != net.slack {
                    self.add_row(&[(qc, 1.0)], inj.q[i]);
                }
            }
        }
        Ok(())
    }

    pub fn finish(
        self,
        kind: ModelKind,
        bus_p: Vec<usize>,
        branch_p_loss: Vec<AffineExpr>,
        branch_q_loss: Vec<AffineExpr>,
        num_branches: usize,
        base_id: Option<String>,
    ) -> LinearModel {
        let nx = self.nx;
        let ny = self.names.len() - nx;
        let m = self.rows.len();
        let mut a = Matrix::zeros(m, nx);
        let mut b = Matrix::zeros(m, ny);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                if c < nx {
                    a.row_mut(r)[c] += v;
                } else {
                    b.row_mut(r)[c - nx] += v;
                }
            }
        }
        let var_index: BTreeMap<String, usize> = self
            .names
            .into_iter()
            .enumerate()
            .map(|(c, n)| (n, c))
            .collect();
        debug_assert_eq!(var_index.len(), nx + ny, "column names must be unique");
        LinearModel {
            kind: Some(kind),
            a,
            b,
            c: self.rhs,
            x_lower: self.lower[..nx].to_vec(),
            x_upper: self.upper[..nx].to_vec(),
            y_lower: self.lower[nx..].to_vec(),
            y_upper: self.upper[nx..].to_vec(),
            var_index,
            bus_p,
            branch_p_loss,
            branch_q_loss,
            num_branches,
            base_id,
        }
    }
}

/// Box for a branch flow column from its optional apparent-power limit.
pub(super) fn flow_bounds(limit: Option<f64>) -> (f64, f64) {
    limit.map_or((-INF, INF), |s| (-s, s))
}
