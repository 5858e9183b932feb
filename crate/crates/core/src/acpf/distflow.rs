use crate::error::{Error, Result};
use crate::network::{Injections, Network, RootedTree};
use crate::solver::{newton, Matrix, NewtonOptions, NonlinearSystem};

/// Solution of the branch-flow equations on a radial network.
///
/// Branch quantities follow the tree orientation: `p[k]`, `q[k]` are the
/// sending-end flows from the upstream bus of branch `k`.
#[derive(Clone, Debug)]
pub struct DistFlowState {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub ell: Vec<f64>,
    /// `(upstream, downstream)` per branch.
    pub oriented: Vec<(usize, usize)>,
    pub p_slack: f64,
    pub q_slack: f64,
    pub mismatch: f64,
}

impl DistFlowState {
    pub fn losses(&self, net: &Network) -> f64 {
        net.branches.iter().zip(&self.ell).map(|(b, l)| b.r * l).sum()
    }
}

struct DistFlowSystem<'a> {
    net: &'a Network,
    tree: RootedTree,
    inj: &'a Injections,
    /// Column of `u` for each bus; `None` at the root.
    u_col: Vec<Option<usize>>,
}

impl DistFlowSystem<'_> {
    fn n_branch(&self) -> usize {
        self.tree.oriented.len()
    }

    fn u(&self, x: &[f64], bus: usize) -> f64 {
        self.u_col[bus].map_or(1.0, |c| x[c])
    }

    fn slack_cols(&self) -> (usize, usize) {
        let base = 3 * self.n_branch() + self.net.num_buses() - 1;
        (base, base + 1)
    }
}

impl NonlinearSystem for DistFlowSystem<'_> {
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let n = self.net.num_buses();
        let m = self.n_branch();
        let (c_p0, c_q0) = self.slack_cols();
        let mut fp: Vec<f64> = (0..n).map(|i| -self.inj.p[i]).collect();
        let mut fq: Vec<f64> = (0..n).map(|i| -self.inj.q[i]).collect();
        fp[self.tree.root] = -x[c_p0];
        fq[self.tree.root] = -x[c_q0];
        let mut drop = vec![0.0; m];
        let mut current = vec![0.0; m];
        for (k, &(i, j)) in self.tree.oriented.iter().enumerate() {
            let br = &self.net.branches[k];
            let (pk, qk, lk) = (x[3 * k], x[3 * k + 1], x[3 * k + 2]);
            fp[i] += pk;
            fq[i] += qk;
            fp[j] -= pk - br.r * lk;
            fq[j] -= qk - br.x * lk;
            let (ui, uj) = (self.u(x, i), self.u(x, j));
            drop[k] = ui - uj - 2.0 * (br.r * pk + br.x * qk) + (br.r * br.r + br.x * br.x) * lk;
            current[k] = lk * ui - pk * pk - qk * qk;
        }
        fp.into_iter().chain(fq).chain(drop).chain(current).collect()
    }

    fn jacobian(&self, x: &[f64]) -> Matrix {
        let n = self.net.num_buses();
        let m = self.n_branch();
        let dim = 4 * n - 2;
        let mut jac = Matrix::zeros(dim, dim);
        let (c_p0, c_q0) = self.slack_cols();
        jac[(self.tree.root, c_p0)] = -1.0;
        jac[(n + self.tree.root, c_q0)] = -1.0;
        for (k, &(i, j)) in self.tree.oriented.iter().enumerate() {
            let br = &self.net.branches[k];
            let (cp, cq, cl) = (3 * k, 3 * k + 1, 3 * k + 2);
            let (pk, qk, lk) = (x[cp], x[cq], x[cl]);
            jac[(i, cp)] += 1.0;
            jac[(n + i, cq)] += 1.0;
            jac[(j, cp)] -= 1.0;
            jac[(j, cl)] += br.r;
            jac[(n + j, cq)] -= 1.0;
            jac[(n + j, cl)] += br.x;
            let rd = 2 * n + k;
            jac[(rd, cp)] = -2.0 * br.r;
            jac[(rd, cq)] = -2.0 * br.x;
            jac[(rd, cl)] = br.r * br.r + br.x * br.x;
            if let Some(c) = self.u_col[i] {
                jac[(rd, c)] += 1.0;
            }
            if let Some(c) = self.u_col[j] {
                jac[(rd, c)] -= 1.0;
            }
            let rc = 2 * n + m + k;
            jac[(rc, cp)] = -2.0 * pk;
            jac[(rc, cq)] = -2.0 * qk;
            jac[(rc, cl)] = self.u(x, i);
            if let Some(c) = self.u_col[i] {
                jac[(rc, c)] = lk;
            }
        }
        jac
    }
}

/// Newton solve of the branch-flow model. Rejects meshed networks.
pub fn solve_distflow(net: &Network, inj: &Injections) -> Result<DistFlowState> {
    let tree = RootedTree::new(net)?;
    let n = net.num_buses();
    if inj.len() != n {
        return Err(Error::Dimension(format!("{} injections for {n} buses", inj.len())));
    }
    let m = tree.oriented.len();
    let mut u_col = vec![None; n];
    let mut next = 3 * m;
    for (bus, col) in u_col.iter_mut().enumerate() {
        if bus != tree.root {
            *col = Some(next);
            next += 1;
        }
    }
    let sys = DistFlowSystem {
        net,
        tree,
        inj,
        u_col,
    };
    // Lossless start: each branch carries the demand of its subtree.
    let mut x0 = vec![0.0; 4 * n - 2];
    for (k, &(_, j)) in sys.tree.oriented.iter().enumerate() {
        let sub = sys.tree.subtree(j);
        let pk: f64 = -sub.iter().map(|&b| inj.p[b]).sum::<f64>();
        let qk: f64 = -sub.iter().map(|&b| inj.q[b]).sum::<f64>();
        x0[3 * k] = pk;
        x0[3 * k + 1] = qk;
        x0[3 * k + 2] = pk * pk + qk * qk;
    }
    for c in sys.u_col.iter().flatten() {
        x0[*c] = 1.0;
    }
    let (c_p0, c_q0) = sys.slack_cols();
    x0[c_p0] = -inj.p.iter().enumerate().filter(|(b, _)| *b != sys.tree.root).map(|(_, p)| p).sum::<f64>();
    x0[c_q0] = -inj.q.iter().enumerate().filter(|(b, _)| *b != sys.tree.root).map(|(_, q)| q).sum::<f64>();

    let rep = newton(&sys, x0, NewtonOptions::default(), "DistFlow")?;
    let x = rep.x;
    Ok(DistFlowState {
        u: (0..n).map(|b| sys.u(&x, b)).collect(),
        p: (0..m).map(|k| x[3 * k]).collect(),
        q: (0..m).map(|k| x[3 * k + 1]).collect(),
        ell: (0..m).map(|k| x[3 * k + 2]).collect(),
        oriented: sys.tree.oriented.clone(),
        p_slack: x[c_p0],
        q_slack: x[c_q0],
        mismatch: rep.mismatch,
    })
}
