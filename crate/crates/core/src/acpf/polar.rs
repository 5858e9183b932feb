use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::network::{build_ybus, AdmittanceMatrix, Injections, Network};
use crate::solver::{newton, Matrix, NewtonOptions, NonlinearSystem};

/// Operating point of the network in polar coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerFlowState {
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    /// Net injections (generation positive); the slack entries are solved for.
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// From-side flows `P_ij`, `Q_ij` in file orientation.
    pub branch_p: Vec<f64>,
    pub branch_q: Vec<f64>,
    /// To-side flows `P_ji`, `Q_ji`.
    pub branch_p_to: Vec<f64>,
    pub branch_q_to: Vec<f64>,
    /// Squared branch current magnitudes.
    pub ell: Vec<f64>,
    pub mismatch: f64,
    pub iterations: usize,
}

impl PowerFlowState {
    pub fn flat(n_bus: usize, n_branch: usize) -> Self {
        Self {
            v: vec![1.0; n_bus],
            theta: vec![0.0; n_bus],
            p: vec![0.0; n_bus],
            q: vec![0.0; n_bus],
            branch_p: vec![0.0; n_branch],
            branch_q: vec![0.0; n_branch],
            branch_p_to: vec![0.0; n_branch],
            branch_q_to: vec![0.0; n_branch],
            ell: vec![0.0; n_branch],
            mismatch: 0.0,
            iterations: 0,
        }
    }

    /// Voltage magnitudes squared.
    pub fn u(&self) -> Vec<f64> {
        self.v.iter().map(|v| v * v).collect()
    }

    pub fn injections(&self) -> Injections {
        Injections {
            p: self.p.clone(),
            q: self.q.clone(),
        }
    }
}

/// Computed bus injections `(p_i, q_i)` from the polar power-flow equations.
/// The sum runs over all `j` including `i` itself (`θ_ii = 0`).
pub fn bus_power(y: &AdmittanceMatrix, v: &[f64], theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = y.dim();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        let (mut pi, mut qi) = (0.0, 0.0);
        for j in 0..n {
            let yij = y.get(i, j);
            if yij.re == 0.0 && yij.im == 0.0 {
                continue;
            }
            let (s, c) = (theta[i] - theta[j]).sin_cos();
            pi += v[j] * (yij.re * c + yij.im * s);
            qi += v[j] * (yij.re * s - yij.im * c);
        }
        p[i] = v[i] * pi;
        q[i] = v[i] * qi;
    }
    (p, q)
}

/// `S = V ∘ conj(Y V)`, the complex-form counterpart of [`bus_power`].
pub fn complex_bus_power(y: &AdmittanceMatrix, v: &[f64], theta: &[f64]) -> Vec<Complex64> {
    let vc: Vec<Complex64> = v
        .iter()
        .zip(theta)
        .map(|(m, a)| Complex64::from_polar(*m, *a))
        .collect();
    let i = y.mul(&vc);
    vc.iter().zip(i).map(|(vi, ii)| vi * ii.conj()).collect()
}

/// Jacobian of [`bus_power`] over all buses.
///
/// Rows are `[p_0..p_{n-1}, q_0..q_{n-1}]`, columns `[θ_0..θ_{n-1}, v_0..v_{n-1}]`.
pub fn polar_jacobian(y: &AdmittanceMatrix, v: &[f64], theta: &[f64]) -> Matrix {
    let n = y.dim();
    let (p, q) = bus_power(y, v, theta);
    let mut jac = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let yij = y.get(i, j);
            let (g, b) = (yij.re, yij.im);
            if i == j {
                jac[(i, i)] = -q[i] - b * v[i] * v[i];
                jac[(i, n + i)] = p[i] / v[i] + g * v[i];
                jac[(n + i, i)] = p[i] - g * v[i] * v[i];
                jac[(n + i, n + i)] = q[i] / v[i] - b * v[i];
            } else if g != 0.0 || b != 0.0 {
                let (s, c) = (theta[i] - theta[j]).sin_cos();
                jac[(i, j)] = v[i] * v[j] * (g * s - b * c);
                jac[(i, n + j)] = v[i] * (g * c + b * s);
                jac[(n + i, j)] = -v[i] * v[j] * (g * c + b * s);
                jac[(n + i, n + j)] = v[i] * (g * s - b * c);
            }
        }
    }
    jac
}

/// Mismatch `p_spec − p_calc` then `q_spec − q_calc` over non-slack buses.
pub fn ac_residual(state: &PowerFlowState, net: &Network) -> Vec<f64> {
    let y = build_ybus(net);
    let (p, q) = bus_power(&y, &state.v, &state.theta);
    let ns = non_slack(net);
    ns.iter()
        .map(|&i| state.p[i] - p[i])
        .chain(ns.iter().map(|&i| state.q[i] - q[i]))
        .collect()
}

fn non_slack(net: &Network) -> Vec<usize> {
    (0..net.num_buses()).filter(|&i| i != net.slack).collect()
}

#[derive(Clone, Debug, Default)]
pub struct BranchFlows {
    pub p_from: Vec<f64>,
    pub q_from: Vec<f64>,
    pub p_to: Vec<f64>,
    pub q_to: Vec<f64>,
    pub ell: Vec<f64>,
}

/// Directed branch flows and squared currents at a voltage profile.
///
/// Complex power leaving bus `i` is `S_ij = V_i · conj(I_ij)` with
/// `I_ij = y_ij (V_i − V_j)`; the printed `S_ij = Y_i I*_ij` form is read as
/// this product.
pub fn branch_flows(state: &PowerFlowState, net: &Network) -> BranchFlows {
    let m = net.num_branches();
    let mut out = BranchFlows {
        p_from: vec![0.0; m],
        q_from: vec![0.0; m],
        p_to: vec![0.0; m],
        q_to: vec![0.0; m],
        ell: vec![0.0; m],
    };
    let (v, th) = (&state.v, &state.theta);
    for (k, br) in net.branches.iter().enumerate() {
        let (g, b) = br.series_admittance();
        let (i, j) = (br.from, br.to);
        let (s, c) = (th[i] - th[j]).sin_cos();
        let vv = v[i] * v[j];
        out.p_from[k] = g * v[i] * v[i] - vv * (g * c + b * s);
        out.q_from[k] = -b * v[i] * v[i] - vv * (g * s - b * c);
        // θ_ji = −θ_ij
        out.p_to[k] = g * v[j] * v[j] - vv * (g * c - b * s);
        out.q_to[k] = -b * v[j] * v[j] - vv * (-g * s - b * c);
        let dv2 = v[i] * v[i] + v[j] * v[j] - 2.0 * vv * c;
        out.ell[k] = (g * g + b * b) * dv2.max(0.0);
    }
    out
}

/// `Σ r_ij ℓ_ij` over all branches.
pub fn total_losses(state: &PowerFlowState, net: &Network) -> f64 {
    net.branches
        .iter()
        .zip(&state.ell)
        .map(|(br, l)| br.r * l)
        .sum()
}

#[derive(Clone, Debug, Default)]
pub struct AcOptions<'a> {
    pub newton: NewtonOptions,
    /// Warm start; flat start when absent.
    pub init: Option<&'a PowerFlowState>,
}

struct PolarSystem<'a> {
    y: AdmittanceMatrix,
    ns: Vec<usize>,
    slack: usize,
    slack_v: f64,
    inj: &'a Injections,
}

impl PolarSystem<'_> {
    fn expand(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.y.dim();
        let m = self.ns.len();
        let mut v = vec![0.0; n];
        let mut th = vec![0.0; n];
        v[self.slack] = self.slack_v;
        for (k, &i) in self.ns.iter().enumerate() {
            th[i] = x[k];
            v[i] = x[m + k];
        }
        (v, th)
    }
}

impl NonlinearSystem for PolarSystem<'_> {
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let (v, th) = self.expand(x);
        let (p, q) = bus_power(&self.y, &v, &th);
        self.ns
            .iter()
            .map(|&i| p[i] - self.inj.p[i])
            .chain(self.ns.iter().map(|&i| q[i] - self.inj.q[i]))
            .collect()
    }

    fn jacobian(&self, x: &[f64]) -> Matrix {
        let (v, th) = self.expand(x);
        let full = polar_jacobian(&self.y, &v, &th);
        let n = self.y.dim();
        let m = self.ns.len();
        let idx: Vec<usize> = self
            .ns
            .iter()
            .copied()
            .chain(self.ns.iter().map(|i| n + i))
            .collect();
        let mut jac = Matrix::zeros(2 * m, 2 * m);
        for (r, &fr) in idx.iter().enumerate() {
            for (c, &fc) in idx.iter().enumerate() {
                jac[(r, c)] = full[(fr, fc)];
            }
        }
        jac
    }
}

/// Newton–Raphson from a flat start with the slack held at `1∠0`.
pub fn solve_ac(net: &Network, inj: &Injections) -> Result<PowerFlowState> {
    solve_ac_with(net, inj, &AcOptions::default())
}

pub fn solve_ac_with(net: &Network, inj: &Injections, opts: &AcOptions) -> Result<PowerFlowState> {
    let n = net.num_buses();
    if inj.len() != n || inj.q.len() != n {
        return Err(Error::Dimension(format!(
            "{} injections for {} buses",
            inj.len(),
            n
        )));
    }
    let sys = PolarSystem {
        y: build_ybus(net),
        ns: non_slack(net),
        slack: net.slack,
        slack_v: 1.0,
        inj,
    };
    let m = sys.ns.len();
    let mut x0 = vec![0.0; 2 * m];
    for (k, &i) in sys.ns.iter().enumerate() {
        let (th, v) = opts.init.map_or((0.0, 1.0), |s| (s.theta[i], s.v[i]));
        x0[k] = th;
        x0[m + k] = v;
    }
    let rep = newton(&sys, x0, opts.newton, "AC power flow")?;
    let (v, theta) = sys.expand(&rep.x);
    let (p, q) = bus_power(&sys.y, &v, &theta);
    let mut state = PowerFlowState {
        v,
        theta,
        p: inj.p.clone(),
        q: inj.q.clone(),
        mismatch: rep.mismatch,
        iterations: rep.iterations,
        ..PowerFlowState::flat(n, net.num_branches())
    };
    state.p[net.slack] = p[net.slack];
    state.q[net.slack] = q[net.slack];
    let flows = branch_flows(&state, net);
    state.branch_p = flows.p_from;
    state.branch_q = flows.q_from;
    state.branch_p_to = flows.p_to;
    state.branch_q_to = flows.q_to;
    state.ell = flows.ell;
    Ok(state)
}
