use super::builder::{flow_bounds, ModelBuilder};
use super::{AffineExpr, BasePoint, LinearModel, ModelKind, StorageSplit};
use crate::acpf::{bus_power, polar_jacobian};
use crate::error::{Error, Result};
use crate::network::{build_ybus, Injections, Network};
use crate::solver::{Lu, Matrix};

/// Value and gradient of the sending-end flows of one branch direction with
/// respect to `(v_a, v_z, θ_a − θ_z)`.
pub(crate) fn flow_gradient(g: f64, b: f64, va: f64, vz: f64, th: f64) -> ((f64, [f64; 3]), (f64, [f64; 3])) {
    let (s, c) = th.sin_cos();
    let pc = g * c + b * s;
    let qc = g * s - b * c;
    let p = g * va * va - va * vz * pc;
    let q = -b * va * va - va * vz * qc;
    let dp = [2.0 * g * va - vz * pc, -va * pc, va * vz * qc];
    let dq = [-2.0 * b * va - vz * qc, -va * qc, -va * vz * pc];
    ((p, dp), (q, dq))
}

/// First-order expansion of the polar power-flow equations at `base`.
///
/// Columns `v[i]`, `theta[i]`, `p[i]`, `q[i]` plus linearized branch flows
/// `P[k]`, `Q[k]`, `P_to[k]`, `Q_to[k]` so that losses can be read off.
pub fn build_lin_ac(
    net: &Network,
    base: &BasePoint,
    inj: &Injections,
    split: StorageSplit,
) -> Result<LinearModel> {
    let st = &base.state;
    let n = net.num_buses();
    if st.v.len() != n {
        return Err(Error::Dimension("base point does not match network".into()));
    }
    let y = build_ybus(net);
    let jac = polar_jacobian(&y, &st.v, &st.theta);
    check_nonsingular(&jac, n, net.slack)?;
    let (p0, q0) = bus_power(&y, &st.v, &st.theta);

    let mut mb = ModelBuilder::new();
    let cp = mb.add_coupling(net, split);
    let v: Vec<usize> = net
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| {
            if i == net.slack {
                mb.add_fixed(format!("v[{i}]"), st.v[i])
            } else {
                mb.add_y(format!("v[{i}]"), b.v_min, b.v_max)
            }
        })
        .collect();
    let theta: Vec<usize> = (0..n)
        .map(|i| {
            if i == net.slack {
                mb.add_fixed(format!("theta[{i}]"), st.theta[i])
            } else {
                mb.add_free(format!("theta[{i}]"))
            }
        })
        .collect();
    let p: Vec<usize> = (0..n).map(|i| mb.add_free(format!("p[{i}]"))).collect();
    let q: Vec<usize> = (0..n).map(|i| mb.add_free(format!("q[{i}]"))).collect();

    // J·(θ, v) − (p, q) = J·x0 − F(x0)
    for (row, inj_col, f0) in (0..n)
        .map(|i| (i, p[i], p0[i]))
        .chain((0..n).map(|i| (n + i, q[i], q0[i])))
    {
        let jr = jac.row(row);
        let mut terms = vec![(inj_col, -1.0)];
        let mut rhs = -f0;
        for j in 0..n {
            if jr[j] != 0.0 {
                terms.push((theta[j], jr[j]));
                rhs += jr[j] * st.theta[j];
            }
            if jr[n + j] != 0.0 {
                terms.push((v[j], jr[n + j]));
                rhs += jr[n + j] * st.v[j];
            }
        }
        mb.add_row(&terms, rhs);
    }

    let mut p_loss = Vec::new();
    let mut q_loss = Vec::new();
    for (k, br) in net.branches.iter().enumerate() {
        let (g, b) = br.series_admittance();
        let (lo, hi) = flow_bounds(br.flow_limit);
        let mut flow_cols = Vec::with_capacity(4);
        for (a, z, tag) in [(br.from, br.to, ""), (br.to, br.from, "_to")] {
            let th = st.theta[a] - st.theta[z];
            let ((pv, dp), (qv, dq)) = flow_gradient(g, b, st.v[a], st.v[z], th);
            for (name, val, d) in [("P", pv, dp), ("Q", qv, dq)] {
                let col = mb.add_y(format!("{name}{tag}[{k}]"), lo, hi);
                let rhs = val - d[0] * st.v[a] - d[1] * st.v[z] - d[2] * th;
                mb.add_row(
                    &[
                        (col, 1.0),
                        (v[a], -d[0]),
                        (v[z], -d[1]),
                        (theta[a], -d[2]),
                        (theta[z], d[2]),
                    ],
                    rhs,
                );
                flow_cols.push(col);
            }
        }
        p_loss.push(AffineExpr {
            terms: vec![(flow_cols[0], 1.0), (flow_cols[2], 1.0)],
            constant: 0.0,
        });
        q_loss.push(AffineExpr {
            terms: vec![(flow_cols[1], 1.0), (flow_cols[3], 1.0)],
            constant: 0.0,
        });
    }
    mb.add_injection_rows(net, inj, &cp, &p, Some(&q))?;
    Ok(mb.finish(
        ModelKind::LinAc,
        p,
        p_loss,
        q_loss,
        net.num_branches(),
        Some(base.id.clone()),
    ))
}

/// The power-flow Jacobian restricted to non-slack buses must be invertible.
fn check_nonsingular(jac: &Matrix, n: usize, slack: usize) -> Result<()> {
    let idx: Vec<usize> = (0..n)
        .filter(|&i| i != slack)
        .chain((0..n).filter(|&i| i != slack).map(|i| n + i))
        .collect();
    let mut sub = Matrix::zeros(idx.len(), idx.len());
    for (r, &fr) in idx.iter().enumerate() {
        for (c, &fc) in idx.iter().enumerate() {
            sub[(r, c)] = jac[(fr, fc)];
        }
    }
    Lu::factor(&sub).map(|_| ())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acpf::solve_ac;
    use crate::linear_models::{detect_negative_losses, X_CHARGE, X_PCC};

    fn ess_idle(m: &LinearModel, net: &Network) -> Vec<(usize, f64)> {
        (0..net.storage.len())
            .map(|s| (m.column(&format!("p_ess[{s}]")).unwrap(), 0.0))
            .collect()
    }

    #[test]
    fn exact_at_base() {
        let net = Network::ieee33();
        let inj = net.injections(1.0, 0.0);
        let base = BasePoint::solve(&net, &inj, "nominal").unwrap();
        let m = build_lin_ac(&net, &base, &inj, StorageSplit::Free).unwrap();
        let pt = m.complete(&ess_idle(&m, &net)).unwrap();
        let st = &base.state;
        assert!((pt[X_PCC] - st.p[0]).abs() < 1e-10);
        for i in 0..33 {
            assert!((pt[m.column(&format!("v[{i}]")).unwrap()] - st.v[i]).abs() < 1e-10);
            assert!((pt[m.column(&format!("theta[{i}]")).unwrap()] - st.theta[i]).abs() < 1e-10);
        }
        for k in 0..32 {
            assert!((pt[m.column(&format!("P[{k}]")).unwrap()] - st.branch_p[k]).abs() < 1e-10);
        }
        let rep = detect_negative_losses(&m, &pt);
        assert!(!rep.any_negative());
        assert!(rep.total_p() > 0.0);
    }

    #[test]
    fn zero_base_flat_solution() {
        let net = Network::ieee33();
        let zero = Injections::zeros(33);
        let base = BasePoint::solve(&net, &zero, "zero").unwrap();
        let m = build_lin_ac(&net, &base, &zero, StorageSplit::Free).unwrap();
        let pt = m.complete(&ess_idle(&m, &net)).unwrap();
        assert!(pt[X_PCC].abs() < 1e-12 && pt[X_CHARGE].abs() < 1e-14);
        assert!(m.residual(&pt).iter().all(|r| r.abs() < 1e-10));
    }

    #[test]
    fn error_is_second_order() {
        let net = Network::ieee33();
        let inj = net.injections(1.0, 0.0);
        let base = BasePoint::solve(&net, &inj, "nominal").unwrap();
        let err = |delta: f64| {
            let mut pert = inj.clone();
            pert.p[17] -= delta;
            let m = build_lin_ac(&net, &base, &pert, StorageSplit::Free).unwrap();
            let pt = m.complete(&ess_idle(&m, &net)).unwrap();
            let ac = solve_ac(&net, &pert).unwrap();
            (0..33)
                .map(|i| (pt[m.column(&format!("v[{i}]")).unwrap()] - ac.v[i]).abs())
                .fold((pt[X_PCC] - ac.p[0]).abs(), f64::max)
        };
        let ratio = err(0.02) / err(0.01);
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (g, b) = (3.0, -7.0);
        let x = [1.02, 0.97, 0.03];
        let ((_, dp), (_, dq)) = flow_gradient(g, b, x[0], x[1], x[2]);
        for d in 0..3 {
            let h = 1e-6;
            let mut hi = x;
            let mut lo = x;
            hi[d] += h;
            lo[d] -= h;
            let ((ph, _), (qh, _)) = flow_gradient(g, b, hi[0], hi[1], hi[2]);
            let ((pl, _), (ql, _)) = flow_gradient(g, b, lo[0], lo[1], lo[2]);
            assert!(((ph - pl) / (2.0 * h) - dp[d]).abs() < 1e-8);
            assert!(((qh - ql) / (2.0 * h) - dq[d]).abs() < 1e-8);
        }
    }
}
