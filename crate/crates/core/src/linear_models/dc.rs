use super::builder::{flow_bounds, ModelBuilder};
use super::{detect_negative_losses, AffineExpr, BasePoint, LinearModel, LossReport, ModelKind, StorageSplit};
use crate::error::{Error, Result};
use crate::network::{Injections, Network};

/// Classic DC model: `P_ij = (θ_i − θ_j)/x_ij`, active power only.
pub fn build_dc(net: &Network, inj: &Injections, split: StorageSplit) -> Result<LinearModel> {
    let mut mb = ModelBuilder::new();
    let cp = mb.add_coupling(net, split);
    let theta = angle_columns(&mut mb, net);
    let pf: Vec<usize> = net
        .branches
        .iter()
        .enumerate()
        .map(|(k, br)| {
            let (lo, hi) = flow_bounds(br.flow_limit);
            mb.add_y(format!("P[{k}]"), lo, hi)
        })
        .collect();
    let p: Vec<usize> = (0..net.num_buses()).map(|i| mb.add_free(format!("p[{i}]"))).collect();
    for i in 0..net.num_buses() {
        let mut terms = vec![(p[i], 1.0)];
        terms.extend(net.from_set[i].iter().map(|&k| (pf[k], -1.0)));
        terms.extend(net.to_set[i].iter().map(|&k| (pf[k], 1.0)));
        mb.add_row(&terms, 0.0);
    }
    for (k, br) in net.branches.iter().enumerate() {
        let bk = 1.0 / br.x;
        mb.add_row(&[(pf[k], 1.0), (theta[br.from], -bk), (theta[br.to], bk)], 0.0);
    }
    mb.add_injection_rows(net, inj, &cp, &p, None)?;
    Ok(mb.finish(ModelKind::Dc, p, Vec::new(), Vec::new(), net.num_branches(), None))
}

fn angle_columns(mb: &mut ModelBuilder, net: &Network) -> Vec<usize> {
    (0..net.num_buses())
        .map(|i| {
            if i == net.slack {
                mb.add_fixed(format!("theta[{i}]"), 0.0)
            } else {
                mb.add_free(format!("theta[{i}]"))
            }
        })
        .collect()
}

/// Form of the loss term inside the enhanced DC model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LossVariant {
    /// `((v_i − v_j)² + θ_ij²)/2`, quadratic in the angle difference.
    #[default]
    Quadratic,
    /// `((v_i − v_j)² + θ_ij)/2`, the literal printed form kept for comparison.
    AsPrinted,
}

/// First-order expansion of the loss factor `L` for one branch direction:
/// `L ≈ l0 + du_i·u_i + du_j·u_j + dth·(θ_i − θ_j)` with the base values
/// folded into `l0`.
struct LossTaylor {
    l0: f64,
    du_i: f64,
    du_j: f64,
    dth: f64,
    /// Value of `L` itself at the base point.
    at_base: f64,
}

fn loss_taylor(variant: LossVariant, u_i: f64, u_j: f64, theta: f64, sign: f64) -> LossTaylor {
    let (vi, vj) = (u_i.sqrt(), u_j.sqrt());
    let dv = vi - vj;
    let (at_base, dth) = match variant {
        LossVariant::Quadratic => ((dv * dv + theta * theta) / 2.0, theta),
        LossVariant::AsPrinted => ((dv * dv + sign * theta) / 2.0, sign / 2.0),
    };
    let du_i = dv / (2.0 * vi);
    let du_j = -dv / (2.0 * vj);
    LossTaylor {
        l0: at_base - du_i * u_i - du_j * u_j - dth * theta,
        du_i,
        du_j,
        dth,
        at_base,
    }
}

/// Enhanced DC model with squared voltages, reactive power and linearized
/// losses anchored at `base`.
///
/// Per branch `(i, j)` with series admittance `g + jb`:
/// `P_ij = g(u_i − u_j)/2 − bθ_ij + g·L`, `Q_ij = −b(u_i − u_j)/2 − gθ_ij − b·L`.
/// The voltage term uses `u = |V|²` once (the printed `u_i²` double-squares),
/// and `L` is replaced by its tangent at the base. A constant per row absorbs
/// the remaining approximation error at the base, so the model reproduces the
/// base AC flows exactly there.
///
/// Also returns the loss report at the base point.
pub fn build_enhanced_dc(
    net: &Network,
    base: &BasePoint,
    inj: &Injections,
    split: StorageSplit,
    variant: LossVariant,
) -> Result<(LinearModel, LossReport)> {
    let st = &base.state;
    if st.v.len() != net.num_buses() || st.branch_p.len() != net.num_branches() {
        return Err(Error::Dimension("base point does not match network".into()));
    }
    let u0 = st.u();
    let th0 = &st.theta;
    let mut mb = ModelBuilder::new();
    let cp = mb.add_coupling(net, split);
    let u: Vec<usize> = net
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| {
            if i == net.slack {
                mb.add_fixed(format!("u[{i}]"), u0[i])
            } else {
                mb.add_y(format!("u[{i}]"), b.v_min * b.v_min, b.v_max * b.v_max)
            }
        })
        .collect();
    let theta = angle_columns(&mut mb, net);
    let m = net.num_branches();
    let mut cols = Vec::with_capacity(m);
    for (k, br) in net.branches.iter().enumerate() {
        let (lo, hi) = flow_bounds(br.flow_limit);
        cols.push([
            mb.add_y(format!("P[{k}]"), lo, hi),
            mb.add_y(format!("Q[{k}]"), lo, hi),
            mb.add_y(format!("P_to[{k}]"), lo, hi),
            mb.add_y(format!("Q_to[{k}]"), lo, hi),
            mb.add_free(format!("P_loss[{k}]")),
            mb.add_free(format!("P_loss_to[{k}]")),
        ]);
    }
    let p: Vec<usize> = (0..net.num_buses()).map(|i| mb.add_free(format!("p[{i}]"))).collect();
    let q: Vec<usize> = (0..net.num_buses()).map(|i| mb.add_free(format!("q[{i}]"))).collect();

    for i in 0..net.num_buses() {
        let mut tp = vec![(p[i], 1.0)];
        let mut tq = vec![(q[i], 1.0)];
        for &k in &net.from_set[i] {
            tp.push((cols[k][0], -1.0));
            tq.push((cols[k][1], -1.0));
        }
        for &k in &net.to_set[i] {
            tp.push((cols[k][2], -1.0));
            tq.push((cols[k][3], -1.0));
        }
        mb.add_row(&tp, 0.0);
        mb.add_row(&tq, 0.0);
    }

    let mut p_loss = Vec::with_capacity(m);
    let mut q_loss = Vec::with_capacity(m);
    for (k, br) in net.branches.iter().enumerate() {
        let (g, b) = br.series_admittance();
        let [c_p, c_q, c_pt, c_qt, c_lf, c_lt] = cols[k];
        // both directions: (near bus, far bus, flow cols, loss col, base flows, sign of θ)
        let dirs = [
            (br.from, br.to, c_p, c_q, c_lf, st.branch_p[k], st.branch_q[k], 1.0),
            (br.to, br.from, c_pt, c_qt, c_lt, st.branch_p_to[k], st.branch_q_to[k], -1.0),
        ];
        for (a, z, cpa, cqa, cl, p_ac, q_ac, sign) in dirs {
            let th = th0[a] - th0[z];
            let t = loss_taylor(variant, u0[a], u0[z], th, sign);
            // loss column: P_loss = g·L_lin
            mb.add_row(
                &[
                    (cl, 1.0),
                    (u[a], -g * t.du_i),
                    (u[z], -g * t.du_j),
                    (theta[a], -g * t.dth),
                    (theta[z], g * t.dth),
                ],
                g * t.l0,
            );
            let lossless_p = g * (u0[a] - u0[z]) / 2.0 - b * th;
            let kappa_p = p_ac - (lossless_p + g * t.at_base);
            mb.add_row(
                &[
                    (cpa, 1.0),
                    (u[a], -g / 2.0),
                    (u[z], g / 2.0),
                    (theta[a], b),
                    (theta[z], -b),
                    (cl, -1.0),
                ],
                kappa_p,
            );
            let lossless_q = -b * (u0[a] - u0[z]) / 2.0 - g * th;
            let kappa_q = q_ac - (lossless_q - b * t.at_base);
            // Q^loss = −b·L_lin written out over its columns
            mb.add_row(
                &[
                    (cqa, 1.0),
                    (u[a], b / 2.0 + b * t.du_i),
                    (u[z], -b / 2.0 + b * t.du_j),
                    (theta[a], g + b * t.dth),
                    (theta[z], -g - b * t.dth),
                ],
                kappa_q - b * t.l0,
            );
        }
        p_loss.push(AffineExpr {
            terms: vec![(c_p, 1.0), (c_pt, 1.0)],
            constant: 0.0,
        });
        q_loss.push(AffineExpr {
            terms: vec![(c_q, 1.0), (c_qt, 1.0)],
            constant: 0.0,
        });
    }
    mb.add_injection_rows(net, inj, &cp, &p, Some(&q))?;
    let model = mb.finish(
        ModelKind::DcEnhanced,
        p,
        p_loss,
        q_loss,
        m,
        Some(base.id.clone()),
    );
    let mut at_base = vec![0.0; model.num_cols()];
    for (k, c) in cols.iter().enumerate() {
        at_base[c[0]] = st.branch_p[k];
        at_base[c[1]] = st.branch_q[k];
        at_base[c[2]] = st.branch_p_to[k];
        at_base[c[3]] = st.branch_q_to[k];
    }
    let report = detect_negative_losses(&model, &at_base);
    Ok((model, report))
}
