use super::builder::{flow_bounds, ModelBuilder};
use super::{LinearModel, ModelKind, StorageSplit};
use crate::error::Result;
use crate::network::{Injections, Network, RootedTree};

/// Lossless branch-flow model on the tree oriented away from the PCC.
///
/// Columns: `u[i]` (slack fixed at 1), `P[k]`, `Q[k]` in tree orientation,
/// `p[i]`, `q[i]`.
pub fn build_lindistflow(net: &Network, inj: &Injections, split: StorageSplit) -> Result<LinearModel> {
    let tree = RootedTree::new(net)?;
    let mut mb = ModelBuilder::new();
    let cp = mb.add_coupling(net, split);
    let u: Vec<usize> = net
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| {
            if i == net.slack {
                mb.add_fixed(format!("u[{i}]"), 1.0)
            } else {
                mb.add_y(format!("u[{i}]"), b.v_min * b.v_min, b.v_max * b.v_max)
            }
        })
        .collect();
    let mut pf = Vec::new();
    let mut qf = Vec::new();
    for (k, br) in net.branches.iter().enumerate() {
        let (lo, hi) = flow_bounds(br.flow_limit);
        pf.push(mb.add_y(format!("P[{k}]"), lo, hi));
        qf.push(mb.add_y(format!("Q[{k}]"), lo, hi));
    }
    let p: Vec<usize> = (0..net.num_buses()).map(|i| mb.add_free(format!("p[{i}]"))).collect();
    let q: Vec<usize> = (0..net.num_buses()).map(|i| mb.add_free(format!("q[{i}]"))).collect();

    for i in 0..net.num_buses() {
        let mut tp = vec![(p[i], 1.0)];
        let mut tq = vec![(q[i], 1.0)];
        for (k, &(up, down)) in tree.oriented.iter().enumerate() {
            let s = if up == i {
                -1.0
            } else if down == i {
                1.0
            } else {
                continue;
            };
            tp.push((pf[k], s));
            tq.push((qf[k], s));
        }
        mb.add_row(&tp, 0.0);
        mb.add_row(&tq, 0.0);
    }
    for (k, &(up, down)) in tree.oriented.iter().enumerate() {
        let br = &net.branches[k];
        mb.add_row(
            &[(u[down], 1.0), (u[up], -1.0), (pf[k], 2.0 * br.r), (qf[k], 2.0 * br.x)],
            0.0,
        );
    }
    mb.add_injection_rows(net, inj, &cp, &p, Some(&q))?;
    Ok(mb.finish(ModelKind::LinDistFlow, p, Vec::new(), Vec::new(), net.num_branches(), None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_models::test_nets::{triangle, two_bus};
    use crate::linear_models::{X_CHARGE, X_PCC};
    use crate::error::Error;

    #[test]
    fn two_bus_voltage_drop() {
        let net = two_bus(0.01, 0.1);
        let mut inj = Injections::zeros(2);
        inj.p[1] = -0.5;
        inj.q[1] = -0.1;
        let m = build_lindistflow(&net, &inj, StorageSplit::Free).unwrap();
        let pt = m.complete(&[(X_CHARGE, 0.0)]).unwrap();
        let u1 = pt[m.column("u[1]").unwrap()];
        assert!((u1 - 0.97).abs() < 1e-14, "{u1}");
        assert!((pt[X_PCC] - 0.5).abs() < 1e-14);
        assert!(m.injection_sum(&pt).abs() < 1e-14);
        assert!(m.residual(&pt).iter().all(|r| r.abs() < 1e-14));
    }

    #[test]
    fn zero_injections_flat() {
        let net = crate::network::Network::ieee33();
        let m = build_lindistflow(&net, &Injections::zeros(33), StorageSplit::Proportional).unwrap();
        let pt = m.complete(&[(X_CHARGE, 0.0)]).unwrap();
        for i in 0..33 {
            assert!((pt[m.column(&format!("u[{i}]")).unwrap()] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn meshed_rejected() {
        assert!(matches!(
            build_lindistflow(&triangle(0.0), &Injections::zeros(3), StorageSplit::Free),
            Err(Error::NotRadial)
        ));
    }
}
