use rayon::prelude::*;

use super::geometry::normalize;
use super::support::project_reduced_slice;
use super::{CouplingSpace, EnvelopeKind, FlexibilityEnvelope, Halfspace};
use crate::error::Result;
use crate::linear_models::{build_model, BasePoint, ModelKind, ModelOptions, ReducedModel};
use crate::network::{DayProfile, Network};

#[derive(Clone, Copy, Debug)]
pub struct EnvelopeOptions {
    /// Evenly spaced support directions per step slice.
    pub directions: usize,
    /// Add hull-edge directions until each slice is exact.
    pub refine: bool,
    pub dt: f64,
    pub model: ModelOptions,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self {
            directions: 64,
            refine: true,
            dt: 1.0,
            model: ModelOptions::default(),
        }
    }
}

/// Power-energy envelope over `(P_pcc[1..T], E_agg[1..T])`.
///
/// Each step contributes its projected slice in `(P_pcc[t], C[t])`, mapped
/// through `C[t] = (E[t] − E[t−1])/Δt` with the initial energy as a constant.
/// The final energy is pinned by two opposing rows and every `E[t]` is kept
/// within `[0, Σ e_cap]`.
pub fn build_envelope(
    net: &Network,
    kind: ModelKind,
    base: Option<&BasePoint>,
    profile: &DayProfile,
    steps: usize,
    opts: &EnvelopeOptions,
) -> Result<FlexibilityEnvelope> {
    let profile = profile.truncate(steps)?;
    let space = CouplingSpace::new(steps, opts.dt)?;
    let slices: Vec<(Vec<Halfspace>, EnvelopeKind)> = (0..steps)
        .into_par_iter()
        .map(|t| {
            let model = build_model(kind, net, base, &profile.injections(net, t), opts.model)?;
            let red = ReducedModel::new(&model)?;
            project_reduced_slice(&red, opts.directions, opts.refine)
        })
        .collect::<Result<_>>()?;

    let dim = space.dim();
    let dt = opts.dt;
    let e0 = net.initial_energy();
    let mut hs = Vec::new();
    for (t, (slice, _)) in slices.iter().enumerate() {
        for s in slice {
            let (a, b) = (s.n[0], s.n[1]);
            let mut n = vec![0.0; dim];
            n[space.p(t)] = a;
            n[space.e(t)] = b / dt;
            let mut h = s.h;
            if t == 0 {
                h += b * e0 / dt;
            } else {
                n[space.e(t - 1)] = -b / dt;
            }
            hs.push(Halfspace { n, h });
        }
    }
    let cap = net.total_e_cap();
    for t in 0..steps {
        let mut n = vec![0.0; dim];
        n[space.e(t)] = 1.0;
        hs.push(Halfspace { n: n.clone(), h: cap });
        n[space.e(t)] = -1.0;
        hs.push(Halfspace { n, h: 0.0 });
    }
    let ef = net.final_energy();
    let mut n = vec![0.0; dim];
    n[space.e(steps - 1)] = 1.0;
    hs.push(Halfspace { n: n.clone(), h: ef });
    n[space.e(steps - 1)] = -1.0;
    hs.push(Halfspace { n, h: -ef });

    let exact = slices.iter().all(|(_, k)| *k == EnvelopeKind::Exact);
    let provenance = match base {
        Some(b) if kind.needs_base() => format!("{kind}@{}", b.id),
        _ => kind.to_string(),
    };
    Ok(FlexibilityEnvelope {
        labels: space.labels(),
        halfspaces: normalize(hs)?,
        kind: if exact {
            EnvelopeKind::Exact
        } else {
            EnvelopeKind::Outer
        },
        provenance,
        initial_energy: Some(e0),
        dt: Some(dt),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn storage_only_energy_box() {
        let net = Network::ieee33();
        let prof = DayProfile::constant(4, 0.0, 0.0);
        let env = build_envelope(&net, ModelKind::Dc, None, &prof, 4, &EnvelopeOptions::default()).unwrap();
        assert_eq!(env.dim(), 8);
        let (cap, pmax, e0) = (net.total_e_cap(), net.total_p_max(), net.initial_energy());
        // E[1] limited by one step of ramping from the initial energy
        let (lo, hi) = env.interval(4).unwrap();
        assert!((lo - (e0 - pmax)).abs() < 1e-9 && (hi - (e0 + pmax)).abs() < 1e-9);
        // E[2] reaches the full capacity box
        let (lo, hi) = env.interval(5).unwrap();
        assert!((lo - 0.0f64.max(e0 - 2.0 * pmax)).abs() < 1e-9);
        assert!((hi - cap.min(e0 + 2.0 * pmax)).abs() < 1e-9);
    }

    #[test]
    fn single_step_without_storage_is_interval() {
        let mut net = Network::ieee33();
        net.storage.clear();
        for b in net.buses.iter_mut() {
            b.devices.retain(|d| !matches!(d, crate::network::Device::Storage(_)));
        }
        let prof = DayProfile::constant(1, 1.0, 0.0);
        let env = build_envelope(&net, ModelKind::Dc, None, &prof, 1, &EnvelopeOptions::default()).unwrap();
        let (lo, hi) = env.interval(0).unwrap();
        let d = net.net_demand(1.0, 0.0);
        assert!((lo - d).abs() < 1e-9 && (hi - d).abs() < 1e-9);
    }
}
