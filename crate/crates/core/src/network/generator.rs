//! Synthetic 40-bus campus-like radial network.
//!
//! Three 13-bus feeders hang off the PCC (bus 0). Within a feeder each new bus
//! attaches to one of the three buses added just before it, which yields a
//! trunk with short laterals. Branch impedances are drawn from
//! `r ∈ [0.01, 0.05]`, `x ∈ [0.02, 0.08]` p.u. on a 10 MVA base. Storage sits
//! at the feeder ends (buses 13, 26, 39) next to large building loads, and a
//! PV plant feeds bus 33.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BranchRecord, BusKind, BusRecord, Network, NetworkFile, PvRecord, StorageRecord};

pub const CAMPUS_STORAGE_BUSES: [usize; 3] = [13, 26, 39];
pub const CAMPUS_PV_BUS: usize = 33;

const FEEDERS: usize = 3;
const FEEDER_LEN: usize = 13;
const BASE_MVA: f64 = 10.0;
const R_RANGE: (f64, f64) = (0.01, 0.05);
const X_RANGE: (f64, f64) = (0.02, 0.08);
const LOAD_MW: (f64, f64) = (0.03, 0.08);
const BUILDING_LOAD_MW: f64 = 0.6;
/// Reactive-to-active ratio of all loads (power factor ≈ 0.95).
const Q_RATIO: f64 = 0.33;
const STORAGE_MW: f64 = 0.25;
const PV_MW: f64 = 0.3;

fn round(v: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (v * s).round() / s
}

/// Deterministic 40-bus network for `seed`.
pub fn generate_campus_like(seed: u64) -> Network {
    campus_file(seed).into_network().expect("generator produces a valid network")
}

pub(crate) fn campus_file(seed: u64) -> NetworkFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1 + FEEDERS * FEEDER_LEN;
    let mut buses = vec![BusRecord {
        id: 0,
        kind: BusKind::Slack,
        v_min: 0.95,
        v_max: 1.05,
        p_load: 0.0,
        q_load: 0.0,
    }];
    let mut branches = Vec::with_capacity(n - 1);
    for f in 0..FEEDERS {
        let first = 1 + f * FEEDER_LEN;
        for k in 0..FEEDER_LEN {
            let id = first + k;
            let parent = if k == 0 {
                0
            } else {
                rng.gen_range(first + k.saturating_sub(3)..id)
            };
            let r = round(rng.gen_range(R_RANGE.0..=R_RANGE.1), 4);
            let x = round(rng.gen_range(X_RANGE.0..=X_RANGE.1), 4);
            branches.push(BranchRecord {
                from: parent,
                to: id,
                r,
                x,
                flow_limit: None,
            });
            let mut p = round(rng.gen_range(LOAD_MW.0..=LOAD_MW.1), 3);
            if CAMPUS_STORAGE_BUSES.contains(&id) {
                p += BUILDING_LOAD_MW;
            }
            buses.push(BusRecord {
                id,
                kind: BusKind::Pq,
                v_min: 0.95,
                v_max: 1.05,
                p_load: p,
                q_load: round(p * Q_RATIO, 4),
            });
        }
    }
    NetworkFile {
        base_mva: BASE_MVA,
        buses,
        branches,
        storage: CAMPUS_STORAGE_BUSES
            .iter()
            .map(|&bus| StorageRecord {
                bus,
                p_max: STORAGE_MW,
                e_cap: 2.0 * STORAGE_MW,
                soc_init: 0.5,
                soc_final: 0.5,
            })
            .collect(),
        pv: vec![PvRecord {
            bus: CAMPUS_PV_BUS,
            p_rated: PV_MW,
        }],
    }
}
