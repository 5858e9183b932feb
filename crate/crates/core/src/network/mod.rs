//! Network data model: buses, series branches, storage fleet and PV units.
//!
//! All quantities are held in per-unit on `base_mva`. Branches carry series
//! impedance only; shunt elements and line charging are not modeled.

mod generator;
mod io;
mod profile;
mod topology;
mod ybus;

pub use generator::{generate_campus_like, CAMPUS_PV_BUS, CAMPUS_STORAGE_BUSES};
pub use io::{load_network, BranchRecord, BusRecord, NetworkFile, PvRecord, StorageRecord};
pub use profile::{load_profile, DayProfile};
pub use topology::{check_radial, RootedTree};
pub use ybus::{build_ybus, AdmittanceMatrix};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on the `e_cap = 2·p_max` storage sizing rule.
const SIZING_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Slack,
    Pq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Device {
    Load,
    Pv(usize),
    Storage(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bus {
    pub id: usize,
    pub kind: BusKind,
    /// Nominal load injection (generation minus load, so loads are negative).
    pub p_inj: f64,
    pub q_inj: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub devices: Vec<Device>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    pub flow_limit: Option<f64>,
}

impl Branch {
    /// Series admittance `1 / (r + jx)` as `(g, b)`.
    pub fn series_admittance(&self) -> (f64, f64) {
        let d = self.r * self.r + self.x * self.x;
        (self.r / d, -self.x / d)
    }

    pub fn other_end(&self, bus: usize) -> usize {
        if self.from == bus {
            self.to
        } else {
            self.from
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StorageUnit {
    pub bus: usize,
    pub p_max: f64,
    pub e_cap: f64,
    pub soc_init: f64,
    pub soc_final: f64,
    pub efficiency: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PvUnit {
    pub bus: usize,
    pub p_rated: f64,
}

/// Conversion between physical units and per-unit on a power base.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerUnit {
    pub base_mva: f64,
}

impl PerUnit {
    pub fn power_to_pu(&self, mw: f64) -> f64 {
        mw / self.base_mva
    }

    pub fn power_to_mw(&self, pu: f64) -> f64 {
        pu * self.base_mva
    }
}

/// Per-bus fixed net injections (p.u.), excluding storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Injections {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl Injections {
    pub fn zeros(n: usize) -> Self {
        Self {
            p: vec![0.0; n],
            q: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Network {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub storage: Vec<StorageUnit>,
    pub pv: Vec<PvUnit>,
    pub slack: usize,
    /// Branch indices with the bus on their `from` side.
    pub from_set: Vec<Vec<usize>>,
    /// Branch indices with the bus on their `to` side.
    pub to_set: Vec<Vec<usize>>,
    pub radial: bool,
}

impl Network {
    /// Validates the parts and derives orientation sets.
    pub fn new(
        base_mva: f64,
        mut buses: Vec<Bus>,
        branches: Vec<Branch>,
        storage: Vec<StorageUnit>,
        pv: Vec<PvUnit>,
    ) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidNetwork(msg));
        if !(base_mva > 0.0) {
            return invalid(format!("base_mva must be positive, got {base_mva}"));
        }
        if buses.is_empty() {
            return invalid("no buses".into());
        }
        buses.sort_by_key(|b| b.id);
        for (i, b) in buses.iter().enumerate() {
            if b.id != i {
                if i > 0 && buses[i - 1].id == b.id {
                    return invalid(format!("duplicate bus id {}", b.id));
                }
                return invalid(format!("bus ids must be 0..{} without gaps", buses.len() - 1));
            }
            if !(b.v_min <= b.v_max) || b.v_min <= 0.0 {
                return invalid(format!("bus {}: invalid voltage bounds", b.id));
            }
        }
        let slacks: Vec<usize> = buses
            .iter()
            .filter(|b| b.kind == BusKind::Slack)
            .map(|b| b.id)
            .collect();
        let slack = match slacks.as_slice() {
            [s] => *s,
            [] => return invalid("no slack bus".into()),
            _ => return invalid("multiple slack buses".into()),
        };
        let n = buses.len();
        for (k, br) in branches.iter().enumerate() {
            if br.from >= n || br.to >= n {
                return invalid(format!("branch {k} references a missing bus"));
            }
            if br.from == br.to {
                return invalid(format!("branch {k} is a self loop"));
            }
            if br.x == 0.0 {
                return invalid(format!("branch {k} has zero reactance"));
            }
            if !(br.x > 0.0) || !(br.r >= 0.0) {
                return invalid(format!("branch {k} needs r >= 0 and x > 0"));
            }
            if br.flow_limit.is_some_and(|s| !(s > 0.0)) {
                return invalid(format!("branch {k} has a non-positive flow limit"));
            }
        }
        for (k, s) in storage.iter().enumerate() {
            if s.bus >= n {
                return invalid(format!("storage {k} at missing bus {}", s.bus));
            }
            if !(s.p_max > 0.0) {
                return invalid(format!("storage {k} needs p_max > 0"));
            }
            if (s.e_cap - 2.0 * s.p_max).abs() > SIZING_TOL * s.e_cap.abs().max(1.0) {
                return invalid(format!(
                    "storage {k}: e_cap must equal two hours at p_max ({} != 2·{})",
                    s.e_cap, s.p_max
                ));
            }
            for soc in [s.soc_init, s.soc_final] {
                if !(0.0..=1.0).contains(&soc) {
                    return invalid(format!("storage {k}: SOC target {soc} outside [0, 1]"));
                }
            }
        }
        for (k, p) in pv.iter().enumerate() {
            if p.bus >= n {
                return invalid(format!("pv {k} at missing bus {}", p.bus));
            }
        }

        let mut from_set = vec![Vec::new(); n];
        let mut to_set = vec![Vec::new(); n];
        for (k, br) in branches.iter().enumerate() {
            from_set[br.from].push(k);
            to_set[br.to].push(k);
        }
        for b in buses.iter_mut() {
            b.devices.retain(|d| *d == Device::Load);
            if b.p_inj != 0.0 || b.q_inj != 0.0 {
                if !b.devices.contains(&Device::Load) {
                    b.devices.push(Device::Load);
                }
            }
        }
        for (k, p) in pv.iter().enumerate() {
            buses[p.bus].devices.push(Device::Pv(k));
        }
        for (k, s) in storage.iter().enumerate() {
            buses[s.bus].devices.push(Device::Storage(k));
        }

        let mut net = Self {
            base_mva,
            buses,
            branches,
            storage,
            pv,
            slack,
            from_set,
            to_set,
            radial: false,
        };
        if !topology::is_connected(&net) {
            return invalid("disconnected graph".into());
        }
        net.radial = check_radial(&net);
        Ok(net)
    }

    pub fn num_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn num_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn per_unit(&self) -> PerUnit {
        PerUnit {
            base_mva: self.base_mva,
        }
    }

    /// Branches incident to `bus` (both orientations).
    pub fn incident(&self, bus: usize) -> impl Iterator<Item = usize> + '_ {
        self.from_set[bus].iter().chain(&self.to_set[bus]).copied()
    }

    /// Fixed injections with loads scaled by `load_scale` and PV by `pv_scale`.
    pub fn injections(&self, load_scale: f64, pv_scale: f64) -> Injections {
        let mut inj = Injections {
            p: self.buses.iter().map(|b| load_scale * b.p_inj).collect(),
            q: self.buses.iter().map(|b| load_scale * b.q_inj).collect(),
        };
        for pv in &self.pv {
            inj.p[pv.bus] += pv_scale * pv.p_rated;
        }
        inj
    }

    /// Net demand `Σ load − Σ pv` for the given scales (p.u.).
    pub fn net_demand(&self, load_scale: f64, pv_scale: f64) -> f64 {
        -self.injections(load_scale, pv_scale).p.iter().sum::<f64>()
    }

    pub fn total_p_max(&self) -> f64 {
        self.storage.iter().map(|s| s.p_max).sum()
    }

    pub fn total_e_cap(&self) -> f64 {
        self.storage.iter().map(|s| s.e_cap).sum()
    }

    pub fn initial_energy(&self) -> f64 {
        self.storage.iter().map(|s| s.soc_init * s.e_cap).sum()
    }

    pub fn final_energy(&self) -> f64 {
        self.storage.iter().map(|s| s.soc_final * s.e_cap).sum()
    }

    /// Share of an aggregate storage power taken by each unit (∝ p_max).
    pub fn storage_shares(&self) -> Vec<f64> {
        let total = self.total_p_max();
        self.storage.iter().map(|s| s.p_max / total).collect()
    }

    /// Adds storage charging powers (consumption) to fixed injections.
    pub fn with_storage(&self, base: &Injections, charge: &[f64]) -> Injections {
        let mut inj = base.clone();
        for (s, c) in self.storage.iter().zip(charge) {
            inj.p[s.bus] -= c;
        }
        inj
    }

    /// Copy of the network with every branch resistance set to zero.
    pub fn lossless(&self) -> Self {
        let mut net = self.clone();
        for br in net.branches.iter_mut() {
            br.r = 0.0;
        }
        net
    }
}
