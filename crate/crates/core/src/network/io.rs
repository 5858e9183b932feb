use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Branch, Bus, BusKind, Device, Network, PvUnit, StorageUnit};
use crate::error::{Error, Result};

fn default_base_mva() -> f64 {
    1.0
}

fn default_v_min() -> f64 {
    0.95
}

fn default_v_max() -> f64 {
    1.05
}

/// On-disk network description. Resistances and reactances are per-unit;
/// powers are MW / MVAr / MVA and energies MWh, converted on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    #[serde(default = "default_base_mva")]
    pub base_mva: f64,
    pub buses: Vec<BusRecord>,
    pub branches: Vec<BranchRecord>,
    #[serde(default)]
    pub storage: Vec<StorageRecord>,
    #[serde(default)]
    pub pv: Vec<PvRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusRecord {
    pub id: usize,
    pub kind: BusKind,
    #[serde(default = "default_v_min")]
    pub v_min: f64,
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    #[serde(default)]
    pub p_load: f64,
    #[serde(default)]
    pub q_load: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchRecord {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_limit: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageRecord {
    pub bus: usize,
    pub p_max: f64,
    pub e_cap: f64,
    pub soc_init: f64,
    pub soc_final: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvRecord {
    pub bus: usize,
    #[serde(default)]
    pub p_rated: f64,
}

impl NetworkFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn into_network(self) -> Result<Network> {
        let base = self.base_mva;
        if !(base > 0.0) {
            return Err(Error::InvalidNetwork(format!("base_mva must be positive, got {base}")));
        }
        let mut seen = std::collections::BTreeSet::new();
        for b in &self.buses {
            if !seen.insert(b.id) {
                return Err(Error::InvalidNetwork(format!("duplicate bus id {}", b.id)));
            }
        }
        let buses = self
            .buses
            .iter()
            .map(|b| Bus {
                id: b.id,
                kind: b.kind,
                p_inj: -b.p_load / base,
                q_inj: -b.q_load / base,
                v_min: b.v_min,
                v_max: b.v_max,
                devices: if b.p_load != 0.0 || b.q_load != 0.0 {
                    vec![Device::Load]
                } else {
                    Vec::new()
                },
            })
            .collect();
        let branches = self
            .branches
            .iter()
            .map(|b| Branch {
                from: b.from,
                to: b.to,
                r: b.r,
                x: b.x,
                flow_limit: b.flow_limit.map(|s| s / base),
            })
            .collect();
        let storage = self
            .storage
            .iter()
            .map(|s| StorageUnit {
                bus: s.bus,
                p_max: s.p_max / base,
                e_cap: s.e_cap / base,
                soc_init: s.soc_init,
                soc_final: s.soc_final,
                efficiency: 1.0,
            })
            .collect();
        let pv = self
            .pv
            .iter()
            .map(|p| PvUnit {
                bus: p.bus,
                p_rated: p.p_rated / base,
            })
            .collect();
        Network::new(base, buses, branches, storage, pv)
    }
}

impl Network {
    /// Physical-unit file representation of this network.
    pub fn to_file(&self) -> NetworkFile {
        let base = self.base_mva;
        NetworkFile {
            base_mva: base,
            buses: self
                .buses
                .iter()
                .map(|b| BusRecord {
                    id: b.id,
                    kind: b.kind,
                    v_min: b.v_min,
                    v_max: b.v_max,
                    p_load: -b.p_inj * base,
                    q_load: -b.q_inj * base,
                })
                .collect(),
            branches: self
                .branches
                .iter()
                .map(|b| BranchRecord {
                    from: b.from,
                    to: b.to,
                    r: b.r,
                    x: b.x,
                    flow_limit: b.flow_limit.map(|s| s * base),
                })
                .collect(),
            storage: self
                .storage
                .iter()
                .map(|s| StorageRecord {
                    bus: s.bus,
                    p_max: s.p_max * base,
                    e_cap: s.e_cap * base,
                    soc_init: s.soc_init,
                    soc_final: s.soc_final,
                })
                .collect(),
            pv: self
                .pv
                .iter()
                .map(|p| PvRecord {
                    bus: p.bus,
                    p_rated: p.p_rated * base,
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        NetworkFile::from_json(text)?.into_network()
    }

    pub fn ieee33() -> Self {
        Self::from_json(include_str!("../../data/ieee33.json")).expect("bundled feeder is valid")
    }
}

/// Reads and validates a network JSON file.
pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Network::from_json(&text)
}
