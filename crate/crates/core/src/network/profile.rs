use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Injections, Network};
use crate::error::{Error, Result};

/// Hourly scaling factors: `load_pu` multiplies every nominal bus load and
/// `pv_pu` multiplies every PV rating.
#[derive(Clone, Debug, PartialEq)]
pub struct DayProfile {
    pub hours: Vec<u32>,
    pub load: Vec<f64>,
    pub pv: Vec<f64>,
}

#[derive(Debug, Deserialize, Serialize)]
struct ProfileRow {
    hour: u32,
    load_pu: f64,
    pv_pu: f64,
}

impl DayProfile {
    pub fn new(load: Vec<f64>, pv: Vec<f64>) -> Result<Self> {
        if load.len() != pv.len() || load.is_empty() {
            return Err(Error::InvalidProfile(format!(
                "need equal, non-empty load and pv series ({} vs {})",
                load.len(),
                pv.len()
            )));
        }
        if load.iter().chain(&pv).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("non-finite value".into()));
        }
        Ok(Self {
            hours: (0..load.len() as u32).collect(),
            load,
            pv,
        })
    }

    /// Constant profile of `steps` hours.
    pub fn constant(steps: usize, load: f64, pv: f64) -> Self {
        Self {
            hours: (0..steps as u32).collect(),
            load: vec![load; steps],
            pv: vec![pv; steps],
        }
    }

    /// Bundled synthetic workday: morning and evening load peaks, midday PV.
    pub fn workday() -> Self {
        Self::from_csv(include_str!("../../data/workday_profile.csv").as_bytes())
            .expect("bundled profile is valid")
    }

    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["hour", "load_pu", "pv_pu"] {
            return Err(Error::InvalidProfile(format!(
                "expected header 'hour,load_pu,pv_pu', found '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut hours = Vec::new();
        let mut load = Vec::new();
        let mut pv = Vec::new();
        for row in rdr.deserialize() {
            let row: ProfileRow = row?;
            hours.push(row.hour);
            load.push(row.load_pu);
            pv.push(row.pv_pu);
        }
        let mut prof = Self::new(load, pv)?;
        prof.hours = hours;
        Ok(prof)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for t in 0..self.len() {
            w.serialize(ProfileRow {
                hour: self.hours[t],
                load_pu: self.load[t],
                pv_pu: self.pv[t],
            })?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn len(&self) -> usize {
        self.load.len()
    }

    pub fn is_empty(&self) -> bool {
        self.load.is_empty()
    }

    /// First `steps` hours; errors when the profile is shorter.
    pub fn truncate(&self, steps: usize) -> Result<Self> {
        if steps == 0 || steps > self.len() {
            return Err(Error::InvalidProfile(format!(
                "horizon {steps} not covered by a {}-step profile",
                self.len()
            )));
        }
        Ok(Self {
            hours: self.hours[..steps].to_vec(),
            load: self.load[..steps].to_vec(),
            pv: self.pv[..steps].to_vec(),
        })
    }

    /// Fixed injections (loads and PV) at step `t`.
    pub fn injections(&self, net: &Network, t: usize) -> Injections {
        net.injections(self.load[t], self.pv[t])
    }

    /// Mean load and pv scales over the profile.
    pub fn mean(&self) -> (f64, f64) {
        let n = self.len() as f64;
        (
            self.load.iter().sum::<f64>() / n,
            self.pv.iter().sum::<f64>() / n,
        )
    }

    /// Net demand `Σ load − Σ pv` per step (p.u.).
    pub fn net_demand(&self, net: &Network) -> Vec<f64> {
        (0..self.len())
            .map(|t| net.net_demand(self.load[t], self.pv[t]))
            .collect()
    }
}

pub fn load_profile(path: impl AsRef<Path>) -> Result<DayProfile> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    DayProfile::from_csv(file)
}
