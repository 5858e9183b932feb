//! Projection of linear models onto the coupling variables: support-function
//! outer approximations, exact Fourier–Motzkin elimination for small
//! instances, and the day-ahead power-energy envelope.

mod envelope;
mod fm;
mod geometry;
mod support;

use serde::{Deserialize, Serialize};

pub use envelope::{build_envelope, EnvelopeOptions};
pub use fm::{project_fourier_motzkin, FM_DEFAULT_CAP};
pub use geometry::remove_redundant;
pub use support::{even_directions, project_slice, project_support};

use crate::error::{Error, Result};

/// Labels of the horizon coupling space `(P_pcc[1..T], E_agg[1..T])`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingSpace {
    pub steps: usize,
    /// Step length in hours.
    pub dt: f64,
}

impl CouplingSpace {
    pub fn new(steps: usize, dt: f64) -> Result<Self> {
        if steps == 0 || !(dt > 0.0) {
            return Err(Error::Invalid(format!("invalid horizon {steps} x {dt} h")));
        }
        Ok(Self { steps, dt })
    }

    pub fn dim(&self) -> usize {
        2 * self.steps
    }

    /// Coordinate of `P_pcc` at step `t` (0-based).
    pub fn p(&self, t: usize) -> usize {
        t
    }

    /// Coordinate of `E_agg` at the end of step `t` (0-based).
    pub fn e(&self, t: usize) -> usize {
        self.steps + t
    }

    pub fn labels(&self) -> Vec<String> {
        (1..=self.steps)
            .map(|t| format!("P_pcc[{t}]"))
            .chain((1..=self.steps).map(|t| format!("E_agg[{t}]")))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub n: Vec<f64>,
    pub h: f64,
}

impl Halfspace {
    /// `n·x − h`; positive when violated.
    pub fn slack(&self, x: &[f64]) -> f64 {
        self.n.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - self.h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeKind {
    Outer,
    Exact,
}

/// Halfspace description `n·x ≤ h` of the feasible coupling set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlexibilityEnvelope {
    pub labels: Vec<String>,
    pub halfspaces: Vec<Halfspace>,
    pub kind: EnvelopeKind,
    pub provenance: String,
    /// Aggregate energy before the first step, when the space is a horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl FlexibilityEnvelope {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// Largest violation over all halfspaces (≤ 0 inside).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.halfspaces
            .iter()
            .map(|hs| hs.slack(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.max_violation(x) <= tol
    }

    /// Support value `max d·x` over the envelope; `None` when unbounded.
    pub fn support(&self, d: &[f64]) -> Result<Option<f64>> {
        geometry::support_of(&self.halfspaces, self.dim(), d)
    }

    /// `[min, max]` of coordinate `i`.
    pub fn interval(&self, i: usize) -> Result<(f64, f64)> {
        let mut e = vec![0.0; self.dim()];
        e[i] = 1.0;
        let hi = self.support(&e)?;
        e[i] = -1.0;
        let lo = self.support(&e)?.map(|v| -v);
        match (lo, hi) {
            (Some(lo), Some(hi)) => Ok((lo, hi)),
            _ => Err(Error::Invalid(format!("envelope unbounded along {}", self.labels[i]))),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
