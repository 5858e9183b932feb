pub mod error;
pub mod acpf;
pub mod aggregation;
pub mod linear_models;
pub mod network;
pub mod reporting;
pub mod scheduling;
pub mod solver;
pub mod verification;

pub use error::{Error, Result};
