//! Exact nonlinear power flow: polar AC (Newton–Raphson) and DistFlow for
//! radial networks. These serve as the benchmark and verification oracle for
//! the linear models.

mod distflow;
mod polar;

pub use distflow::{solve_distflow, DistFlowState};
pub use polar::{
    ac_residual, branch_flows, bus_power, complex_bus_power, polar_jacobian, solve_ac,
    solve_ac_with, total_losses, AcOptions, BranchFlows, PowerFlowState,
};
