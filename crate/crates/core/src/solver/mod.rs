//! Self-contained numerical kernels: dense LU, simplex LP, active-set QP and
//! a damped Newton driver.

pub mod linalg;
pub mod lp;
pub mod newton;
pub mod qp;

pub use linalg::{lu_solve, LinearSystem, Lu, Matrix};
pub use lp::{maximize, solve_lp, LpOutcome, LpProblem, LpSolution};
pub use newton::{newton, NewtonOptions, NewtonReport, NonlinearSystem};
pub use qp::{solve_qp, QpOutcome, QpProblem, QpSolution};
