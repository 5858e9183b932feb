//! Damped Newton iteration for square nonlinear systems.

use crate::error::{Error, Result};
use crate::solver::linalg::{norm_inf, Lu, Matrix};

pub trait NonlinearSystem {
    fn residual(&self, x: &[f64]) -> Vec<f64>;
    fn jacobian(&self, x: &[f64]) -> Matrix;
}

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    /// Stop once `‖F(x)‖∞` drops to this value.
    pub tol: f64,
    /// Largest mismatch still accepted when the iteration budget runs out.
    pub accept: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            accept: 1e-8,
            max_iter: 50,
            max_halvings: 20,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonReport {
    pub x: Vec<f64>,
    pub mismatch: f64,
    pub iterations: usize,
}

/// Newton's method with step halving whenever the mismatch grows.
pub fn newton<S: NonlinearSystem>(
    sys: &S,
    x0: Vec<f64>,
    opts: NewtonOptions,
    solver: &'static str,
) -> Result<NewtonReport> {
    let mut x = x0;
    let mut f = sys.residual(&x);
    let mut mismatch = norm_inf(&f);
    let mut iterations = 0;
    while mismatch > opts.tol {
        if iterations == opts.max_iter {
            if mismatch <= opts.accept {
                break;
            }
            return Err(Error::NonConvergence {
                solver,
                iterations,
                mismatch,
            });
        }
        iterations += 1;
        let lu = Lu::factor(&sys.jacobian(&x))?;
        let dx = lu.solve(&f);
        let mut alpha = 1.0;
        let mut trial;
        let mut f_trial;
        let mut halvings = 0;
        loop {
            trial = x.iter().zip(&dx).map(|(xi, di)| xi - alpha * di).collect::<Vec<_>>();
            f_trial = sys.residual(&trial);
            let m = norm_inf(&f_trial);
            if m.is_finite() && (m < mismatch || halvings == opts.max_halvings) {
                break;
            }
            if halvings == opts.max_halvings {
                break;
            }
            alpha *= 0.5;
            halvings += 1;
        }
        let m = norm_inf(&f_trial);
        if !m.is_finite() {
            return Err(Error::NonConvergence {
                solver,
                iterations,
                mismatch: m,
            });
        }
        if m >= mismatch && mismatch <= opts.accept {
            // no further progress below roundoff
            break;
        }
        x = trial;
        f = f_trial;
        mismatch = m;
    }
    Ok(NewtonReport {
        x,
        mismatch,
        iterations,
    })
}
