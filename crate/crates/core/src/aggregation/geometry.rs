use super::Halfspace;
use crate::error::{Error, Result};
use crate::solver::{maximize, LpOutcome, LpProblem, Matrix};

/// Tolerance of the redundancy test.
pub const REDUNDANCY_TOL: f64 = 1e-9;

fn lp_over(rows: &[&Halfspace], dim: usize) -> Result<LpProblem> {
    let mut g = Matrix::zeros(0, dim);
    let mut h = Vec::with_capacity(rows.len());
    for hs in rows {
        g.push_row(&hs.n);
        h.push(hs.h);
    }
    LpProblem::from_inequalities(&vec![0.0; dim], &g, &h)
}

/// `max d·x` over a halfspace set; `None` when unbounded.
pub(crate) fn support_of(hs: &[Halfspace], dim: usize, d: &[f64]) -> Result<Option<f64>> {
    let refs: Vec<&Halfspace> = hs.iter().collect();
    match maximize(&lp_over(&refs, dim)?, d)? {
        LpOutcome::Optimal(s) => Ok(Some(s.objective)),
        LpOutcome::Unbounded => Ok(None),
        LpOutcome::Infeasible => Err(Error::Infeasible("empty halfspace set".into())),
    }
}

/// Scales each normal to unit max-norm and merges parallel duplicates,
/// keeping the tighter offset. Rows with a zero normal are dropped after a
/// consistency check.
pub(crate) fn normalize(hs: Vec<Halfspace>) -> Result<Vec<Halfspace>> {
    let mut out: Vec<Halfspace> = Vec::with_capacity(hs.len());
    for mut h in hs {
        let scale = h.n.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale <= 1e-12 {
            if h.h < -1e-9 {
                return Err(Error::Infeasible("contradictory constant row".into()));
            }
            continue;
        }
        for v in h.n.iter_mut() {
            *v /= scale;
            if v.abs() < 1e-13 {
                *v = 0.0;
            }
        }
        h.h /= scale;
        match out
            .iter_mut()
            .find(|o| o.n.iter().zip(&h.n).all(|(a, b)| (a - b).abs() <= 1e-12))
        {
            Some(o) => o.h = o.h.min(h.h),
            None => out.push(h),
        }
    }
    Ok(out)
}

/// Drops each halfspace whose normal, maximized over the others, stays
/// within `REDUNDANCY_TOL` of its offset.
pub fn remove_redundant(hs: Vec<Halfspace>, dim: usize) -> Result<Vec<Halfspace>> {
    let hs = normalize(hs)?;
    let mut keep = vec![true; hs.len()];
    for k in 0..hs.len() {
        let others: Vec<&Halfspace> = hs
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k && keep[*j])
            .map(|(_, h)| h)
            .collect();
        if others.is_empty() {
            continue;
        }
        match maximize(&lp_over(&others, dim)?, &hs[k].n)? {
            LpOutcome::Optimal(s) if s.objective <= hs[k].h + REDUNDANCY_TOL => keep[k] = false,
            LpOutcome::Infeasible => return Err(Error::Infeasible("empty halfspace set".into())),
            _ => {}
        }
    }
    Ok(hs
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(h, _)| h)
        .collect())
}
