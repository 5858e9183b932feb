use super::geometry::{normalize, remove_redundant};
use super::support::{provenance, x_labels};
use super::{EnvelopeKind, FlexibilityEnvelope, Halfspace};
use crate::error::{Error, Result};
use crate::linear_models::{LinearModel, ReducedModel};

/// Default limit on the model's total column count.
pub const FM_DEFAULT_CAP: usize = 30;

/// Exact projection by Fourier–Motzkin elimination of every local column.
///
/// Equalities are eliminated first by the reduction, then the remaining local
/// columns one at a time (fewest generated rows first), pruning redundant
/// rows by LP after each step.
pub fn project_fourier_motzkin(model: &LinearModel, cap: usize) -> Result<FlexibilityEnvelope> {
    if model.num_cols() > cap {
        return Err(Error::TooLarge(format!(
            "{} columns exceed the elimination cap of {cap}",
            model.num_cols()
        )));
    }
    let red = ReducedModel::new(model)?;
    let nx = red.nx;
    let (a, b) = red.halfspaces();
    let mut rows: Vec<Halfspace> = a.into_iter().zip(b).map(|(n, h)| Halfspace { n, h }).collect();
    let mut dim = red.nz();
    rows = remove_redundant(rows, dim)?;
    while dim > nx {
        // choose the local column with the smallest pos·neg product
        let col = (nx..dim)
            .min_by_key(|&c| {
                let pos = rows.iter().filter(|r| r.n[c] > 1e-12).count();
                let neg = rows.iter().filter(|r| r.n[c] < -1e-12).count();
                pos * neg
            })
            .expect("at least one local column");
        rows = eliminate(&rows, col)?;
        dim -= 1;
        rows = remove_redundant(rows, dim)?;
    }
    Ok(FlexibilityEnvelope {
        labels: x_labels(model),
        halfspaces: rows,
        kind: EnvelopeKind::Exact,
        provenance: provenance(model),
        initial_energy: None,
        dt: None,
    })
}

/// Removes column `col`, combining every positive row with every negative one.
fn eliminate(rows: &[Halfspace], col: usize) -> Result<Vec<Halfspace>> {
    let drop_col = |n: &[f64]| -> Vec<f64> {
        n.iter()
            .enumerate()
            .filter(|(j, _)| *j != col)
            .map(|(_, v)| *v)
            .collect()
    };
    let mut out = Vec::new();
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for r in rows {
        let a = r.n[col];
        if a > 1e-12 {
            pos.push(r);
        } else if a < -1e-12 {
            neg.push(r);
        } else {
            out.push(Halfspace {
                n: drop_col(&r.n),
                h: r.h,
            });
        }
    }
    for p in &pos {
        for q in &neg {
            let (sp, sq) = (1.0 / p.n[col], -1.0 / q.n[col]);
            let n: Vec<f64> = p.n.iter().zip(&q.n).map(|(a, b)| sp * a + sq * b).collect();
            out.push(Halfspace {
                n: drop_col(&n),
                h: sp * p.h + sq * q.h,
            });
        }
    }
    normalize(out)
}
