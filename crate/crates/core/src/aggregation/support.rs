use rayon::prelude::*;

use super::geometry::remove_redundant;
use super::{EnvelopeKind, FlexibilityEnvelope, Halfspace};
use crate::error::{Error, Result};
use crate::linear_models::{LinearModel, ReducedModel};

/// `k` unit vectors `(cos 2πi/k, sin 2πi/k)`.
pub fn even_directions(k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            vec![a.cos(), a.sin()]
        })
        .collect()
}

/// One support LP per direction; unbounded directions are dropped.
fn supports(red: &ReducedModel, dirs: &[Vec<f64>]) -> Result<Vec<Option<(Halfspace, Vec<f64>)>>> {
    dirs.par_iter()
        .map(|d| {
            Ok(red.support(d)?.map(|(val, z)| {
                (
                    Halfspace {
                        n: d.clone(),
                        h: val,
                    },
                    z[..red.nx].to_vec(),
                )
            }))
        })
        .collect()
}

/// Outer approximation of the model's coupling set: the intersection of
/// `n·x ≤ max n·x` over the given directions, with redundant rows removed.
pub fn project_support(model: &LinearModel, directions: &[Vec<f64>]) -> Result<FlexibilityEnvelope> {
    let nx = model.nx();
    if directions.iter().any(|d| d.len() != nx) {
        return Err(Error::Dimension(format!("directions must have {nx} entries")));
    }
    let red = ReducedModel::new(model)?;
    let hs: Vec<Halfspace> = supports(&red, directions)?
        .into_iter()
        .flatten()
        .map(|(h, _)| h)
        .collect();
    Ok(FlexibilityEnvelope {
        labels: x_labels(model),
        halfspaces: remove_redundant(hs, nx)?,
        kind: EnvelopeKind::Outer,
        provenance: provenance(model),
        initial_energy: None,
        dt: None,
    })
}

pub(super) fn x_labels(model: &LinearModel) -> Vec<String> {
    model.column_names()[..model.nx()].to_vec()
}

pub(super) fn provenance(model: &LinearModel) -> String {
    let kind = model.kind.map_or("custom", |k| k.name());
    match &model.base_id {
        Some(b) => format!("{kind}@{b}"),
        None => kind.to_string(),
    }
}

/// Two-dimensional projection: `directions` evenly spaced support LPs, then,
/// with `refine`, repeated queries along the edge normals of the hull of the
/// support points until every hull edge is itself supported. A converged
/// refinement yields the exact polygon.
pub fn project_slice(model: &LinearModel, directions: usize, refine: bool) -> Result<(Vec<Halfspace>, EnvelopeKind)> {
    if model.nx() != 2 {
        return Err(Error::Dimension("slice projection needs two coupling columns".into()));
    }
    let red = ReducedModel::new(model)?;
    project_reduced_slice(&red, directions, refine)
}

pub(crate) fn project_reduced_slice(
    red: &ReducedModel,
    directions: usize,
    refine: bool,
) -> Result<(Vec<Halfspace>, EnvelopeKind)> {
    let mut queried = even_directions(directions);
    let mut hs = Vec::new();
    let mut points: Vec<[f64; 2]> = Vec::new();
    let mut bounded = true;
    for r in supports(red, &queried)? {
        match r {
            Some((h, x)) => {
                hs.push(h);
                points.push([x[0], x[1]]);
            }
            None => bounded = false,
        }
    }
    let mut kind = EnvelopeKind::Outer;
    if refine && bounded {
        for _ in 0..64 {
            let hull = convex_hull(&points);
            let fresh: Vec<Vec<f64>> = hull_normals(&hull)
                .into_iter()
                .filter(|n| !queried.iter().any(|q| (q[0] - n[0]).abs() + (q[1] - n[1]).abs() < 1e-12))
                .collect();
            if fresh.is_empty() {
                kind = EnvelopeKind::Exact;
                break;
            }
            for (n, r) in fresh.iter().zip(supports(red, &fresh)?) {
                if let Some((h, x)) = r {
                    let on_hull = hull
                        .iter()
                        .map(|p| n[0] * p[0] + n[1] * p[1])
                        .fold(f64::NEG_INFINITY, f64::max);
                    if h.h > on_hull + 1e-10 {
                        points.push([x[0], x[1]]);
                    }
                    hs.push(h);
                }
            }
            queried.extend(fresh);
        }
    }
    Ok((remove_redundant(hs, 2)?, kind))
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise hull (monotone chain), collinear points removed.
fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    if pts.len() < 3 {
        return pts;
    }
    let scale = pts.iter().flatten().fold(1e-3f64, |a, v| a.max(v.abs()));
    let eps = 1e-14 * scale * scale;
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= eps {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= eps {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Outward unit normals of the hull edges; a segment yields both sides.
fn hull_normals(hull: &[[f64; 2]]) -> Vec<Vec<f64>> {
    let k = hull.len();
    if k < 2 {
        return Vec::new();
    }
    (0..k)
        .filter_map(|i| {
            let (p, q) = (hull[i], hull[(i + 1) % k]);
            let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
            let len = dx.hypot(dy);
            (len > 1e-12).then(|| vec![dy / len, -dx / len])
        })
        .collect()
}
