//! Pointwise checks of the two geometric assumptions on finite data, the
//! sampled estimate of the class-separation radius, and per-class margins.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use serde::Serialize;

use crate::datasets::{distance, LabeledDataset};
use crate::error::{Error, Result};
use crate::mixing::MixingDistribution;
use crate::oracle::{line_parameter, segment_hits, xi_table, SegmentHit};
use crate::rng::seeded;

/// A data point lying on a segment that ends in another class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollinearityViolation {
    pub x_index: usize,
    pub u_index: usize,
    /// Endpoint whose class differs from that of `x_index`.
    pub v_index: usize,
    /// Weight on u: x ≈ λu + (1−λ)v.
    pub lambda: f64,
    pub residual: f64,
}

/// Every triple (x ∈ X_i, u ∈ X, v ∈ X_j, j ≠ i) with x within `tol` of
/// λu + (1−λ)v for some λ ∈ (0, 1). Empty means the assumption holds.
pub fn check_assumption1(ds: &LabeledDataset, tol: f64) -> Vec<CollinearityViolation> {
    let m = ds.len();
    (0..m)
        .into_par_iter()
        .flat_map_iter(|xi| {
            let x = ds.point(xi);
            let class = ds.label(xi);
            let mut found = Vec::new();
            for vi in (0..m).filter(|&v| ds.label(v) != class) {
                for ui in 0..m {
                    let (u, v) = (ds.point(ui), ds.point(vi));
                    if distance(u, v) == 0.0 {
                        continue;
                    }
                    let (lambda, residual) = line_parameter(u, v, x);
                    if lambda > 0.0 && lambda < 1.0 && residual <= tol {
                        found.push(CollinearityViolation {
                            x_index: xi,
                            u_index: ui,
                            v_index: vi,
                            lambda,
                            residual,
                        });
                    }
                }
            }
            found
        })
        .collect()
}

/// CSV with columns `x_idx,u_idx,v_idx,lambda,residual`.
pub fn write_violations_csv(violations: &[CollinearityViolation], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x_idx", "u_idx", "v_idx", "lambda", "residual"])?;
    for v in violations {
        w.write_record([
            v.x_index.to_string(),
            v.u_index.to_string(),
            v.v_index.to_string(),
            v.lambda.to_string(),
            v.residual.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonEstimate {
    /// Minimum distance from a mixed point to a reference point of a third
    /// class; +∞ when no sample had an eligible reference point.
    pub min_distance: f64,
    pub n_samples: usize,
    /// Cross-class samples for which at least one reference point was eligible.
    pub eligible_samples: usize,
    /// Set when no sample had an eligible reference point.
    pub warning: Option<String>,
}

/// Sampled estimate of the separation radius: draw `n_samples` Mixup points
/// and return the smallest distance from one of them to a reference point of
/// a class other than the two that were mixed. Draws whose endpoints share a
/// class do not mix two classes and are skipped.
///
/// Samples are drawn sequentially from one seeded stream, so the first n
/// samples of a larger run coincide with a smaller run under the same seed.
pub fn estimate_epsilon(
    ds_train: &LabeledDataset,
    dist: &MixingDistribution,
    n_samples: usize,
    reference: &LabeledDataset,
    seed: u64,
) -> Result<EpsilonEstimate> {
    if reference.dim() != ds_train.dim() {
        return Err(Error::Dimension {
            expected: ds_train.dim(),
            found: reference.dim(),
        });
    }
    if n_samples == 0 {
        return Err(Error::Contract("n_samples must be at least 1".into()));
    }
    let mut rng = seeded(seed);
    let m = ds_train.len();
    let samples: Vec<(usize, usize, f64)> = (0..n_samples)
        .map(|_| {
            let s = rng.random_range(0..m);
            let t = rng.random_range(0..m);
            let lambda = dist.sample(&mut rng);
            (s, t, lambda)
        })
        .collect();

    let minima: Vec<Option<f64>> = samples
        .par_iter()
        .map(|&(s, t, lambda)| {
            let (cs, ct) = (ds_train.label(s), ds_train.label(t));
            if cs == ct {
                return None;
            }
            let z: Vec<f64> = ds_train
                .point(s)
                .iter()
                .zip(ds_train.point(t))
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect();
            let mut best: Option<f64> = None;
            for r in 0..reference.len() {
                let c = reference.label(r);
                if c == cs || c == ct {
                    continue;
                }
                let bound = best.unwrap_or(f64::INFINITY);
                let mut acc = 0.0;
                for (a, b) in z.iter().zip(reference.point(r)) {
                    acc += (a - b) * (a - b);
                    if acc >= bound {
                        break;
                    }
                }
                if acc < bound {
                    best = Some(acc);
                }
            }
            best.map(f64::sqrt)
        })
        .collect();

    let eligible = minima.iter().flatten().count();
    let min_distance = minima
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let warning = (eligible == 0).then(|| {
        "no reference point belongs to a class outside a mixed pair; estimate is +inf".to_string()
    });
    Ok(EpsilonEstimate {
        min_distance,
        n_samples,
        eligible_samples: eligible,
        warning,
    })
}

/// Outcome of the pointwise check of the second assumption.
#[derive(Debug, Clone, PartialEq)]
pub struct Assumption2Report {
    pub holds: bool,
    /// Segments responsible for a failure.
    pub witnesses: Vec<SegmentHit>,
    /// No segment reaches B_ε(x); the check then holds vacuously.
    pub outside_xmix: bool,
}

/// Checks at probe `x` that, within B_ε(x):
/// (a) every class-i-to-class-j segment is met only with weight > 1 − δ on the class-i end,
/// (b) no segment joining two classes other than i is met,
/// (c) ξ^{i,j} ≥ ξ^{j,i} for every j ≠ i.
///
/// "Measure zero" is read as an intersection interval no longer than `tol_line`.
pub fn check_assumption2(
    ds: &LabeledDataset,
    dist: &MixingDistribution,
    x: &[f64],
    class: usize,
    epsilon: f64,
    delta: f64,
    tol_line: f64,
) -> Result<Assumption2Report> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Contract(format!(
            "δ must lie in (0, 1/2), got {delta}"
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Contract(format!(
            "ε must be positive, got {epsilon}"
        )));
    }
    if class == 0 || class > ds.k() {
        return Err(Error::Contract(format!(
            "class {class} out of range 1..={}",
            ds.k()
        )));
    }
    let hits = segment_hits(ds, x, epsilon, tol_line)?;
    if hits.is_empty() {
        return Ok(Assumption2Report {
            holds: true,
            witnesses: Vec::new(),
            outside_xmix: true,
        });
    }
    let mut witnesses = Vec::new();
    for hit in &hits {
        let (lo, hi) = hit.lambda_interval;
        let (ci, cj) = hit.classes;
        let bad = if ci == class && cj != class {
            let end = hi.min(1.0 - delta);
            end - lo > tol_line
        } else if ci != class && cj != class {
            hi - lo > tol_line
        } else {
            false
        };
        if bad {
            witnesses.push(hit.clone());
        }
    }
    if witnesses.is_empty() {
        let table = xi_table(ds, dist, x, epsilon)?;
        let i = class - 1;
        for j in (0..ds.k()).filter(|&j| j != i) {
            let scale = table.xi[i][j].max(table.xi[j][i]);
            if table.xi[i][j] < table.xi[j][i] - 1e-12 * scale {
                witnesses.extend(hits.iter().filter(|h| h.classes == (j + 1, class)).cloned());
            }
        }
    }
    Ok(Assumption2Report {
        holds: witnesses.is_empty(),
        witnesses,
        outside_xmix: false,
    })
}

/// Half the smallest distance from class `class` to any other class.
pub fn margin_radius(ds: &LabeledDataset, class: usize) -> f64 {
    (1..=ds.k())
        .filter(|&j| j != class)
        .map(|j| ds.class_distance(class, j))
        .fold(f64::INFINITY, f64::min)
        * 0.5
}
