//! Reconstructing points from their pairwise midpoints.
//!
//! With labels, the C(m,2) midpoints determine the points through the Mixup
//! matrix A (one row per pair, a one in each of the two columns). Without
//! labels the question becomes whether some other row permutation P admits a
//! solution of Aw = PAw', which is governed by the rank of [A, PA].

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rayon::prelude::*;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::substream;

/// Rows are the pairs (i, j), i < j, in lexicographic order (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixupMatrix {
    m: usize,
    rows: Vec<(usize, usize)>,
}

pub fn mixup_matrix(m: usize) -> MixupMatrix {
    let rows = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    MixupMatrix { m, rows }
}

impl MixupMatrix {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rows(&self) -> &[(usize, usize)] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Index of the row for pair {i, j} in either order.
    pub fn row_index(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if b >= self.m || a == b {
            return None;
        }
        // rows before block a: Σ_{r<a} (m − 1 − r)
        Some(a * (2 * self.m - a - 1) / 2 + (b - a - 1))
    }

    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        self.rows
            .iter()
            .map(|&(i, j)| {
                let mut row = vec![0; self.m];
                row[i] = 1;
                row[j] = 1;
                row
            })
            .collect()
    }
}

/// All pairwise midpoints of `points`, keyed by pair in lexicographic order.
pub fn form_midpoints(points: &[Vec<f64>]) -> Vec<((usize, usize), Vec<f64>)> {
    mixup_matrix(points.len())
        .rows
        .iter()
        .map(|&(i, j)| {
            (
                (i, j),
                points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect(),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecovery {
    pub points: Vec<Vec<f64>>,
    /// ‖Aw − 2b‖∞ over all coordinates.
    pub residual: f64,
}

/// Solves Aw = 2b coordinate-wise from labeled midpoints.
///
/// AᵀA = (m−2)I + J has the explicit inverse (I − J/(2m−2))/(m−2), so the
/// least-squares solution is closed-form; it is exact when the data are
/// consistent. Fails with [`Error::Inconsistent`] when the residual exceeds `tol`.
pub fn recover_labeled(
    midpoints: &[((usize, usize), Vec<f64>)],
    m: usize,
    tol: f64,
) -> Result<LabeledRecovery> {
    if m < 3 {
        return Err(Error::Underdetermined(format!(
            "{m} points cannot be recovered from {} midpoint(s)",
            m * m.saturating_sub(1) / 2
        )));
    }
    let a = mixup_matrix(m);
    let mut slot: Vec<Option<&[f64]>> = vec![None; a.n_rows()];
    for ((i, j), value) in midpoints {
        let r = a.row_index(*i, *j).ok_or_else(|| {
            Error::Contract(format!("pair ({i}, {j}) is not a valid pair for m = {m}"))
        })?;
        if slot[r].is_some() {
            return Err(Error::Contract(format!("pair ({i}, {j}) given twice")));
        }
        slot[r] = Some(value);
    }
    let missing = slot.iter().filter(|s| s.is_none()).count();
    if missing > 0 {
        return Err(Error::Underdetermined(format!(
            "{missing} of {} pairs missing",
            a.n_rows()
        )));
    }
    let b: Vec<&[f64]> = slot.into_iter().map(Option::unwrap).collect();
    let dim = b[0].len();
    if let Some(bad) = b.iter().find(|v| v.len() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            found: bad.len(),
        });
    }

    let mut points = vec![vec![0.0; dim]; m];
    let mut residual: f64 = 0.0;
    for d in 0..dim {
        let mut c = vec![0.0; m];
        for (r, &(i, j)) in a.rows.iter().enumerate() {
            c[i] += 2.0 * b[r][d];
            c[j] += 2.0 * b[r][d];
        }
        let shift = c.iter().sum::<f64>() / (2 * m - 2) as f64;
        for (p, ci) in points.iter_mut().zip(&c) {
            p[d] = (ci - shift) / (m - 2) as f64;
        }
        for (r, &(i, j)) in a.rows.iter().enumerate() {
            residual = residual.max((points[i][d] + points[j][d] - 2.0 * b[r][d]).abs());
        }
    }
    if residual > tol {
        return Err(Error::Inconsistent {
            residual,
            tolerance: tol,
        });
    }
    Ok(LabeledRecovery { points, residual })
}

/// Exact rank of an integer matrix by fraction-free (Bareiss) elimination.
pub fn integer_rank(matrix: &[Vec<i64>]) -> Result<usize> {
    let mut a: Vec<Vec<i128>> = matrix
        .iter()
        .map(|r| r.iter().map(|&v| v as i128).collect())
        .collect();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let overflow = || Error::Rank("integer overflow in exact elimination".into());
    let mut rank = 0;
    let mut prev: i128 = 1;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(rank, p);
        let pivot = a[rank][col];
        for r in rank + 1..rows {
            let factor = a[r][col];
            for c in col..cols {
                let v = pivot
                    .checked_mul(a[r][c])
                    .and_then(|x| {
                        factor
                            .checked_mul(a[rank][c])
                            .and_then(|y| x.checked_sub(y))
                    })
                    .ok_or_else(overflow)?;
                a[r][c] = v / prev;
            }
        }
        prev = pivot;
        rank += 1;
    }
    Ok(rank)
}

fn check_permutation(n: usize, perm: &[usize]) -> Result<()> {
    if perm.len() != n {
        return Err(Error::Contract(format!(
            "permutation has length {}, expected {n}",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::Contract("not a permutation".into()));
        }
    }
    Ok(())
}

/// Rank of [A, PA] where row r of PA is row `perm[r]` of A.
pub fn rank_concat(m: usize, perm: &[usize]) -> Result<usize> {
    let a = mixup_matrix(m);
    check_permutation(a.n_rows(), perm)?;
    let dense = a.to_dense();
    let stacked: Vec<Vec<i64>> = (0..a.n_rows())
        .map(|r| dense[r].iter().chain(&dense[perm[r]]).copied().collect())
        .collect();
    integer_rank(&stacked)
}

/// Whether PA equals A up to a permutation of its columns.
pub fn is_column_permutation(m: usize, perm: &[usize]) -> Result<bool> {
    let a = mixup_matrix(m);
    check_permutation(a.n_rows(), perm)?;
    let columns = |rows: &dyn Fn(usize) -> (usize, usize)| {
        let mut cols = vec![Vec::new(); m];
        for r in 0..a.n_rows() {
            let (i, j) = rows(r);
            cols[i].push(r);
            cols[j].push(r);
        }
        cols.sort();
        cols
    };
    Ok(columns(&|r| a.rows[r]) == columns(&|r| a.rows[perm[r]]))
}

/// The row permutation of A induced by relabeling point i as `sigma[i]`.
pub fn induced_row_permutation(sigma: &[usize]) -> Result<Vec<usize>> {
    let m = sigma.len();
    check_permutation(m, sigma)?;
    let a = mixup_matrix(m);
    Ok(a.rows
        .iter()
        .map(|&(i, j)| a.row_index(sigma[i], sigma[j]).expect("valid pair"))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankTrialReport {
    pub m: usize,
    pub trials: usize,
    pub column_perm_count: usize,
    pub min_rank_non_column: Option<usize>,
    pub max_rank_column: Option<usize>,
}

/// Summarizes rank([A, PA]) over the given row permutations.
pub fn rank_report(m: usize, perms: &[Vec<usize>]) -> Result<RankTrialReport> {
    let results = perms
        .par_iter()
        .map(|p| Ok((is_column_permutation(m, p)?, rank_concat(m, p)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RankTrialReport {
        m,
        trials: perms.len(),
        column_perm_count: results.iter().filter(|r| r.0).count(),
        min_rank_non_column: results.iter().filter(|r| !r.0).map(|r| r.1).min(),
        max_rank_column: results.iter().filter(|r| r.0).map(|r| r.1).max(),
    })
}

/// `n_trials` uniformly random row permutations, trial t drawn from sub-stream t.
pub fn random_row_permutations(m: usize, n_trials: usize, seed: u64) -> Vec<Vec<usize>> {
    let n = m * m.saturating_sub(1) / 2;
    (0..n_trials)
        .map(|t| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut substream(seed, t as u64));
            p
        })
        .collect()
}

pub fn permutation_rank_trial(m: usize, n_trials: usize, seed: u64) -> Result<RankTrialReport> {
    rank_report(m, &random_row_permutations(m, n_trials, seed))
}

/// Largest point count accepted by [`recover_unlabeled_bruteforce`].
pub const MAX_UNLABELED_M: usize = 7;

fn regenerate_sorted_sums(points: &[f64]) -> Vec<f64> {
    let mut sums: Vec<f64> = (0..points.len())
        .flat_map(|i| (i + 1..points.len()).map(move |j| points[i] + points[j]))
        .collect();
    sums.sort_by(f64::total_cmp);
    sums
}

/// Every multiset of m reals whose pairwise midpoints equal `midpoints` as a
/// multiset (1-D only), each sorted ascending.
///
/// With sorted points x₁ ≤ … ≤ xₘ and sorted pair sums, the two smallest sums
/// are x₁+x₂ and x₁+x₃; guessing which sum is x₂+x₃ fixes x₁, after which the
/// smallest unused sum is always x₁ plus the next point. Each guess is checked
/// by regenerating the midpoints, so every returned multiset is consistent.
pub fn recover_unlabeled_bruteforce(midpoints: &[f64], m: usize) -> Result<Vec<Vec<f64>>> {
    if m > MAX_UNLABELED_M {
        return Err(Error::Size(format!(
            "unlabeled search supports m ≤ {MAX_UNLABELED_M}, got {m}"
        )));
    }
    if m < 3 {
        return Err(Error::Underdetermined(format!(
            "{m} points are not determined by their midpoints"
        )));
    }
    let n = m * (m - 1) / 2;
    if midpoints.len() != n {
        return Err(Error::Contract(format!(
            "expected {n} midpoints for m = {m}, got {}",
            midpoints.len()
        )));
    }
    let mut sums: Vec<f64> = midpoints.iter().map(|v| 2.0 * v).collect();
    sums.sort_by(f64::total_cmp);
    let scale = sums.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-9 * scale;

    let mut found: Vec<Vec<f64>> = Vec::new();
    for guess in 2..n {
        let x1 = 0.5 * (sums[0] + sums[1] - sums[guess]);
        let Some(points) = peel(&sums, x1, m, tol) else {
            continue;
        };
        let regenerated = regenerate_sorted_sums(&points);
        let consistent = regenerated
            .iter()
            .zip(&sums)
            .all(|(a, b)| (a - b).abs() <= tol);
        if consistent
            && !found
                .iter()
                .any(|f| f.iter().zip(&points).all(|(a, b)| (a - b).abs() <= tol))
        {
            found.push(points);
        }
    }
    Ok(found)
}

fn peel(sums: &[f64], x1: f64, m: usize, tol: f64) -> Option<Vec<f64>> {
    let mut used = vec![false; sums.len()];
    let mut points = vec![x1];
    while points.len() < m {
        let first = used.iter().position(|u| !u)?;
        let next = sums[first] - x1;
        if next < points[points.len() - 1] - tol {
            return None;
        }
        for &p in &points {
            let target = p + next;
            let idx = (0..sums.len()).find(|&i| !used[i] && (sums[i] - target).abs() <= tol)?;
            used[idx] = true;
        }
        points.push(next);
    }
    Some(points)
}

/// CSV with columns `i,j,coord0,coord1,…` (0-based pair indices).
pub fn write_labeled_midpoints(
    midpoints: &[((usize, usize), Vec<f64>)],
    out: impl Write,
) -> Result<()> {
    let dim = midpoints.first().map_or(0, |m| m.1.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["i".to_string(), "j".into()];
    header.extend((0..dim).map(|d| format!("coord{d}")));
    w.write_record(&header)?;
    for ((i, j), v) in midpoints {
        let mut row = vec![i.to_string(), j.to_string()];
        row.extend(v.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labeled_midpoints(reader: impl Read) -> Result<Vec<((usize, usize), Vec<f64>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parse_err = |message: String| Error::Parse { line, message };
        if record.len() < 3 {
            return Err(parse_err("expected i,j and at least one coordinate".into()));
        }
        let i = record[0]
            .parse::<usize>()
            .map_err(|e| parse_err(e.to_string()))?;
        let j = record[1]
            .parse::<usize>()
            .map_err(|e| parse_err(e.to_string()))?;
        let coords = record
            .iter()
            .skip(2)
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| parse_err(format!("`{f}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(((i, j), coords));
    }
    Ok(out)
}

/// CSV with columns `coord0,…`, one midpoint per row.
pub fn write_unlabeled_midpoints(midpoints: &[Vec<f64>], out: impl Write) -> Result<()> {
    let dim = midpoints.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(out);
    w.write_record((0..dim).map(|d| format!("coord{d}")))?;
    for v in midpoints {
        w.write_record(v.iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_unlabeled_midpoints(reader: impl Read) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        out.push(
            record
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|e| Error::Parse {
                        line,
                        message: format!("`{f}`: {e}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(out)
}

/// Pair-sum multiplicities; used to find colliding integer instances.
pub fn pair_sum_signature(points: &[i64]) -> HashMap<i64, usize> {
    let mut sig = HashMap::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            *sig.entry(points[i] + points[j]).or_insert(0) += 1;
        }
    }
    sig
}
