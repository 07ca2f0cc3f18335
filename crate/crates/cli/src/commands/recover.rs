use std::fs::File;

use anyhow::Context;
use mixup_core::recovery::{
    form_midpoints, is_column_permutation, random_row_permutations, rank_concat, rank_report,
    read_labeled_midpoints, read_unlabeled_midpoints, recover_labeled,
    recover_unlabeled_bruteforce, write_labeled_midpoints, write_unlabeled_midpoints,
    RankTrialReport,
};
use mixup_core::rng::{seeded, substream};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::num;
use crate::config::{config_error, RecoverConfig, RecoverTask};
use crate::output::{csv_text, RunDir};

#[derive(Serialize)]
struct LabeledSummary {
    m: usize,
    dim: usize,
    residual: f64,
    /// Largest coordinate error against the generating points, when known.
    max_abs_error: Option<f64>,
}

#[derive(Serialize)]
struct UnlabeledSummary {
    m: usize,
    candidates: usize,
    unique: bool,
    contains_original: Option<bool>,
}

#[derive(Serialize)]
struct RankSummary {
    report: RankTrialReport,
    /// Every sampled non-column permutation reached rank ≥ m + 1.
    non_column_full: bool,
}

/// Points drawn uniformly from [−10, 10]^dim.
fn random_points(config: &RecoverConfig) -> Vec<Vec<f64>> {
    let mut rng = seeded(config.seed);
    (0..config.m)
        .map(|_| {
            (0..config.dim)
                .map(|_| rng.random_range(-10.0..10.0))
                .collect()
        })
        .collect()
}

pub fn run(config: &RecoverConfig, dir: &RunDir) -> anyhow::Result<String> {
    match config.task {
        RecoverTask::Labeled => labeled(config, dir),
        RecoverTask::Unlabeled => unlabeled(config, dir),
        RecoverTask::Rank => rank(config, dir),
    }
}

fn labeled(config: &RecoverConfig, dir: &RunDir) -> anyhow::Result<String> {
    let (mids, original) = match &config.input {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            (read_labeled_midpoints(file)?, None)
        }
        None => {
            let pts = random_points(config);
            (form_midpoints(&pts), Some(pts))
        }
    };
    dir.write_with("midpoints.csv", |buf| write_labeled_midpoints(&mids, buf))?;
    let rec = recover_labeled(&mids, config.m, config.tol)?;
    let dim = rec.points.first().map_or(0, Vec::len);

    let mut header = vec!["index".to_string()];
    header.extend((0..dim).map(|d| format!("coord{d}")));
    if original.is_some() {
        header.push("abs_error".into());
    }
    let mut max_abs_error: Option<f64> = None;
    let rows: Vec<Vec<String>> = rec
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut row = vec![i.to_string()];
            row.extend(p.iter().map(|v| num(*v)));
            if let Some(orig) = &original {
                let err = p
                    .iter()
                    .zip(&orig[i])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                max_abs_error = Some(max_abs_error.unwrap_or(0.0).max(err));
                row.push(num(err));
            }
            row
        })
        .collect();
    dir.write("results.csv", csv_text(&header, &rows)?)?;
    dir.write_json(
        "summary.json",
        &LabeledSummary {
            m: config.m,
            dim,
            residual: rec.residual,
            max_abs_error,
        },
    )?;
    Ok(format!(
        "recovered {} points, residual {:e}",
        config.m, rec.residual
    ))
}

fn unlabeled(config: &RecoverConfig, dir: &RunDir) -> anyhow::Result<String> {
    let (mids, original) = match &config.input {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let rows = read_unlabeled_midpoints(file)?;
            if rows.iter().any(|r| r.len() != 1) {
                return Err(config_error(
                    "input",
                    "unlabeled recovery needs one coordinate per midpoint",
                )
                .into());
            }
            (rows.into_iter().map(|r| r[0]).collect::<Vec<f64>>(), None)
        }
        None => {
            if config.dim != 1 {
                return Err(config_error("dim", "unlabeled recovery works on 1-D points").into());
            }
            let pts = random_points(config);
            let mut mids: Vec<f64> = form_midpoints(&pts)
                .into_iter()
                .map(|(_, v)| v[0])
                .collect();
            // forget which pair produced which midpoint
            mids.shuffle(&mut substream(config.seed, 1));
            let mut sorted: Vec<f64> = pts.into_iter().map(|p| p[0]).collect();
            sorted.sort_by(f64::total_cmp);
            (mids, Some(sorted))
        }
    };
    let rows: Vec<Vec<f64>> = mids.iter().map(|&v| vec![v]).collect();
    dir.write_with("midpoints.csv", |buf| write_unlabeled_midpoints(&rows, buf))?;
    let found = recover_unlabeled_bruteforce(&mids, config.m)?;

    let header = ["candidate", "index", "value"].map(String::from);
    let rows: Vec<Vec<String>> = found
        .iter()
        .enumerate()
        .flat_map(|(c, pts)| {
            pts.iter()
                .enumerate()
                .map(move |(i, v)| vec![c.to_string(), i.to_string(), num(*v)])
        })
        .collect();
    dir.write("results.csv", csv_text(&header, &rows)?)?;
    let contains_original = original.as_ref().map(|orig| {
        let scale = orig.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        found.iter().any(|f| {
            f.iter()
                .zip(orig)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * scale)
        })
    });
    dir.write_json(
        "summary.json",
        &UnlabeledSummary {
            m: config.m,
            candidates: found.len(),
            unique: found.len() == 1,
            contains_original,
        },
    )?;
    Ok(format!(
        "{} consistent multiset(s) for m = {}",
        found.len(),
        config.m
    ))
}

fn rank(config: &RecoverConfig, dir: &RunDir) -> anyhow::Result<String> {
    let perms = random_row_permutations(config.m, config.trials, config.seed);
    let report = rank_report(config.m, &perms)?;
    let header = ["trial", "is_column_permutation", "rank"].map(String::from);
    let mut rows = Vec::with_capacity(perms.len());
    for (t, perm) in perms.iter().enumerate() {
        rows.push(vec![
            t.to_string(),
            is_column_permutation(config.m, perm)?.to_string(),
            rank_concat(config.m, perm)?.to_string(),
        ]);
    }
    dir.write("results.csv", csv_text(&header, &rows)?)?;
    let non_column_full = report.min_rank_non_column.is_none_or(|r| r > config.m);
    let line = format!(
        "{} trials, {} column permutations, min non-column rank {:?}",
        report.trials, report.column_perm_count, report.min_rank_non_column
    );
    dir.write_json(
        "summary.json",
        &RankSummary {
            report,
            non_column_full,
        },
    )?;
    Ok(line)
}
