use mixup_core::datasets::overparameterized_regime;
use mixup_core::linear::{
    estimate_k, run_linear_trial, write_trials_csv, LinearTrial, MixupLossOptions, MIN_NODES,
};
use mixup_core::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{config_error, LinearConfig};
use crate::output::{mean_sd, RunDir};
use crate::svg;

#[derive(Serialize)]
struct Summary {
    n: usize,
    d: usize,
    mixing: String,
    /// d > 10 n ln n + n − 1.
    overparameterized: bool,
    trials: usize,
    max_margin_fraction: f64,
    /// Over trials whose interpolator is the max-margin solution.
    mean_cosine: f64,
    min_cosine: f64,
    max_margin_residual: f64,
    mean_k_mixup: f64,
    /// Two-point margin k(P_f); `None` when the law makes it degenerate.
    k_two_point: Option<f64>,
    trial_results: Vec<LinearTrial>,
}

pub fn run(config: &LinearConfig, dir: &RunDir) -> anyhow::Result<String> {
    if config.trials == 0 {
        return Err(config_error("trials", "need at least one trial").into());
    }
    if config.nodes < MIN_NODES {
        return Err(config_error(
            "nodes",
            format!("need at least {MIN_NODES} quadrature nodes"),
        )
        .into());
    }
    let dist = config.mixing.build()?;
    let opts = MixupLossOptions {
        nodes: config.nodes,
        same_class_terms: config.same_class_terms,
    };
    let trials = (0..config.trials as u64)
        .into_par_iter()
        .map(|seed| {
            run_linear_trial(
                config.n,
                config.d,
                &dist,
                seed,
                opts,
                config.max_iters,
                config.grad_tol,
            )
        })
        .collect::<mixup_core::Result<Vec<_>>>()?;
    dir.write_with("results.csv", |buf| write_trials_csv(&trials, buf))?;
    let points: Vec<(f64, f64)> = trials.iter().map(|t| (t.seed as f64, t.cosine)).collect();
    dir.write(
        "plot.svg",
        svg::scatter(
            &format!("cos(θ_mixup, θ_max-margin), {}", dist.label()),
            "seed",
            "cosine",
            &points,
        ),
    )?;

    let certified: Vec<&LinearTrial> = trials.iter().filter(|t| t.is_max_margin).collect();
    let cosines: Vec<f64> = certified.iter().map(|t| t.cosine).collect();
    let k_two_point = match estimate_k(&dist, 1e-10) {
        Ok(k) => Some(k),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let summary = Summary {
        n: config.n,
        d: config.d,
        mixing: dist.label(),
        overparameterized: overparameterized_regime(config.n, config.d),
        trials: trials.len(),
        max_margin_fraction: certified.len() as f64 / trials.len() as f64,
        mean_cosine: mean_sd(&cosines).0,
        min_cosine: cosines.iter().copied().fold(f64::NAN, f64::min),
        max_margin_residual: certified
            .iter()
            .map(|t| t.margin_residual)
            .fold(f64::NAN, f64::max),
        mean_k_mixup: mean_sd(&trials.iter().map(|t| t.k_mixup).collect::<Vec<_>>()).0,
        k_two_point,
        trial_results: trials.clone(),
    };
    let line = format!(
        "max-margin in {}/{} trials, mean cosine {:.6}",
        certified.len(),
        trials.len(),
        summary.mean_cosine
    );
    dir.write_json("summary.json", &summary)?;
    Ok(line)
}
