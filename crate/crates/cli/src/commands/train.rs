use mixup_core::datasets::LabeledDataset;
use mixup_core::mixing::MixingDistribution;
use mixup_core::oracle::{BoundaryGrid, ClassProbs, GridCell};
use mixup_core::training::{
    evaluate, init_mlp, train, AdamConfig, Evaluation, TrainConfig, TrainHistory, TrainMode,
};
use rayon::prelude::*;
use serde::Serialize;

use super::{grid_spec, num};
use crate::config::{config_error, GridConfig, ModeSelection, TrainRunConfig};
use crate::output::{csv_text, mean_sd, RunDir};
use crate::svg::{self, Series};

/// One (objective, α) setting; seeds are runs within it.
#[derive(Clone)]
struct Setting {
    tag: String,
    alpha: Option<f64>,
    mode: TrainMode,
}

struct Run {
    setting: usize,
    seed: u64,
    history: TrainHistory,
    eval: Evaluation,
}

#[derive(Serialize)]
struct PointStats {
    index: usize,
    label: usize,
    mean_probs: Vec<f64>,
    sd_probs: Vec<f64>,
}

#[derive(Serialize)]
struct SettingSummary {
    tag: String,
    alpha: Option<f64>,
    runs: usize,
    final_train_error_mean: f64,
    final_train_error_sd: f64,
    runs_with_zero_error: usize,
    /// Per-point class probabilities over seeds (small datasets only).
    points: Option<Vec<PointStats>>,
}

#[derive(Serialize)]
struct Summary {
    dataset: String,
    layer_sizes: Vec<usize>,
    epochs: usize,
    seeds: Vec<u64>,
    settings: Vec<SettingSummary>,
}

const POINT_TABLE_LIMIT: usize = 50;

fn settings(config: &TrainRunConfig) -> anyhow::Result<Vec<Setting>> {
    let mut out = Vec::new();
    if matches!(config.mode, ModeSelection::Erm | ModeSelection::Both) {
        out.push(Setting {
            tag: "erm".into(),
            alpha: None,
            mode: TrainMode::Erm,
        });
    }
    if matches!(config.mode, ModeSelection::Mixup | ModeSelection::Both) {
        if config.alphas.is_empty() {
            return Err(config_error("alphas", "Mixup training needs at least one α").into());
        }
        for &alpha in &config.alphas {
            out.push(Setting {
                tag: format!("mixup-a{alpha}"),
                alpha: Some(alpha),
                mode: TrainMode::Mixup(MixingDistribution::beta_symmetric(alpha)?),
            });
        }
    }
    Ok(out)
}

pub fn run(config: &TrainRunConfig, dir: &RunDir) -> anyhow::Result<String> {
    if config.seeds.is_empty() {
        return Err(config_error("seeds", "need at least one seed").into());
    }
    if config.hidden.contains(&0) {
        return Err(config_error("hidden", "layer widths must be positive").into());
    }
    let ds = config.dataset.load()?;
    let settings = settings(config)?;
    let mut sizes = vec![ds.dim()];
    sizes.extend(&config.hidden);
    sizes.push(ds.k());

    let jobs: Vec<(usize, u64)> = (0..settings.len())
        .flat_map(|s| config.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(s, seed)| -> anyhow::Result<Run> {
            let train_config = TrainConfig {
                epochs: config.epochs,
                batch_size: config.batch_size,
                seed,
                adam: AdamConfig::default(),
            };
            let history = train(
                init_mlp(&sizes, seed)?,
                &ds,
                &settings[s].mode,
                &train_config,
            )?;
            let eval = evaluate(&history.model, &ds)?;
            Ok(Run {
                setting: s,
                seed,
                history,
                eval,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    for run in &runs {
        let file = format!("history/{}-s{}.csv", settings[run.setting].tag, run.seed);
        dir.write_with(&file, |buf| run.history.write_csv(buf))?;
    }
    dir.write("results.csv", evaluation_csv(&ds, &settings, &runs)?)?;
    dir.write("curves.csv", curves_csv(&settings, &runs)?)?;
    dir.write("plot.svg", curves_svg(&ds, &settings, &runs))?;
    if ds.dim() == 2 && config.grid > 0 {
        for (s, setting) in settings.iter().enumerate() {
            let models: Vec<&Run> = runs.iter().filter(|r| r.setting == s).collect();
            let grid = mean_boundary(&ds, config.grid, &models);
            dir.write_with(&format!("boundary-{}.csv", setting.tag), |buf| {
                grid.write_csv(buf)
            })?;
            let title = format!(
                "{} / {} (mean of {} runs)",
                ds.name(),
                setting.tag,
                models.len()
            );
            dir.write(
                &format!("boundary-{}.svg", setting.tag),
                svg::boundary_heatmap(&grid, Some(&ds), &title),
            )?;
        }
    }

    let summaries: Vec<SettingSummary> = settings
        .iter()
        .enumerate()
        .map(|(s, setting)| summarize(&ds, s, setting, &runs))
        .collect();
    let line = summaries
        .iter()
        .map(|s| {
            format!(
                "{}: final train error {:.4} ± {:.4}",
                s.tag, s.final_train_error_mean, s.final_train_error_sd
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    dir.write_json(
        "summary.json",
        &Summary {
            dataset: ds.name().to_string(),
            layer_sizes: sizes,
            epochs: config.epochs,
            seeds: config.seeds.clone(),
            settings: summaries,
        },
    )?;
    Ok(line)
}

fn summarize(ds: &LabeledDataset, s: usize, setting: &Setting, runs: &[Run]) -> SettingSummary {
    let mine: Vec<&Run> = runs.iter().filter(|r| r.setting == s).collect();
    let errors: Vec<f64> = mine
        .iter()
        .map(|r| r.history.final_train_error().unwrap_or(f64::NAN))
        .collect();
    let (mean, sd) = mean_sd(&errors);
    let points = (ds.len() <= POINT_TABLE_LIMIT).then(|| {
        (0..ds.len())
            .map(|i| {
                let per_class: Vec<(f64, f64)> = (1..=ds.k())
                    .map(|c| {
                        mean_sd(
                            &mine
                                .iter()
                                .map(|r| r.eval.probs[i].get(c))
                                .collect::<Vec<_>>(),
                        )
                    })
                    .collect();
                PointStats {
                    index: i,
                    label: ds.label(i),
                    mean_probs: per_class.iter().map(|p| p.0).collect(),
                    sd_probs: per_class.iter().map(|p| p.1).collect(),
                }
            })
            .collect()
    });
    SettingSummary {
        tag: setting.tag.clone(),
        alpha: setting.alpha,
        runs: mine.len(),
        final_train_error_mean: mean,
        final_train_error_sd: sd,
        runs_with_zero_error: errors.iter().filter(|&&e| e == 0.0).count(),
        points,
    }
}

/// Per-point final probabilities, one row per (run, point).
fn evaluation_csv(
    ds: &LabeledDataset,
    settings: &[Setting],
    runs: &[Run],
) -> anyhow::Result<Vec<u8>> {
    let mut header: Vec<String> = ["mode", "alpha", "seed", "point", "label"]
        .map(String::from)
        .to_vec();
    header.extend((1..=ds.k()).map(|c| format!("p{c}")));
    header.extend(["predicted".to_string(), "correct".into()]);
    let mut rows = Vec::new();
    for run in runs {
        let setting = &settings[run.setting];
        for i in 0..ds.len() {
            let probs = &run.eval.probs[i];
            let mut row = vec![
                if setting.alpha.is_some() {
                    "mixup"
                } else {
                    "erm"
                }
                .to_string(),
                setting.alpha.map(num).unwrap_or_default(),
                run.seed.to_string(),
                i.to_string(),
                ds.label(i).to_string(),
            ];
            row.extend(probs.as_slice().iter().map(|v| num(*v)));
            row.push(probs.argmax().to_string());
            row.push(run.eval.correct[i].to_string());
            rows.push(row);
        }
    }
    csv_text(&header, &rows)
}

/// Mean ± sd over seeds of the per-epoch training error and loss.
fn curve(settings_index: usize, runs: &[Run]) -> Vec<(usize, f64, f64, f64)> {
    let mine: Vec<&Run> = runs
        .iter()
        .filter(|r| r.setting == settings_index)
        .collect();
    let epochs = mine.first().map_or(0, |r| r.history.records.len());
    (0..epochs)
        .map(|e| {
            let (err, sd) = mean_sd(
                &mine
                    .iter()
                    .map(|r| r.history.records[e].train_error)
                    .collect::<Vec<_>>(),
            );
            let (loss, _) = mean_sd(
                &mine
                    .iter()
                    .map(|r| r.history.records[e].loss)
                    .collect::<Vec<_>>(),
            );
            (e + 1, err, sd, loss)
        })
        .collect()
}

fn curves_csv(settings: &[Setting], runs: &[Run]) -> anyhow::Result<Vec<u8>> {
    let header = [
        "setting",
        "epoch",
        "mean_train_error",
        "sd_train_error",
        "mean_loss",
    ]
    .map(String::from);
    let mut rows = Vec::new();
    for (s, setting) in settings.iter().enumerate() {
        for (epoch, err, sd, loss) in curve(s, runs) {
            rows.push(vec![
                setting.tag.clone(),
                epoch.to_string(),
                num(err),
                num(sd),
                num(loss),
            ]);
        }
    }
    csv_text(&header, &rows)
}

fn curves_svg(ds: &LabeledDataset, settings: &[Setting], runs: &[Run]) -> String {
    let series: Vec<Series> = settings
        .iter()
        .enumerate()
        .map(|(s, setting)| {
            let c = curve(s, runs);
            Series {
                name: setting.tag.clone(),
                xs: c.iter().map(|p| p.0 as f64).collect(),
                ys: c.iter().map(|p| p.1).collect(),
                band: Some(c.iter().map(|p| p.2).collect()),
            }
        })
        .collect();
    svg::line_chart(
        &format!("{}: training error (mean ± sd)", ds.name()),
        "epoch",
        "train error",
        &series,
    )
}

/// Class probabilities averaged over the given models on an n × n grid.
fn mean_boundary(ds: &LabeledDataset, n: usize, runs: &[&Run]) -> BoundaryGrid {
    let spec = grid_spec(
        ds,
        &GridConfig {
            n,
            x_range: None,
            y_range: None,
        },
    );
    let cells = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (x, y) = spec.center(idx % n, idx / n);
            let mut avg = vec![0.0; ds.k()];
            for run in runs {
                for (a, p) in avg.iter_mut().zip(run.history.model.forward(&[x, y])) {
                    *a += p / runs.len() as f64;
                }
            }
            let label = ClassProbs::from_coefficients(&avg).map_or(0, |p| p.argmax());
            GridCell {
                x,
                y,
                label,
                probs: Some(avg),
            }
        })
        .collect();
    BoundaryGrid {
        spec,
        k: ds.k(),
        cells,
    }
}
