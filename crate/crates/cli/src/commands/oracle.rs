use mixup_core::oracle::{
    boundary_grid, default_tol_line, h_epsilon, h_limit, ClassProbs, GridMode,
};
use mixup_core::Error;
use serde::Serialize;

use super::{grid_spec, num};
use crate::config::{config_error, OracleConfig, OracleMode};
use crate::output::{csv_text, RunDir};
use crate::svg;

#[derive(Serialize)]
struct ProbeResult {
    point: Vec<f64>,
    /// None where the classifier is undefined (outside the mixed region).
    probs: Option<Vec<f64>>,
    label: Option<usize>,
}

#[derive(Serialize)]
struct GridSummary {
    n: usize,
    x_range: (f64, f64),
    y_range: (f64, f64),
    undefined_cells: usize,
    /// Cells predicted as each class, index 0 = class 1.
    class_counts: Vec<usize>,
}

#[derive(Serialize)]
struct Summary {
    dataset: String,
    mixing: String,
    mode: OracleMode,
    probes: Vec<ProbeResult>,
    grid: Option<GridSummary>,
}

pub fn run(config: &OracleConfig, dir: &RunDir) -> anyhow::Result<String> {
    let ds = config.dataset.load()?;
    let dist = config.mixing.build()?;
    if config.probes.is_empty() && config.grid.is_none() {
        return Err(config_error("probes", "give at least one --probe or a --grid").into());
    }
    let grid_mode = match config.mode {
        OracleMode::Epsilon(eps) => GridMode::Epsilon(eps),
        OracleMode::Limit { tol_line } => GridMode::Limit {
            tol_line: tol_line.unwrap_or_else(|| default_tol_line(&ds)),
        },
    };

    let mut probes = Vec::new();
    for point in &config.probes {
        if point.len() != ds.dim() {
            return Err(config_error(
                "probes",
                format!(
                    "probe {point:?} has dimension {}, data has {}",
                    point.len(),
                    ds.dim()
                ),
            )
            .into());
        }
        let probs: Option<ClassProbs> = match grid_mode {
            GridMode::Epsilon(eps) => match h_epsilon(&ds, &dist, point, eps) {
                Ok(p) => Some(p),
                Err(Error::OutsideMix { .. }) => None,
                Err(e) => return Err(e.into()),
            },
            GridMode::Limit { tol_line } => h_limit(&ds, &dist, point, tol_line)?.probs().cloned(),
        };
        probes.push(ProbeResult {
            point: point.clone(),
            label: probs.as_ref().map(ClassProbs::argmax),
            probs: probs.map(|p| p.as_slice().to_vec()),
        });
    }

    let mut header: Vec<String> = (0..ds.dim()).map(|i| format!("x{i}")).collect();
    header.push("label".into());
    header.extend((1..=ds.k()).map(|c| format!("p{c}")));
    let rows: Vec<Vec<String>> = probes
        .iter()
        .map(|p| {
            let mut row: Vec<String> = p.point.iter().map(|v| num(*v)).collect();
            row.push(p.label.unwrap_or(0).to_string());
            match &p.probs {
                Some(probs) => row.extend(probs.iter().map(|v| num(*v))),
                None => row.extend(std::iter::repeat_n(String::new(), ds.k())),
            }
            row
        })
        .collect();
    dir.write("results.csv", csv_text(&header, &rows)?)?;

    let mut grid_summary = None;
    if let Some(grid) = &config.grid {
        if ds.dim() != 2 {
            return Err(config_error(
                "grid",
                format!("grids need 2-D data, got dimension {}", ds.dim()),
            )
            .into());
        }
        let spec = grid_spec(&ds, grid);
        let bg = boundary_grid(&ds, &dist, spec, grid_mode)?;
        dir.write_with("grid.csv", |buf| bg.write_csv(buf))?;
        let title = format!("{} / {}", ds.name(), dist.label());
        dir.write("plot.svg", svg::boundary_heatmap(&bg, Some(&ds), &title))?;
        let mut class_counts = vec![0; ds.k()];
        for cell in bg.cells.iter().filter(|c| c.label > 0) {
            class_counts[cell.label - 1] += 1;
        }
        grid_summary = Some(GridSummary {
            n: grid.n,
            x_range: spec.x_range,
            y_range: spec.y_range,
            undefined_cells: bg.cells.iter().filter(|c| c.probs.is_none()).count(),
            class_counts,
        });
    }

    let line = probes
        .iter()
        .map(|p| match &p.probs {
            Some(probs) => format!("h({:?}) = {:?}", p.point, probs),
            None => format!("h({:?}) undefined", p.point),
        })
        .collect::<Vec<_>>()
        .join("; ");
    dir.write_json(
        "summary.json",
        &Summary {
            dataset: ds.name().to_string(),
            mixing: dist.label(),
            mode: config.mode,
            probes,
            grid: grid_summary,
        },
    )?;
    Ok(if line.is_empty() {
        "grid evaluated".into()
    } else {
        line
    })
}
