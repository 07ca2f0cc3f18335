//! One module per subcommand. Each takes its config and a run directory,
//! writes its artifacts and returns a one-line summary for the terminal.

mod assumptions;
mod linear;
mod oracle;
mod recover;
mod train;

use mixup_core::datasets::LabeledDataset;
use mixup_core::oracle::GridSpec;

use crate::config::{ExperimentConfig, GridConfig};
use crate::output::RunDir;

pub fn run(config: &ExperimentConfig, dir: &RunDir) -> anyhow::Result<String> {
    match config {
        ExperimentConfig::Oracle(c) => oracle::run(c, dir),
        ExperimentConfig::Train(c) => train::run(c, dir),
        ExperimentConfig::Recover(c) => recover::run(c, dir),
        ExperimentConfig::Assumptions(c) => assumptions::run(c, dir),
        ExperimentConfig::Linear(c) => linear::run(c, dir),
    }
}

/// Bounding box of one coordinate, padded by 10% of its extent (at least 0.1).
fn padded_range(ds: &LabeledDataset, axis: usize) -> (f64, f64) {
    let (lo, hi) = ds
        .points()
        .iter()
        .map(|p| p[axis])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    let pad = (0.1 * (hi - lo)).max(0.1);
    (lo - pad, hi + pad)
}

fn grid_spec(ds: &LabeledDataset, grid: &GridConfig) -> GridSpec {
    GridSpec {
        x_range: grid.x_range.unwrap_or_else(|| padded_range(ds, 0)),
        y_range: grid.y_range.unwrap_or_else(|| padded_range(ds, 1)),
        nx: grid.n,
        ny: grid.n,
    }
}

/// Shortest round-trip text of a float, as used in every CSV.
fn num(v: f64) -> String {
    v.to_string()
}
