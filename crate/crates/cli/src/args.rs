//! Subcommand flags and their translation into an [`ExperimentConfig`].

use std::path::PathBuf;

use clap::{Args, Subcommand};

use crate::config::*;

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the Mixup-optimal classifier at probe points or on a grid
    Oracle(OracleArgs),
    /// Train MLPs with ERM and/or Mixup over seeds and mixing parameters
    Train(TrainArgs),
    /// Recover points from their pairwise midpoints, or certify rank([A, PA])
    Recover(RecoverArgs),
    /// Audit collinearity, separation radius, margins and pointwise margins
    Assumptions(AssumptionsArgs),
    /// Compare the linear Mixup minimizer with the max-margin classifier
    Linear(LinearArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Oracle(_) => "oracle",
            Self::Train(_) => "train",
            Self::Recover(_) => "recover",
            Self::Assumptions(_) => "assumptions",
            Self::Linear(_) => "linear",
        }
    }

    pub fn to_config(&self) -> Result<ExperimentConfig, ConfigError> {
        Ok(match self {
            Self::Oracle(a) => ExperimentConfig::Oracle(a.to_config()?),
            Self::Train(a) => ExperimentConfig::Train(a.to_config()?),
            Self::Recover(a) => ExperimentConfig::Recover(a.to_config()),
            Self::Assumptions(a) => ExperimentConfig::Assumptions(a.to_config()?),
            Self::Linear(a) => ExperimentConfig::Linear(a.to_config()?),
        })
    }
}

/// Parses `1` or `0,0.5` into a point.
fn parse_point(field: &str, text: &str) -> Result<Vec<f64>, ConfigError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| config_error(field, format!("not a number list: {text:?}")))
        })
        .collect()
}

fn parse_range(field: &str, text: &str) -> Result<(f64, f64), ConfigError> {
    match parse_point(field, text)?.as_slice() {
        [lo, hi] if lo < hi => Ok((*lo, *hi)),
        _ => Err(config_error(
            field,
            format!("expected lo,hi with lo < hi, got {text:?}"),
        )),
    }
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub mixing: MixingArgs,
    /// Neighbourhood radius ε
    #[arg(long, conflicts_with = "limit")]
    pub eps: Option<f64>,
    /// Evaluate the ε → 0 limit instead
    #[arg(long)]
    pub limit: bool,
    /// Collinearity tolerance for the limit (default: 1e-9 × diameter)
    #[arg(long, requires = "limit")]
    pub tol_line: Option<f64>,
    /// Probe point, e.g. `1` or `0,0.5` (repeatable)
    #[arg(long, allow_hyphen_values = true)]
    pub probe: Vec<String>,
    /// Evaluate on an n × n grid (2-D data)
    #[arg(long)]
    pub grid: Option<usize>,
    /// Grid x range `lo,hi`
    #[arg(long, allow_hyphen_values = true)]
    pub x_range: Option<String>,
    /// Grid y range `lo,hi`
    #[arg(long, allow_hyphen_values = true)]
    pub y_range: Option<String>,
}

impl OracleArgs {
    fn to_config(&self) -> Result<OracleConfig, ConfigError> {
        let mode = match (self.eps, self.limit) {
            (Some(eps), false) => OracleMode::Epsilon(eps),
            (None, true) => OracleMode::Limit {
                tol_line: self.tol_line,
            },
            _ => return Err(config_error("eps", "give --eps <ε> or --limit")),
        };
        let grid = match self.grid {
            Some(n) => Some(GridConfig {
                n,
                x_range: self
                    .x_range
                    .as_deref()
                    .map(|r| parse_range("x-range", r))
                    .transpose()?,
                y_range: self
                    .y_range
                    .as_deref()
                    .map(|r| parse_range("y-range", r))
                    .transpose()?,
            }),
            None => None,
        };
        Ok(OracleConfig {
            dataset: self.data.spec()?,
            mixing: self.mixing.spec()?,
            mode,
            probes: self
                .probe
                .iter()
                .map(|p| parse_point("probe", p))
                .collect::<Result<_, _>>()?,
            grid,
        })
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    /// Training objective
    #[arg(long, value_enum, default_value_t = ModeSelection::Mixup)]
    pub mode: ModeSelection,
    /// Beta(α, α) parameters for Mixup, comma separated
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Number of seeds (0..n)
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    /// Epochs (default 1500 for moons, 3000 otherwise)
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Hidden layer widths, comma separated (default 500 for moons, 512 otherwise)
    #[arg(long, value_delimiter = ',')]
    pub hidden: Vec<usize>,
    /// Minibatch size (default: full batch)
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Decision-boundary grid resolution for 2-D data
    #[arg(long, default_value_t = 60)]
    pub grid: usize,
}

impl TrainArgs {
    fn to_config(&self) -> Result<TrainRunConfig, ConfigError> {
        let dataset = self.data.spec()?;
        let moons = matches!(dataset, DatasetSpec::Moons { .. });
        let alphas = if self.alpha.is_empty() && self.mode != ModeSelection::Erm {
            vec![1.0]
        } else {
            self.alpha.clone()
        };
        let hidden = if self.hidden.is_empty() {
            vec![if moons { 500 } else { 512 }]
        } else {
            self.hidden.clone()
        };
        Ok(TrainRunConfig {
            dataset,
            mode: self.mode,
            alphas,
            seeds: (0..self.seeds).collect(),
            epochs: self.epochs.unwrap_or(if moons { 1500 } else { 3000 }),
            hidden,
            batch_size: self.batch_size,
            grid: self.grid,
        })
    }
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    /// What to recover
    #[arg(long, value_enum, default_value_t = RecoverTask::Labeled)]
    pub task: RecoverTask,
    /// Number of points
    #[arg(long, default_value_t = 6)]
    pub m: usize,
    /// Point dimension
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random row permutations (rank task)
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Residual tolerance (labeled task)
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Midpoint CSV (`i,j,coord..` labeled, `coord0` unlabeled) instead of random points
    #[arg(long)]
    pub input: Option<PathBuf>,
}

impl RecoverArgs {
    fn to_config(&self) -> RecoverConfig {
        RecoverConfig {
            task: self.task,
            m: self.m,
            dim: self.dim,
            seed: self.seed,
            trials: self.trials,
            tol: self.tol,
            input: self.input.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct AssumptionsArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub mixing: MixingArgs,
    /// Checks to run, comma separated (default: epsilon for MNIST, otherwise collinearity,margin,epsilon)
    #[arg(long, value_enum, value_delimiter = ',')]
    pub check: Vec<Check>,
    /// Collinearity tolerance
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Mixup samples for the separation estimate (default: one epoch, m)
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Probe for the pointwise margin check, e.g. `0,0.9`
    #[arg(long, allow_hyphen_values = true)]
    pub probe: Option<String>,
    /// Class expected at the probe
    #[arg(long, default_value_t = 1)]
    pub class: usize,
    /// Neighbourhood radius for the pointwise margin check
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    /// Margin δ in (0, ½) for the pointwise margin check
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,
}

impl AssumptionsArgs {
    fn to_config(&self) -> Result<AssumptionsConfig, ConfigError> {
        let dataset = self.data.spec()?;
        let mnist = matches!(dataset, DatasetSpec::Mnist { .. });
        let probe = match &self.probe {
            Some(text) => Some(Assumption2Probe {
                point: parse_point("probe", text)?,
                class: self.class,
                eps: self.eps,
                delta: self.delta,
            }),
            None => None,
        };
        let mut checks = if !self.check.is_empty() {
            self.check.clone()
        } else if mnist {
            vec![Check::Epsilon]
        } else {
            vec![Check::Collinearity, Check::Margin, Check::Epsilon]
        };
        if probe.is_some() && !checks.contains(&Check::Assumption2) {
            checks.push(Check::Assumption2);
        }
        // MNIST separation is reported against the test split as well
        let references = match &dataset {
            DatasetSpec::Mnist {
                dir,
                fraction,
                seed,
                ..
            } => vec![DatasetSpec::Mnist {
                dir: dir.clone(),
                split: MnistSplit::Test,
                fraction: *fraction,
                seed: *seed,
            }],
            _ => Vec::new(),
        };
        Ok(AssumptionsConfig {
            dataset,
            mixing: self.mixing.spec()?,
            checks,
            tol: self.tol,
            samples: self.samples,
            seed: self.seed,
            references,
            probe,
        })
    }
}

#[derive(Debug, Args)]
pub struct LinearArgs {
    /// Points per trial
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Dimension
    #[arg(long, default_value_t = 650)]
    pub d: usize,
    /// Trials (seeds 0..trials)
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[command(flatten)]
    pub mixing: MixingArgs,
    /// Keep only cross-class pairs in the loss
    #[arg(long)]
    pub no_same_class_terms: bool,
    /// Quadrature nodes for the λ expectation
    #[arg(long, default_value_t = 64)]
    pub nodes: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub grad_tol: f64,
}

impl LinearArgs {
    fn to_config(&self) -> Result<LinearConfig, ConfigError> {
        Ok(LinearConfig {
            n: self.n,
            d: self.d,
            trials: self.trials,
            mixing: self.mixing.spec()?,
            same_class_terms: !self.no_same_class_terms,
            nodes: self.nodes,
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_and_ranges() {
        assert_eq!(parse_point("p", "0, -0.5").unwrap(), vec![0.0, -0.5]);
        assert!(parse_point("p", "a").is_err());
        assert_eq!(parse_range("r", "-1,2").unwrap(), (-1.0, 2.0));
        assert!(parse_range("r", "2,1").is_err());
    }
}
