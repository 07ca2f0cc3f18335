//! Experiment configuration. Every run is fully described by one
//! [`ExperimentConfig`], which round-trips through JSON; command-line flags are
//! only a convenient way to build one.

use std::path::{Path, PathBuf};

use mixup_core::datasets::{self, LabeledDataset};
use mixup_core::mixing::MixingDistribution;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A configuration problem; reported with exit status 2.
#[derive(Debug, Error)]
#[error("invalid configuration: {field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

pub fn config_error(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentConfig {
    Oracle(OracleConfig),
    Train(TrainRunConfig),
    Recover(RecoverConfig),
    Assumptions(AssumptionsConfig),
    Linear(LinearConfig),
}

impl ExperimentConfig {
    pub fn command(&self) -> &'static str {
        match self {
            Self::Oracle(_) => "oracle",
            Self::Train(_) => "train",
            Self::Recover(_) => "recover",
            Self::Assumptions(_) => "assumptions",
            Self::Linear(_) => "linear",
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| config_error("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// The points 0..m on a line, labeled cyclically with k classes.
    Alternating {
        m: usize,
        k: usize,
    },
    Cross,
    Moons {
        n_per_class: usize,
        separation: f64,
        noise: f64,
        seed: u64,
    },
    Gaussian {
        n: usize,
        d: usize,
        seed: u64,
    },
    Csv {
        path: PathBuf,
    },
    Mnist {
        dir: PathBuf,
        split: MnistSplit,
        fraction: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MnistSplit {
    Train,
    Test,
}

/// Dataset flags shared by the subcommands that take `--dataset`.
#[derive(Debug, Clone, clap::Args)]
pub struct DatasetArgs {
    /// x<m>k<k>, cross, moons, gaussian, mnist, or a CSV path
    #[arg(long)]
    pub dataset: Option<String>,
    /// Points per class (moons)
    #[arg(long, default_value_t = 100)]
    pub n_per_class: usize,
    /// Class separation (moons)
    #[arg(long, default_value_t = 0.5)]
    pub sep: f64,
    /// Gaussian noise standard deviation (moons)
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    /// Seed for generated data
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
    /// Number of points (gaussian)
    #[arg(long = "points", default_value_t = 20)]
    pub n_points: usize,
    /// Dimension (gaussian)
    #[arg(long = "dim", default_value_t = 650)]
    pub dimension: usize,
    /// Directory holding the four MNIST IDX files
    #[arg(long, env = "MIXUP_MNIST_DIR", default_value = "data/mnist")]
    pub mnist_dir: PathBuf,
    /// Fraction of MNIST kept
    #[arg(long, default_value_t = 0.2)]
    pub fraction: f64,
}

impl DatasetArgs {
    pub fn spec(&self) -> Result<DatasetSpec, ConfigError> {
        let name = self.dataset.as_deref().ok_or_else(|| {
            config_error(
                "dataset",
                "required (x3k2, cross, moons, gaussian, mnist or a CSV path)",
            )
        })?;
        Ok(match name {
            "cross" => DatasetSpec::Cross,
            "moons" => DatasetSpec::Moons {
                n_per_class: self.n_per_class,
                separation: self.sep,
                noise: self.noise,
                seed: self.data_seed,
            },
            "gaussian" => DatasetSpec::Gaussian {
                n: self.n_points,
                d: self.dimension,
                seed: self.data_seed,
            },
            "mnist" => DatasetSpec::Mnist {
                dir: self.mnist_dir.clone(),
                split: MnistSplit::Train,
                fraction: self.fraction,
                seed: self.data_seed,
            },
            other => match parse_alternating(other) {
                Some((m, k)) => DatasetSpec::Alternating { m, k },
                None if other.ends_with(".csv") => DatasetSpec::Csv { path: other.into() },
                None => {
                    return Err(config_error(
                        "dataset",
                        format!("unknown dataset {other:?}"),
                    ))
                }
            },
        })
    }
}

/// Parses names like `x3k2`.
fn parse_alternating(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix('x')?;
    let (m, k) = rest.split_once('k')?;
    Some((m.parse().ok()?, k.parse().ok()?))
}

impl DatasetSpec {
    pub fn load(&self) -> anyhow::Result<LabeledDataset> {
        Ok(match self {
            Self::Alternating { m, k } => datasets::alternating_line(*m, *k)?,
            Self::Cross => datasets::four_point_cross(),
            Self::Moons {
                n_per_class,
                separation,
                noise,
                seed,
            } => datasets::two_moons(*n_per_class, *separation, *noise, *seed)?,
            Self::Gaussian { n, d, seed } => datasets::gaussian_binary(*n, *d, *seed)?,
            Self::Csv { path } => datasets::load_csv(path)?,
            Self::Mnist {
                dir,
                split,
                fraction,
                seed,
            } => {
                let prefix = match split {
                    MnistSplit::Train => "train",
                    MnistSplit::Test => "t10k",
                };
                let images = dir.join(format!("{prefix}-images-idx3-ubyte"));
                let labels = dir.join(format!("{prefix}-labels-idx1-ubyte"));
                if !images.is_file() || !labels.is_file() {
                    return Err(config_error(
                        "dataset",
                        format!("MNIST files not found in {}", dir.display()),
                    )
                    .into());
                }
                datasets::load_idx(images, labels, *fraction, *seed)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MixingSpec {
    Uniform,
    Beta {
        alpha: f64,
    },
    /// CSV with header `lambda,density`.
    Tabulated {
        path: PathBuf,
    },
}

impl MixingSpec {
    pub fn build(&self) -> anyhow::Result<MixingDistribution> {
        Ok(match self {
            Self::Uniform => MixingDistribution::uniform(),
            Self::Beta { alpha } => MixingDistribution::beta_symmetric(*alpha)?,
            Self::Tabulated { path } => MixingDistribution::tabulated_from_csv(path)?,
        })
    }
}

/// Mixing flags: `--alpha` selects Beta(α, α), `--mixing-table` a tabulated
/// density, neither means uniform.
#[derive(Debug, Clone, clap::Args)]
pub struct MixingArgs {
    /// Beta(α, α) mixing
    #[arg(long)]
    pub alpha: Option<f64>,
    /// CSV density with header lambda,density
    #[arg(long)]
    pub mixing_table: Option<PathBuf>,
}

impl MixingArgs {
    pub fn spec(&self) -> Result<MixingSpec, ConfigError> {
        match (self.alpha, &self.mixing_table) {
            (Some(_), Some(_)) => Err(config_error(
                "mixing",
                "give either --alpha or --mixing-table",
            )),
            (Some(alpha), None) => Ok(MixingSpec::Beta { alpha }),
            (None, Some(path)) => Ok(MixingSpec::Tabulated { path: path.clone() }),
            (None, None) => Ok(MixingSpec::Uniform),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleMode {
    /// Fixed neighbourhood radius.
    Epsilon(f64),
    /// The ε → 0 limit.
    Limit { tol_line: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    /// `None` pads the data's bounding box by 10% on each side.
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub dataset: DatasetSpec,
    pub mixing: MixingSpec,
    pub mode: OracleMode,
    pub probes: Vec<Vec<f64>>,
    pub grid: Option<GridConfig>,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum ModeSelection {
    Erm,
    Mixup,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRunConfig {
    pub dataset: DatasetSpec,
    pub mode: ModeSelection,
    /// Beta(α, α) parameters for the Mixup runs.
    pub alphas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub hidden: Vec<usize>,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
    /// Resolution of the decision-boundary grid for 2-D data.
    pub grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RecoverTask {
    Labeled,
    Unlabeled,
    Rank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverConfig {
    pub task: RecoverTask,
    pub m: usize,
    pub dim: usize,
    pub seed: u64,
    /// Random permutations for the rank task.
    pub trials: usize,
    pub tol: f64,
    /// Midpoint CSV to recover from instead of generated points.
    pub input: Option<PathBuf>,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Collinearity,
    Epsilon,
    Margin,
    Assumption2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assumption2Probe {
    pub point: Vec<f64>,
    pub class: usize,
    pub eps: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionsConfig {
    pub dataset: DatasetSpec,
    pub mixing: MixingSpec,
    pub checks: Vec<Check>,
    pub tol: f64,
    /// Mixup samples for the separation estimate; `None` means one epoch (m).
    pub samples: Option<usize>,
    pub seed: u64,
    /// Extra reference sets for the separation estimate (the training set is always used).
    pub references: Vec<DatasetSpec>,
    pub probe: Option<Assumption2Probe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearConfig {
    pub n: usize,
    pub d: usize,
    pub trials: usize,
    pub mixing: MixingSpec,
    pub same_class_terms: bool,
    pub nodes: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
}
