//! Run directories: `config.json`, `results.csv`, `summary.json` and optional
//! SVG plots, all written once the run has finished.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::config::ExperimentConfig;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "MIXUP_OUTPUT_ROOT";

pub struct RunDir {
    path: PathBuf,
}

impl RunDir {
    /// Creates (or reuses) `root/name` and writes the config echo.
    pub fn create(root: &Path, name: &str, config: &ExperimentConfig) -> anyhow::Result<Self> {
        let path = root.join(name);
        fs::create_dir_all(&path).with_context(|| format!("creating {}", path.display()))?;
        let dir = Self { path };
        dir.write("config.json", config.to_json())?;
        Ok(dir)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&self, file: &str, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
        let target = self.path.join(file);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&target, contents).with_context(|| format!("writing {}", target.display()))
    }

    pub fn write_json(&self, file: &str, value: &impl Serialize) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(file, text)
    }

    /// Runs `fill` against an in-memory buffer and writes the result.
    pub fn write_with(
        &self,
        file: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> mixup_core::Result<()>,
    ) -> anyhow::Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        self.write(file, buf)
    }
}

/// CSV text from a header and rows of already formatted fields.
pub fn csv_text(header: &[String], rows: &[Vec<String>]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// Mean and population standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
