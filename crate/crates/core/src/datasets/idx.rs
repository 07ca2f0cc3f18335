//! IDX (MNIST) files: a big-endian u32 magic, big-endian u32 dimensions, raw bytes.

use std::path::Path;

use rand::seq::index::sample;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::seeded;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn format_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| format_error(path, "truncated header"))
}

/// Returns (rows·cols, flattened pixel bytes per image).
pub fn read_idx_images(path: impl AsRef<Path>) -> Result<(usize, Vec<Vec<u8>>)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    let magic = be_u32(&bytes, 0, path)?;
    if magic != IMAGES_MAGIC {
        return Err(format_error(
            path,
            format!("bad magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"),
        ));
    }
    let count = be_u32(&bytes, 4, path)? as usize;
    let rows = be_u32(&bytes, 8, path)? as usize;
    let cols = be_u32(&bytes, 12, path)? as usize;
    let size = rows * cols;
    let body = &bytes[16..];
    if body.len() < count * size {
        return Err(format_error(
            path,
            format!(
                "truncated: {count} images of {size} bytes need {}, found {}",
                count * size,
                body.len()
            ),
        ));
    }
    let images = body
        .chunks_exact(size.max(1))
        .take(count)
        .map(|c| c.to_vec())
        .collect();
    Ok((size, images))
}

pub fn read_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    let magic = be_u32(&bytes, 0, path)?;
    if magic != LABELS_MAGIC {
        return Err(format_error(
            path,
            format!("bad magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"),
        ));
    }
    let count = be_u32(&bytes, 4, path)? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(format_error(
            path,
            format!("truncated: {count} labels, found {}", body.len()),
        ));
    }
    Ok(body[..count].to_vec())
}

/// Loads an IDX image/label pair, scales pixels to [0, 1] and keeps a uniform
/// random subset of ⌈fraction·N⌉ points (original order preserved).
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    fraction: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Contract(format!(
            "fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let (_, images) = read_idx_images(&images_path)?;
    let labels = read_idx_labels(&labels_path)?;
    if images.len() != labels.len() {
        return Err(format_error(
            labels_path.as_ref(),
            format!("{} labels for {} images", labels.len(), images.len()),
        ));
    }
    let total = images.len();
    let keep = ((fraction * total as f64).ceil() as usize).min(total);
    let mut chosen: Vec<usize> = if keep == total {
        (0..total).collect()
    } else {
        sample(&mut seeded(seed), total, keep).into_vec()
    };
    chosen.sort_unstable();

    let points = chosen
        .iter()
        .map(|&i| images[i].iter().map(|&b| b as f64 / 255.0).collect())
        .collect();
    let classes: Vec<usize> = chosen.iter().map(|&i| labels[i] as usize + 1).collect();
    let k = classes.iter().copied().max().unwrap_or(0);
    let name = images_path
        .as_ref()
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("idx")
        .to_string();
    LabeledDataset::new(name, points, classes, k)
}
