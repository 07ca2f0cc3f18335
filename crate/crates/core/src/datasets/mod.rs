//! Finite labeled datasets and the constructive examples used in the analysis.
//!
//! A [`LabeledDataset`] stands for the uniform (normalized counting) measure on
//! its points. Class labels are 1-based; binary ±1 views map class 1 to +1.

mod idx;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::seeded;

pub use idx::{load_idx, read_idx_images, read_idx_labels};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    name: String,
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    k: usize,
}

impl LabeledDataset {
    /// Validates dimensions, label range, non-empty classes and disjoint class supports.
    pub fn new(
        name: impl Into<String>,
        points: Vec<Vec<f64>>,
        labels: Vec<usize>,
        k: usize,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Construction("dataset has no points".into()));
        }
        if points.len() != labels.len() {
            return Err(Error::Construction(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        let n = points[0].len();
        if n == 0 {
            return Err(Error::Construction("points must have dimension ≥ 1".into()));
        }
        if let Some(p) = points.iter().find(|p| p.len() != n) {
            return Err(Error::Dimension {
                expected: n,
                found: p.len(),
            });
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Construction("non-finite coordinate".into()));
        }
        if k == 0 {
            return Err(Error::Construction("class count must be positive".into()));
        }
        let mut counts = vec![0usize; k];
        for &label in &labels {
            if label == 0 || label > k {
                return Err(Error::Construction(format!(
                    "label {label} outside 1..={k}"
                )));
            }
            counts[label - 1] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Construction(format!("class {} empty", empty + 1)));
        }
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::with_capacity(points.len());
        for (p, &label) in points.iter().zip(&labels) {
            // +0.0 and -0.0 are the same point
            let key: Vec<u64> = p.iter().map(|v| (v + 0.0).to_bits()).collect();
            if let Some(&other) = seen.get(&key) {
                if other != label {
                    return Err(Error::Construction(format!(
                        "point {p:?} carries labels {other} and {label}"
                    )));
                }
            } else {
                seen.insert(key, label);
            }
        }
        Ok(Self {
            name: name.into(),
            points,
            labels,
            k,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, idx: usize) -> &[f64] {
        &self.points[idx]
    }

    /// 1-based class labels.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, idx: usize) -> usize {
        self.labels[idx]
    }

    /// Number of points, m.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Number of classes.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Indices of the points in class `class` (1-based).
    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.labels[i] == class)
            .collect()
    }

    /// Points of class `class` (1-based).
    pub fn class_points(&self, class: usize) -> Vec<&[f64]> {
        self.points
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == class)
            .map(|(p, _)| p.as_slice())
            .collect()
    }

    /// ±1 view of a binary dataset: class 1 ↦ +1, class 2 ↦ −1.
    pub fn signed_labels(&self) -> Result<Vec<f64>> {
        if self.k != 2 {
            return Err(Error::Contract(format!(
                "±1 labels need k = 2, dataset has k = {}",
                self.k
            )));
        }
        Ok(self
            .labels
            .iter()
            .map(|&l| if l == 1 { 1.0 } else { -1.0 })
            .collect())
    }

    /// Largest pairwise distance between points.
    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.max(distance(&self.points[i], &self.points[j]));
            }
        }
        best
    }

    /// Smallest distance between a class-`i` point and a class-`j` point.
    pub fn class_distance(&self, i: usize, j: usize) -> f64 {
        let mut best = f64::INFINITY;
        for (p, &lp) in self.points.iter().zip(&self.labels) {
            if lp != i {
                continue;
            }
            for (q, &lq) in self.points.iter().zip(&self.labels) {
                if lq == j {
                    best = best.min(distance(p, q));
                }
            }
        }
        best
    }

    /// Writes the `label,f0,f1,...` CSV layout read by [`load_csv`].
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["label".to_string()];
        header.extend((0..self.dim()).map(|i| format!("f{i}")));
        w.write_record(&header)?;
        for (p, &l) in self.points.iter().zip(&self.labels) {
            let mut row = vec![l.to_string()];
            row.extend(p.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The points {0, …, m−1} on the real line, point `i` in class `(i mod k) + 1`.
pub fn alternating_line(m: usize, k: usize) -> Result<LabeledDataset> {
    if k < 1 || k > m {
        return Err(Error::Construction(format!(
            "alternating line needs 1 ≤ k ≤ m (got m = {m}, k = {k})"
        )));
    }
    let points = (0..m).map(|i| vec![i as f64]).collect();
    let labels = (0..m).map(|i| i % k + 1).collect();
    LabeledDataset::new(format!("x{m}k{k}"), points, labels, k)
}

/// Class 1 = {(0, 1), (0, −1)}, class 2 = {(1, 0), (−1, 0)}.
pub fn four_point_cross() -> LabeledDataset {
    LabeledDataset::new(
        "cross",
        vec![
            vec![0.0, 1.0],
            vec![0.0, -1.0],
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
        ],
        vec![1, 1, 2, 2],
        2,
    )
    .expect("static dataset is valid")
}

/// Two interleaved half circles.
///
/// Class 1 lies on (cos t, sin t) and class 2 on (1 − cos t, −sin t − separation)
/// for `n_per_class` evenly spaced t ∈ [0, π], each perturbed by isotropic
/// Gaussian noise of standard deviation `noise_sd`.
pub fn two_moons(
    n_per_class: usize,
    separation: f64,
    noise_sd: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if n_per_class == 0 {
        return Err(Error::Construction(
            "two moons needs at least one point per class".into(),
        ));
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::Construction(format!(
            "noise sd must be nonnegative, got {noise_sd}"
        )));
    }
    let mut rng = seeded(seed);
    let step = if n_per_class > 1 {
        PI / (n_per_class - 1) as f64
    } else {
        0.0
    };
    let mut points = Vec::with_capacity(2 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for class in [1usize, 2] {
        for i in 0..n_per_class {
            let t = i as f64 * step;
            let (x, y) = if class == 1 {
                (t.cos(), t.sin())
            } else {
                (1.0 - t.cos(), -t.sin() - separation)
            };
            let (ex, ey) = if noise_sd > 0.0 {
                let ex: f64 = StandardNormal.sample(&mut rng);
                let ey: f64 = StandardNormal.sample(&mut rng);
                (noise_sd * ex, noise_sd * ey)
            } else {
                (0.0, 0.0)
            };
            points.push(vec![x + ex, y + ey]);
            labels.push(class);
        }
    }
    LabeledDataset::new(
        format!("moons(sep={separation},noise={noise_sd})"),
        points,
        labels,
        2,
    )
}

/// `n` i.i.d. N(0, I_d) points; even indices in class 1 (+1), odd in class 2 (−1).
pub fn gaussian_binary(n: usize, d: usize, seed: u64) -> Result<LabeledDataset> {
    if n < 2 || d < 1 {
        return Err(Error::Construction(format!(
            "gaussian_binary needs n ≥ 2 and d ≥ 1 (got {n}, {d})"
        )));
    }
    let mut rng = seeded(seed);
    let points = (0..n)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let labels = (0..n).map(|i| if i % 2 == 0 { 1 } else { 2 }).collect();
    LabeledDataset::new(format!("gaussian(n={n},d={d})"), points, labels, 2)
}

/// Whether `d > 10 n ln n + n − 1`, the dimension regime in which the max-margin
/// solution interpolates with probability at least 1 − 2/n.
pub fn overparameterized_regime(n: usize, d: usize) -> bool {
    let n = n as f64;
    d as f64 > 10.0 * n * n.ln() + n - 1.0
}

/// Reads a `label,f0,f1,...` CSV with positive integer labels; k = max label.
pub fn read_csv(reader: impl Read, name: &str) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || &headers[0] != "label" {
        return Err(Error::Parse {
            line: 1,
            message: "expected header `label,f0,f1,...`".into(),
        });
    }
    let width = headers.len();
    if width < 2 {
        return Err(Error::Parse {
            line: 1,
            message: "no feature columns".into(),
        });
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != width {
            return Err(Error::Parse {
                line,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        let label: usize = record[0].parse().map_err(|_| Error::Parse {
            line,
            message: format!("label `{}` is not a positive integer", &record[0]),
        })?;
        if label == 0 {
            return Err(Error::Parse {
                line,
                message: "labels are 1-based".into(),
            });
        }
        let mut p = Vec::with_capacity(width - 1);
        for (i, field) in record.iter().enumerate().skip(1) {
            p.push(field.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("field f{} `{field}` is not numeric", i - 1),
            })?);
        }
        points.push(p);
        labels.push(label);
    }
    if points.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "no data rows".into(),
        });
    }
    let k = *labels.iter().max().expect("nonempty");
    LabeledDataset::new(name, points, labels, k)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("csv")
        .to_string();
    read_csv(file, &name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_line_examples() {
        let ds = alternating_line(3, 2).unwrap();
        assert_eq!(ds.class_points(1), vec![&[0.0][..], &[2.0][..]]);
        assert_eq!(ds.class_points(2), vec![&[1.0][..]]);

        let ds = alternating_line(10, 10).unwrap();
        for c in 1..=10 {
            assert_eq!(ds.class_points(c), vec![&[(c - 1) as f64][..]]);
        }

        let ds = alternating_line(10, 2).unwrap();
        let evens: Vec<f64> = ds.class_points(1).iter().map(|p| p[0]).collect();
        let odds: Vec<f64> = ds.class_points(2).iter().map(|p| p[0]).collect();
        assert_eq!(evens, vec![0.0, 2.0, 4.0, 6.0, 8.0]);
        assert_eq!(odds, vec![1.0, 3.0, 5.0, 7.0, 9.0]);

        assert!(alternating_line(3, 4).is_err());
    }

    #[test]
    fn cross_geometry() {
        let ds = four_point_cross();
        assert_eq!((ds.len(), ds.k(), ds.dim()), (4, 2, 2));
        assert!(ds.class_points(1).iter().all(|p| p[0] == 0.0));
        assert!(ds.class_points(2).iter().all(|p| p[1] == 0.0));
        let x1 = ds.class_points(1);
        let mid: Vec<f64> = x1[0]
            .iter()
            .zip(x1[1])
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        assert_eq!(mid, vec![0.0, 0.0]);
        assert!((ds.class_distance(1, 2) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn two_moons_noise_free_geometry() {
        let ds = two_moons(100, 0.5, 0.0, 1).unwrap();
        for p in ds.class_points(1) {
            assert!((p[0] * p[0] + p[1] * p[1] - 1.0).abs() < 1e-12);
        }
        assert!(ds.class_distance(1, 2) >= 0.5);
    }

    #[test]
    fn two_moons_is_deterministic_and_separation_matters() {
        let a = two_moons(500, 0.5, 0.1, 7).unwrap();
        let b = two_moons(500, 0.5, 0.1, 7).unwrap();
        assert_eq!(a.len(), 1000);
        let mut ba = Vec::new();
        let mut bb = Vec::new();
        a.write_csv(&mut ba).unwrap();
        b.write_csv(&mut bb).unwrap();
        assert_eq!(ba, bb);
        let close = two_moons(500, 0.1, 0.1, 7).unwrap();
        assert!(close.class_distance(1, 2) < a.class_distance(1, 2));
    }

    #[test]
    fn gaussian_binary_shape() {
        let ds = gaussian_binary(20, 650, 5).unwrap();
        assert_eq!((ds.len(), ds.dim()), (20, 650));
        assert_eq!(ds.class_indices(1).len(), 10);
        assert!(overparameterized_regime(20, 650));
        assert!(!overparameterized_regime(20, 618));
        let small = gaussian_binary(5, 3, 5).unwrap();
        assert_eq!(small.class_indices(1).len(), 3);
        assert_eq!(
            small.signed_labels().unwrap(),
            vec![1.0, -1.0, 1.0, -1.0, 1.0]
        );
    }

    #[test]
    fn disjoint_supports_enforced() {
        let err = LabeledDataset::new("dup", vec![vec![0.0], vec![0.0]], vec![1, 2], 2);
        assert!(matches!(err, Err(Error::Construction(_))));
        assert!(LabeledDataset::new(
            "same",
            vec![vec![0.0], vec![0.0], vec![1.0]],
            vec![1, 1, 2],
            2
        )
        .is_ok());
        assert!(matches!(
            LabeledDataset::new("ragged", vec![vec![0.0], vec![0.0, 1.0]], vec![1, 2], 2),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn csv_loading() {
        let ds = read_csv("label,f0\n1,0\n2,1\n1,2\n".as_bytes(), "x3k2").unwrap();
        assert_eq!(ds, alternating_line(3, 2).unwrap());

        assert!(matches!(
            read_csv("".as_bytes(), "e"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            read_csv("label,f0\n".as_bytes(), "e"),
            Err(Error::Parse { .. })
        ));
        match read_csv("label,f0\n1,0\n3,1\n".as_bytes(), "gap") {
            Err(Error::Construction(msg)) => assert!(msg.contains("class 2 empty"), "{msg}"),
            other => panic!("{other:?}"),
        }
        match read_csv("label,f0,f1\n1,0,0\n2,1\n".as_bytes(), "ragged") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match read_csv("label,f0\n1,0\n2,x\n".as_bytes(), "nan") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let ds = two_moons(5, 0.3, 0.05, 2).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = read_csv(buf.as_slice(), ds.name()).unwrap();
        assert_eq!(back.points(), ds.points());
        assert_eq!(back.labels(), ds.labels());
    }
}
