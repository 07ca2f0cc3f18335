//! The Mixup-optimal classifier on finite data, in closed form.
//!
//! At a probe point x and radius ε the optimal constant prediction on the ball
//! B_ε(x) is determined by two k×k tables: ξ^{i,j}, the P_X × P_X × P_f mass of
//! triples (s ∈ X_i, t ∈ X_j, λ) whose mixture λs + (1−λ)t lands in B_ε(x),
//! and ξ_λ^{i,j}, the same integral weighted by λ. Class i then receives
//!
//! ```text
//! c_i = ξ^{i,i} + Σ_{j≠i} (ξ_λ^{i,j} + ξ^{j,i} − ξ_λ^{j,i}),   h^i = c_i / Σ_q c_q.
//! ```
//!
//! For finite supports every ordered pair contributes a single λ-interval, so
//! the tables are exact sums of interval masses. The ε → 0 limit is computed
//! from the pairs whose segment passes through x, each weighted by
//! f(λ*) / ‖p − q‖.

use std::io::Write;

use rayon::prelude::*;

use crate::datasets::{distance, LabeledDataset};
use crate::error::{Error, Result};
use crate::mixing::MixingDistribution;

/// An ordered pair (p, q) whose mixing segment meets the probe neighbourhood.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentHit {
    pub p_index: usize,
    pub q_index: usize,
    /// (class of p, class of q), 1-based.
    pub classes: (usize, usize),
    /// λ range (weight on p) whose mixtures lie in the ball.
    pub lambda_interval: (f64, f64),
    /// λ with λp + (1−λ)q = x up to the line tolerance, if the segment passes through x.
    pub lambda_star: Option<f64>,
    pub pair_norm: f64,
}

/// ξ and ξ_λ at one probe point.
#[derive(Debug, Clone, PartialEq)]
pub struct XiTable {
    pub xi: Vec<Vec<f64>>,
    pub xi_lambda: Vec<Vec<f64>>,
    pub epsilon: f64,
    pub probe: Vec<f64>,
    /// Whether any mixture mass reaches B_ε(probe).
    pub in_xmix: bool,
}

/// A probability vector over the k classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbs {
    probs: Vec<f64>,
}

impl ClassProbs {
    /// Normalizes nonnegative coefficients; `None` if they are all zero.
    pub fn from_coefficients(coefficients: &[f64]) -> Option<Self> {
        let total: f64 = coefficients.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        Some(Self {
            probs: coefficients.iter().map(|c| c / total).collect(),
        })
    }

    /// e_class (1-based).
    pub fn one_hot(k: usize, class: usize) -> Self {
        let mut probs = vec![0.0; k];
        probs[class - 1] = 1.0;
        Self { probs }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of class `class` (1-based).
    pub fn get(&self, class: usize) -> f64 {
        self.probs[class - 1]
    }

    /// Predicted class (1-based); exact ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best + 1
    }

    /// Max-norm distance to e_class.
    pub fn gap_to_one_hot(&self, class: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                if i + 1 == class {
                    (1.0 - p).abs()
                } else {
                    p.abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Value of the limit classifier: undefined off the mixing set.
#[derive(Debug, Clone, PartialEq)]
pub enum LimitValue {
    Defined(ClassProbs),
    Undefined,
}

impl LimitValue {
    pub fn probs(&self) -> Option<&ClassProbs> {
        match self {
            LimitValue::Defined(p) => Some(p),
            LimitValue::Undefined => None,
        }
    }
}

fn check_dim(ds: &LabeledDataset, x: &[f64]) -> Result<()> {
    if x.len() != ds.dim() {
        return Err(Error::Dimension {
            expected: ds.dim(),
            found: x.len(),
        });
    }
    Ok(())
}

/// The λ ∈ [0, 1] for which λp + (1−λ)q lies in the closed ball B_ε(x).
///
/// The set is an interval because ‖q − x + λ(p − q)‖² is a convex quadratic in λ.
pub fn segment_ball_interval(
    p: &[f64],
    q: &[f64],
    x: &[f64],
    epsilon: f64,
) -> Result<Option<(f64, f64)>> {
    if p.len() != q.len() || p.len() != x.len() {
        return Err(Error::Dimension {
            expected: p.len(),
            found: if q.len() != p.len() { q.len() } else { x.len() },
        });
    }
    Ok(interval_unchecked(p, q, x, epsilon))
}

fn interval_unchecked(p: &[f64], q: &[f64], x: &[f64], epsilon: f64) -> Option<(f64, f64)> {
    let mut a = 0.0;
    let mut b = 0.0;
    let mut c = 0.0;
    for ((&pi, &qi), &xi) in p.iter().zip(q).zip(x) {
        let d = pi - qi;
        let r = qi - xi;
        a += d * d;
        b += r * d;
        c += r * r;
    }
    let c = c - epsilon * epsilon;
    if a == 0.0 {
        return if c <= 0.0 { Some((0.0, 1.0)) } else { None };
    }
    // a λ² + 2bλ + c ≤ 0
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // stable roots: the one not suffering cancellation first
    let (lo, hi) = if b >= 0.0 {
        let r1 = (-b - sq) / a;
        let r2 = if b + sq != 0.0 { c / (-b - sq) } else { 0.0 };
        (r1.min(r2), r1.max(r2))
    } else {
        let r1 = (-b + sq) / a;
        let r2 = c / (-b + sq);
        (r1.min(r2), r1.max(r2))
    };
    let lo = lo.max(0.0);
    let hi = hi.min(1.0);
    if lo > hi {
        None
    } else {
        Some((lo, hi))
    }
}

/// Parameter of the orthogonal projection of x onto the line through q (λ = 0)
/// and p (λ = 1), and the distance from x to that projection.
pub fn line_parameter(p: &[f64], q: &[f64], x: &[f64]) -> (f64, f64) {
    let mut dd = 0.0;
    let mut rd = 0.0;
    for ((&pi, &qi), &xi) in p.iter().zip(q).zip(x) {
        let d = pi - qi;
        dd += d * d;
        rd += (xi - qi) * d;
    }
    if dd == 0.0 {
        return (0.0, distance(q, x));
    }
    let lambda = rd / dd;
    let residual = p
        .iter()
        .zip(q)
        .zip(x)
        .map(|((&pi, &qi), &xi)| {
            let z = qi + lambda * (pi - qi) - xi;
            z * z
        })
        .sum::<f64>()
        .sqrt();
    (lambda, residual)
}

/// Default line tolerance: 1e-9 times the dataset diameter.
pub fn default_tol_line(ds: &LabeledDataset) -> f64 {
    1e-9 * ds.diameter().max(f64::MIN_POSITIVE)
}

/// All ordered pairs (including p = q) whose segment meets B_ε(x).
pub fn segment_hits(
    ds: &LabeledDataset,
    x: &[f64],
    epsilon: f64,
    tol_line: f64,
) -> Result<Vec<SegmentHit>> {
    check_dim(ds, x)?;
    let m = ds.len();
    let mut hits = Vec::new();
    for pi in 0..m {
        for qi in 0..m {
            let (p, q) = (ds.point(pi), ds.point(qi));
            if let Some(interval) = interval_unchecked(p, q, x, epsilon) {
                let (lambda, residual) = line_parameter(p, q, x);
                let pair_norm = distance(p, q);
                let lambda_star =
                    (pair_norm > 0.0 && residual <= tol_line && (0.0..=1.0).contains(&lambda))
                        .then_some(lambda);
                hits.push(SegmentHit {
                    p_index: pi,
                    q_index: qi,
                    classes: (ds.label(pi), ds.label(qi)),
                    lambda_interval: interval,
                    lambda_star,
                    pair_norm,
                });
            }
        }
    }
    Ok(hits)
}

/// Exact ξ tables at probe `x` for radius `epsilon`.
pub fn xi_table(
    ds: &LabeledDataset,
    dist: &MixingDistribution,
    x: &[f64],
    epsilon: f64,
) -> Result<XiTable> {
    check_dim(ds, x)?;
    if !(epsilon > 0.0) {
        return Err(Error::Contract(format!(
            "ε must be positive, got {epsilon}"
        )));
    }
    let k = ds.k();
    let m = ds.len();
    let w = 1.0 / (m as f64 * m as f64);
    let mut xi = vec![vec![0.0; k]; k];
    let mut xi_lambda = vec![vec![0.0; k]; k];
    let mut any = false;
    for pi in 0..m {
        let i = ds.label(pi) - 1;
        for qi in 0..m {
            let j = ds.label(qi) - 1;
            if let Some((lo, hi)) = interval_unchecked(ds.point(pi), ds.point(qi), x, epsilon) {
                let mass = dist.interval_mass(lo, hi);
                if mass > 0.0 {
                    any = true;
                    xi[i][j] += w * mass;
                    xi_lambda[i][j] += w * dist.interval_first_moment(lo, hi);
                }
            }
        }
    }
    Ok(XiTable {
        xi,
        xi_lambda,
        epsilon,
        probe: x.to_vec(),
        in_xmix: any,
    })
}

impl XiTable {
    pub fn k(&self) -> usize {
        self.xi.len()
    }

    /// Unnormalized class weights of the general closed form.
    pub fn coefficients(&self) -> Vec<f64> {
        let k = self.k();
        (0..k)
            .map(|i| {
                let mut c = self.xi[i][i];
                for j in (0..k).filter(|&j| j != i) {
                    c += self.xi_lambda[i][j] + (self.xi[j][i] - self.xi_lambda[j][i]);
                }
                c.max(0.0)
            })
            .collect()
    }

    /// Class weights of the simplified form valid for symmetric mixing laws.
    pub fn symmetric_coefficients(&self) -> Vec<f64> {
        let k = self.k();
        (0..k)
            .map(|i| {
                self.xi[i][i]
                    + 2.0
                        * (0..k)
                            .filter(|&j| j != i)
                            .map(|j| self.xi_lambda[i][j])
                            .sum::<f64>()
            })
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.xi.iter().flatten().sum()
    }
}

/// The fixed-ε Mixup-optimal prediction at `x`.
pub fn h_epsilon(
    ds: &LabeledDataset,
    dist: &MixingDistribution,
    x: &[f64],
    epsilon: f64,
) -> Result<ClassProbs> {
    let table = xi_table(ds, dist, x, epsilon)?;
    if !table.in_xmix {
        return Err(Error::OutsideMix { epsilon });
    }
    ClassProbs::from_coefficients(&table.coefficients()).ok_or(Error::OutsideMix { epsilon })
}

/// [`h_epsilon`] through the symmetric simplification; errors for asymmetric laws.
pub fn h_epsilon_symmetric(
    ds: &LabeledDataset,
    dist: &MixingDistribution,
    x: &[f64],
    epsilon: f64,
) -> Result<ClassProbs> {
    if !dist.is_symmetric() {
        return Err(Error::Contract(format!(
            "symmetric closed form requires a symmetric mixing law, got {}",
            dist.label()
        )));
    }
    let table = xi_table(ds, dist, x, epsilon)?;
    if !table.in_xmix {
        return Err(Error::OutsideMix { epsilon });
    }
    ClassProbs::from_coefficients(&table.symmetric_coefficients())
        .ok_or(Error::OutsideMix { epsilon })
}

/// The ε → 0 limit of [`h_epsilon`].
///
/// On a data point of class i the self pair dominates and the limit is e_i.
/// Elsewhere each ordered pair whose open segment passes through x (within
/// `tol_line`) carries P_f mass f(λ*)·2ε/‖p−q‖ + o(ε); the common 2ε cancels.
pub fn h_limit(
    ds: &LabeledDataset,
    dist: &MixingDistribution,
    x: &[f64],
    tol_line: f64,
) -> Result<LimitValue> {
    check_dim(ds, x)?;
    let k = ds.k();
    if let Some(idx) = (0..ds.len()).find(|&i| distance(ds.point(i), x) <= tol_line) {
        return Ok(LimitValue::Defined(ClassProbs::one_hot(k, ds.label(idx))));
    }
    let m = ds.len();
    let norm = 1.0 / (m as f64 * m as f64);
    let mut table = XiTable {
        xi: vec![vec![0.0; k]; k],
        xi_lambda: vec![vec![0.0; k]; k],
        epsilon: 0.0,
        probe: x.to_vec(),
        in_xmix: false,
    };
    for pi in 0..m {
        let i = ds.label(pi) - 1;
        for qi in 0..m {
            if pi == qi {
                continue;
            }
            let (p, q) = (ds.point(pi), ds.point(qi));
            let pair_norm = distance(p, q);
            if pair_norm == 0.0 {
                continue;
            }
            let (lambda, residual) = line_parameter(p, q, x);
            if residual > tol_line || lambda <= 0.0 || lambda >= 1.0 {
                continue;
            }
            let w = norm * dist.density(lambda) / pair_norm;
            if w > 0.0 {
                let j = ds.label(qi) - 1;
                table.xi[i][j] += w;
                table.xi_lambda[i][j] += lambda * w;
                table.in_xmix = true;
            }
        }
    }
    Ok(match ClassProbs::from_coefficients(&table.coefficients()) {
        Some(p) if table.in_xmix => LimitValue::Defined(p),
        _ => LimitValue::Undefined,
    })
}

/// How [`boundary_grid`] evaluates each cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridMode {
    Epsilon(f64),
    Limit { tol_line: f64 },
}

/// Cell-centred grid over a rectangle: `nx` columns in x, `ny` rows in y.
/// With n cells along an axis the centres run from the range start to its end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn square(lo: f64, hi: f64, n: usize) -> Self {
        Self {
            x_range: (lo, hi),
            y_range: (lo, hi),
            nx: n,
            ny: n,
        }
    }

    fn coord(range: (f64, f64), n: usize, i: usize) -> f64 {
        if n <= 1 {
            0.5 * (range.0 + range.1)
        } else {
            range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
        }
    }

    /// Centre of cell (column `ix`, row `iy`).
    pub fn center(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            Self::coord(self.x_range, self.nx, ix),
            Self::coord(self.y_range, self.ny, iy),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub x: f64,
    pub y: f64,
    /// Predicted class (1-based), 0 where the classifier is undefined.
    pub label: usize,
    pub probs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGrid {
    pub spec: GridSpec,
    pub k: usize,
    /// Row-major: index `iy * nx + ix`.
    pub cells: Vec<GridCell>,
}

impl BoundaryGrid {
    pub fn cell(&self, ix: usize, iy: usize) -> &GridCell {
        &self.cells[iy * self.spec.nx + ix]
    }

    /// CSV with columns `x,y,label,p1..pk`; probabilities are blank where undefined.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["x".to_string(), "y".into(), "label".into()];
        header.extend((1..=self.k).map(|i| format!("p{i}")));
        w.write_record(&header)?;
        for cell in &self.cells {
            let mut row = vec![
                cell.x.to_string(),
                cell.y.to_string(),
                cell.label.to_string(),
            ];
            match &cell.probs {
                Some(p) => row.extend(p.iter().map(|v| v.to_string())),
                None => row.extend(std::iter::repeat_n(String::new(), self.k)),
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Argmax class of the oracle on every cell of a 2-D grid.
pub fn boundary_grid(
    ds: &LabeledDataset,
    dist: &MixingDistribution,
    spec: GridSpec,
    mode: GridMode,
) -> Result<BoundaryGrid> {
    if ds.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: ds.dim(),
        });
    }
    let cells = (0..spec.nx * spec.ny)
        .into_par_iter()
        .map(|idx| {
            let (x, y) = spec.center(idx % spec.nx, idx / spec.nx);
            let probe = [x, y];
            let probs = match mode {
                GridMode::Epsilon(eps) => match h_epsilon(ds, dist, &probe, eps) {
                    Ok(p) => Some(p),
                    Err(Error::OutsideMix { .. }) => None,
                    Err(e) => return Err(e),
                },
                GridMode::Limit { tol_line } => {
                    h_limit(ds, dist, &probe, tol_line)?.probs().cloned()
                }
            };
            Ok(GridCell {
                x,
                y,
                label: probs.as_ref().map_or(0, ClassProbs::argmax),
                probs: probs.map(|p| p.probs),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryGrid {
        spec,
        k: ds.k(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{alternating_line, four_point_cross, two_moons};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn interval_examples() {
        let (lo, hi) = segment_ball_interval(&[0.0], &[2.0], &[1.0], 0.1)
            .unwrap()
            .unwrap();
        assert!(
            close(lo, 0.45, 1e-15) && close(hi, 0.55, 1e-15),
            "{lo} {hi}"
        );
        assert_eq!(
            segment_ball_interval(&[3.0, 1.0], &[3.0, 1.0], &[3.0, 1.0], 0.0).unwrap(),
            Some((0.0, 1.0))
        );
        assert_eq!(
            segment_ball_interval(&[0.0, 1.0], &[0.0, -1.0], &[1.0, 0.0], 0.5).unwrap(),
            None
        );
        assert!(segment_ball_interval(&[0.0], &[0.0, 1.0], &[0.0], 0.5).is_err());
    }

    #[test]
    fn interval_is_clamped_and_contains_only_ball_points() {
        // segment from 0 to 1 with ball around 1.05: λ near 1 only
        let (lo, hi) = segment_ball_interval(&[1.0], &[0.0], &[1.05], 0.1)
            .unwrap()
            .unwrap();
        assert!(close(lo, 0.95, 1e-14) && hi == 1.0);
    }

    #[test]
    fn xi_table_three_point_line() {
        let ds = alternating_line(3, 2).unwrap();
        let t = xi_table(&ds, &MixingDistribution::uniform(), &[1.0], 0.1).unwrap();
        assert!(close(t.xi[0][0], 2.0 / 9.0 * 0.1, 1e-15));
        assert!(close(t.xi[1][1], 1.0 / 9.0, 1e-15));
        assert!(close(t.xi_lambda[0][1], 2.0 / 9.0 * 0.005, 1e-15));
        assert!(close(t.xi_lambda[1][0], 2.0 / 9.0 * 0.095, 1e-15));
        assert!(t.in_xmix);
    }

    #[test]
    fn xi_table_far_probe_is_empty() {
        let ds = four_point_cross();
        let t = xi_table(&ds, &MixingDistribution::uniform(), &[5.0, 5.0], 0.1).unwrap();
        assert!(!t.in_xmix);
        assert_eq!(t.total_mass(), 0.0);
        assert!(matches!(
            h_epsilon(&ds, &MixingDistribution::uniform(), &[5.0, 5.0], 0.1),
            Err(Error::OutsideMix { .. })
        ));
    }

    #[test]
    fn h_epsilon_three_point_line() {
        let ds = alternating_line(3, 2).unwrap();
        let u = MixingDistribution::uniform();
        let h = h_epsilon(&ds, &u, &[1.0], 0.1).unwrap();
        assert!(close(h.get(1), 0.1375, 1e-12) && close(h.get(2), 0.8625, 1e-12));
        let hs = h_epsilon_symmetric(&ds, &u, &[1.0], 0.1).unwrap();
        assert!(close(hs.get(1), h.get(1), 1e-12));

        let b70 = MixingDistribution::beta_symmetric(70.0).unwrap();
        assert!(h_epsilon(&ds, &b70, &[1.0], 0.1).unwrap().get(1) > 0.5);
    }

    #[test]
    fn cross_origin_is_tied() {
        let ds = four_point_cross();
        let u = MixingDistribution::uniform();
        for eps in [0.01, 0.1, 0.3, 0.49] {
            let t = xi_table(&ds, &u, &[0.0, 0.0], eps).unwrap();
            assert!(close(t.xi[0][1], 0.0, 0.0) && close(t.xi[1][0], 0.0, 0.0));
            let h = h_epsilon(&ds, &u, &[0.0, 0.0], eps).unwrap();
            assert!(close(h.get(1), 0.5, 1e-12), "eps {eps}: {:?}", h);
        }
        let t = xi_table(&ds, &u, &[0.0, 0.0], 0.1).unwrap();
        assert!(close(t.xi[0][0], 0.0125, 1e-15));
    }

    #[test]
    fn symmetric_form_rejects_asymmetric_law() {
        let ds = alternating_line(3, 2).unwrap();
        let skew = MixingDistribution::tabulated(&[(0.0, 2.0), (1.0, 0.0)]).unwrap();
        assert!(matches!(
            h_epsilon_symmetric(&ds, &skew, &[1.0], 0.1),
            Err(Error::Contract(_))
        ));
        assert!(h_epsilon(&ds, &skew, &[1.0], 0.1).is_ok());
    }

    #[test]
    fn single_class_coefficient_is_one_hot() {
        let ds = four_point_cross();
        let h =
            h_epsilon_symmetric(&ds, &MixingDistribution::uniform(), &[0.0, 0.6], 0.05).unwrap();
        assert_eq!(h.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn limit_examples() {
        let ds = four_point_cross();
        let u = MixingDistribution::uniform();
        let tol = default_tol_line(&ds);
        let origin = h_limit(&ds, &u, &[0.0, 0.0], tol).unwrap();
        assert_eq!(origin.probs().unwrap().as_slice(), &[0.5, 0.5]);
        assert_eq!(origin.probs().unwrap().argmax(), 1);
        let up = h_limit(&ds, &u, &[0.0, 0.5], tol).unwrap();
        assert_eq!(up.probs().unwrap().as_slice(), &[1.0, 0.0]);
        assert_eq!(
            h_limit(&ds, &u, &[0.3, 0.2], tol).unwrap(),
            LimitValue::Undefined
        );

        let line = alternating_line(3, 2).unwrap();
        for dist in [u.clone(), MixingDistribution::beta_symmetric(32.0).unwrap()] {
            let v = h_limit(&line, &dist, &[1.0], default_tol_line(&line)).unwrap();
            assert_eq!(v.probs().unwrap().as_slice(), &[0.0, 1.0]);
        }
    }

    #[test]
    fn grid_on_cross() {
        let ds = four_point_cross();
        let u = MixingDistribution::uniform();
        let spec = GridSpec::square(-1.5, 1.5, 101);
        let grid = boundary_grid(
            &ds,
            &u,
            spec,
            GridMode::Limit {
                tol_line: default_tol_line(&ds),
            },
        )
        .unwrap();
        let origin = grid.cell(50, 50);
        assert!(origin.x.abs() < 1e-12 && origin.y.abs() < 1e-12);
        let p = origin.probs.as_ref().unwrap();
        assert!((p[0] - p[1]).abs() < 1e-6);
        // on the vertical class-1 segment
        assert_eq!(grid.cell(50, 70).label, 1);
        // on the horizontal class-2 segment
        assert_eq!(grid.cell(70, 50).label, 2);
        // corner, nowhere near a segment
        assert_eq!(grid.cell(0, 0).label, 0);

        let mut csv = Vec::new();
        grid.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("x,y,label,p1,p2\n"));
        assert_eq!(text.lines().count(), 101 * 101 + 1);
    }

    #[test]
    fn grid_outside_segments_is_zero() {
        let ds = four_point_cross();
        let spec = GridSpec {
            x_range: (3.0, 4.0),
            y_range: (3.0, 4.0),
            nx: 5,
            ny: 5,
        };
        for mode in [GridMode::Epsilon(0.1), GridMode::Limit { tol_line: 1e-9 }] {
            let grid = boundary_grid(&ds, &MixingDistribution::uniform(), spec, mode).unwrap();
            assert!(grid.cells.iter().all(|c| c.label == 0));
        }
        let line = alternating_line(3, 2).unwrap();
        assert!(boundary_grid(
            &line,
            &MixingDistribution::uniform(),
            spec,
            GridMode::Epsilon(0.1)
        )
        .is_err());
    }

    #[test]
    fn grid_labels_moon_arc_points() {
        // 101 evenly spaced angles include t = 0, π/2, π on the class-1 arc
        let ds = two_moons(101, 0.5, 0.0, 0).unwrap();
        let spec = GridSpec {
            x_range: (-1.0, 1.0),
            y_range: (0.0, 1.0),
            nx: 3,
            ny: 2,
        };
        let grid = boundary_grid(
            &ds,
            &MixingDistribution::uniform(),
            spec,
            GridMode::Limit {
                tol_line: default_tol_line(&ds),
            },
        )
        .unwrap();
        assert_eq!(grid.cell(0, 0).label, 1);
        assert_eq!(grid.cell(2, 0).label, 1);
        assert_eq!(grid.cell(1, 1).label, 1);
    }
}
