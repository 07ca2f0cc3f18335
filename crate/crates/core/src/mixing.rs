//! Mixing distributions on [0, 1].
//!
//! The law of the Mixup coefficient λ. Every query needed by the oracle
//! (CDF, interval mass, interval first moment) is exact up to floating point:
//! the symmetric Beta uses the regularized incomplete beta function, the
//! uniform law is elementary, and tabulated densities are piecewise linear.

use std::io::Read;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, Rule};
use crate::special::beta_inc;

/// Smallest supported Beta shape; below this the density is too singular at
/// the endpoints for the limit classifier to be meaningful.
pub const MIN_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub enum MixingKind {
    BetaSymmetric { alpha: f64 },
    Uniform,
    Tabulated(Table),
}

/// A piecewise-linear density on a strictly increasing λ grid, zero outside
/// the grid's range.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    lambdas: Vec<f64>,
    densities: Vec<f64>,
    cum_mass: Vec<f64>,
    cum_moment: Vec<f64>,
    renormalization: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingDistribution {
    kind: MixingKind,
    symmetric: bool,
}

impl MixingDistribution {
    /// Beta(α, α). Errors for α ≤ 0 (invalid) and α < 0.5 (unsupported).
    pub fn beta_symmetric(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "Beta shape must be positive and finite, got {alpha}"
            )));
        }
        if alpha < MIN_ALPHA {
            return Err(Error::UnsupportedAlpha { alpha });
        }
        Ok(Self {
            kind: MixingKind::BetaSymmetric { alpha },
            symmetric: true,
        })
    }

    pub fn uniform() -> Self {
        Self {
            kind: MixingKind::Uniform,
            symmetric: true,
        }
    }

    /// Piecewise-linear density through `(λ, density)` pairs. The table is
    /// renormalized to unit mass; see [`Self::renormalization`].
    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        let table = Table::new(points)?;
        let symmetric = table.is_symmetric();
        Ok(Self {
            kind: MixingKind::Tabulated(table),
            symmetric,
        })
    }

    /// Reads a `lambda,density` CSV table.
    pub fn tabulated_from_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "lambda" || &headers[1] != "density" {
            return Err(Error::Parse {
                line: 1,
                message: "expected header `lambda,density`".into(),
            });
        }
        let mut points = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            let field = |i: usize| -> Result<f64> {
                record[i].parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    message: format!("field {} `{}`: {e}", i + 1, &record[i]),
                })
            };
            points.push((field(0)?, field(1)?));
        }
        Self::tabulated(&points)
    }

    pub fn tabulated_from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::tabulated_from_reader(file)
    }

    pub fn kind(&self) -> &MixingKind {
        &self.kind
    }

    /// Whether λ and 1 − λ have the same law.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Factor applied to a tabulated density to give it unit mass.
    pub fn renormalization(&self) -> Option<f64> {
        match &self.kind {
            MixingKind::Tabulated(t) => Some(t.renormalization),
            _ => None,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.kind {
            MixingKind::BetaSymmetric { alpha } => Some(alpha),
            _ => None,
        }
    }

    pub fn density(&self, lambda: f64) -> f64 {
        if !(0.0..=1.0).contains(&lambda) {
            return 0.0;
        }
        match &self.kind {
            MixingKind::Uniform => 1.0,
            MixingKind::BetaSymmetric { alpha } => beta_density(*alpha, lambda),
            MixingKind::Tabulated(t) => t.density(lambda),
        }
    }

    /// P_f([0, x]); `x` is clamped to [0, 1].
    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match &self.kind {
            MixingKind::Uniform => x,
            MixingKind::BetaSymmetric { alpha } => beta_inc(*alpha, *alpha, x),
            MixingKind::Tabulated(t) => t.cdf(x),
        }
    }

    /// P_f([a, b]) after clamping both ends to [0, 1]; zero for empty intervals.
    pub fn interval_mass(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0));
        if a >= b {
            return 0.0;
        }
        let mass = match &self.kind {
            MixingKind::Uniform => b - a,
            MixingKind::BetaSymmetric { alpha } => {
                beta_inc(*alpha, *alpha, b) - beta_inc(*alpha, *alpha, a)
            }
            MixingKind::Tabulated(t) => t.cdf(b) - t.cdf(a),
        };
        mass.max(0.0)
    }

    /// ∫_a^b λ f(λ) dλ after clamping to [0, 1].
    pub fn interval_first_moment(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0));
        if a >= b {
            return 0.0;
        }
        let moment = match &self.kind {
            MixingKind::Uniform => 0.5 * (b * b - a * a),
            // λ·Beta(α, α) density = ½·Beta(α + 1, α) density
            MixingKind::BetaSymmetric { alpha } => {
                0.5 * (beta_inc(alpha + 1.0, *alpha, b) - beta_inc(alpha + 1.0, *alpha, a))
            }
            MixingKind::Tabulated(t) => t.first_moment_to(b) - t.first_moment_to(a),
        };
        moment.clamp(a * self.interval_mass(a, b), b * self.interval_mass(a, b))
    }

    pub fn mean(&self) -> f64 {
        self.interval_first_moment(0.0, 1.0)
    }

    pub fn variance(&self) -> f64 {
        match &self.kind {
            MixingKind::Uniform => 1.0 / 12.0,
            MixingKind::BetaSymmetric { alpha } => 1.0 / (8.0 * alpha + 4.0),
            MixingKind::Tabulated(_) => {
                let mu = self.mean();
                self.expectation_rule(64).integrate(|l| (l - mu) * (l - mu))
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            MixingKind::Uniform => rng.random::<f64>(),
            MixingKind::BetaSymmetric { alpha } => {
                let gamma = Gamma::new(*alpha, 1.0).expect("validated shape");
                let x: f64 = gamma.sample(rng);
                let y: f64 = gamma.sample(rng);
                if x + y == 0.0 {
                    0.5
                } else {
                    x / (x + y)
                }
            }
            MixingKind::Tabulated(t) => t.inverse_cdf(rng.random::<f64>()),
        }
    }

    /// A rule with `Σ wᵢ g(λᵢ) ≈ E[g(λ)]` for smooth `g`, built from about
    /// `nodes` Gauss–Legendre points.
    pub fn expectation_rule(&self, nodes: usize) -> Rule {
        let nodes = nodes.max(2);
        match &self.kind {
            MixingKind::Uniform => gauss_legendre(nodes, 0.0, 1.0),
            MixingKind::BetaSymmetric { alpha } if *alpha >= 2.0 => {
                // mass beyond 14σ of ½ is below e^-98 (sub-Gaussian tail)
                let half_width = (14.0 / (8.0 * alpha + 4.0).sqrt()).min(0.5);
                let base = gauss_legendre(nodes, 0.5 - half_width, 0.5 + half_width);
                weight_by_density(&base, |l| beta_density(*alpha, l))
            }
            MixingKind::BetaSymmetric { alpha } => {
                // λ = s²/2 on each half tames the endpoint singularity of λ^(α−1)
                let half = gauss_legendre(nodes.div_ceil(2), 0.0, 1.0);
                let mut out = Rule {
                    nodes: Vec::new(),
                    weights: Vec::new(),
                };
                for (s, w) in half.iter() {
                    let l = 0.5 * s * s;
                    let wt = w * s * beta_density(*alpha, l);
                    out.nodes.push(l);
                    out.weights.push(wt);
                    out.nodes.push(1.0 - l);
                    out.weights.push(wt);
                }
                out
            }
            MixingKind::Tabulated(t) => {
                let mut out = Rule {
                    nodes: Vec::new(),
                    weights: Vec::new(),
                };
                for seg in t.lambdas.windows(2) {
                    let base = gauss_legendre(4, seg[0], seg[1]);
                    let weighted = weight_by_density(&base, |l| t.density(l));
                    out.nodes.extend(weighted.nodes);
                    out.weights.extend(weighted.weights);
                }
                out
            }
        }
    }

    /// Short human-readable label, e.g. `beta(32)`.
    pub fn label(&self) -> String {
        match &self.kind {
            MixingKind::Uniform => "uniform".into(),
            MixingKind::BetaSymmetric { alpha } => format!("beta({alpha})"),
            MixingKind::Tabulated(t) => format!("tabulated({} points)", t.lambdas.len()),
        }
    }
}

fn weight_by_density(base: &Rule, density: impl Fn(f64) -> f64) -> Rule {
    let weights = base.iter().map(|(l, w)| w * density(l)).collect();
    Rule {
        nodes: base.nodes.clone(),
        weights,
    }
}

fn beta_density(alpha: f64, lambda: f64) -> f64 {
    if alpha == 1.0 {
        return 1.0;
    }
    if lambda <= 0.0 || lambda >= 1.0 {
        return if alpha < 1.0 { f64::INFINITY } else { 0.0 };
    }
    let ln =
        (alpha - 1.0) * (lambda.ln() + (-lambda).ln_1p()) - crate::special::ln_beta(alpha, alpha);
    ln.exp()
}

/// Smallest Beta(α, α) shape for which sub-Gaussian concentration already
/// guarantees P(|λ − ½| ≤ ε) > ½, namely ½(ln 4 / ε² − 1).
pub fn alpha_threshold(epsilon: f64) -> f64 {
    assert!(epsilon > 0.0, "epsilon must be positive");
    0.5 * (4.0_f64.ln() / (epsilon * epsilon) - 1.0)
}

impl Table {
    fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidDistribution(
                "tabulated density needs at least two grid points".into(),
            ));
        }
        for (i, &(l, d)) in points.iter().enumerate() {
            if !(0.0..=1.0).contains(&l) || !l.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "λ = {l} at row {} outside [0, 1]",
                    i + 1
                )));
            }
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "negative or non-finite density {d} at row {}",
                    i + 1
                )));
            }
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidDistribution(
                "λ grid must be strictly increasing".into(),
            ));
        }
        let lambdas: Vec<f64> = points.iter().map(|p| p.0).collect();
        let raw: Vec<f64> = points.iter().map(|p| p.1).collect();
        let area: f64 = lambdas
            .windows(2)
            .zip(raw.windows(2))
            .map(|(l, d)| 0.5 * (l[1] - l[0]) * (d[0] + d[1]))
            .sum();
        if area <= 0.0 {
            return Err(Error::InvalidDistribution(
                "tabulated density has zero mass".into(),
            ));
        }
        let renormalization = 1.0 / area;
        let densities: Vec<f64> = raw.iter().map(|d| d * renormalization).collect();

        let mut cum_mass = vec![0.0; lambdas.len()];
        let mut cum_moment = vec![0.0; lambdas.len()];
        for k in 0..lambdas.len() - 1 {
            let h = lambdas[k + 1] - lambdas[k];
            cum_mass[k + 1] = cum_mass[k] + segment_mass(densities[k], densities[k + 1], h, h);
            cum_moment[k + 1] =
                cum_moment[k] + segment_moment(lambdas[k], densities[k], densities[k + 1], h, h);
        }
        Ok(Self {
            lambdas,
            densities,
            cum_mass,
            cum_moment,
            renormalization,
        })
    }

    fn segment(&self, x: f64) -> Option<usize> {
        let n = self.lambdas.len();
        if x < self.lambdas[0] || x > self.lambdas[n - 1] {
            return None;
        }
        let k = self.lambdas.partition_point(|&l| l <= x);
        Some(k.saturating_sub(1).min(n - 2))
    }

    fn density(&self, x: f64) -> f64 {
        match self.segment(x) {
            None => 0.0,
            Some(k) => {
                let h = self.lambdas[k + 1] - self.lambdas[k];
                let t = (x - self.lambdas[k]) / h;
                self.densities[k] * (1.0 - t) + self.densities[k + 1] * t
            }
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        let n = self.lambdas.len();
        if x <= self.lambdas[0] {
            return 0.0;
        }
        if x >= self.lambdas[n - 1] {
            return 1.0;
        }
        let k = self.segment(x).expect("inside grid");
        let width = self.lambdas[k + 1] - self.lambdas[k];
        let h = x - self.lambdas[k];
        (self.cum_mass[k] + segment_mass(self.densities[k], self.densities[k + 1], width, h))
            .min(1.0)
    }

    fn first_moment_to(&self, x: f64) -> f64 {
        let n = self.lambdas.len();
        if x <= self.lambdas[0] {
            return 0.0;
        }
        if x >= self.lambdas[n - 1] {
            return self.cum_moment[n - 1];
        }
        let k = self.segment(x).expect("inside grid");
        let width = self.lambdas[k + 1] - self.lambdas[k];
        let h = x - self.lambdas[k];
        self.cum_moment[k]
            + segment_moment(
                self.lambdas[k],
                self.densities[k],
                self.densities[k + 1],
                width,
                h,
            )
    }

    fn inverse_cdf(&self, u: f64) -> f64 {
        let n = self.lambdas.len();
        let u = u.clamp(0.0, 1.0);
        let k = self
            .cum_mass
            .partition_point(|&c| c <= u)
            .saturating_sub(1)
            .min(n - 2);
        let width = self.lambdas[k + 1] - self.lambdas[k];
        let f0 = self.densities[k];
        let slope = (self.densities[k + 1] - f0) / width;
        let r = (u - self.cum_mass[k]).max(0.0);
        // solve f0·h + slope·h²/2 = r in its cancellation-free form
        let disc = (f0 * f0 + 2.0 * slope * r).max(0.0);
        let denom = f0 + disc.sqrt();
        let h = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        (self.lambdas[k] + h.min(width)).clamp(0.0, 1.0)
    }

    fn is_symmetric(&self) -> bool {
        let scale = self.densities.iter().cloned().fold(0.0, f64::max);
        self.lambdas
            .iter()
            .all(|&l| (self.density(l) - self.density(1.0 - l)).abs() <= 1e-9 * scale)
    }
}

/// ∫_0^h of the linear density through (0, f0) and (width, f1).
fn segment_mass(f0: f64, f1: f64, width: f64, h: f64) -> f64 {
    let slope = (f1 - f0) / width;
    f0 * h + 0.5 * slope * h * h
}

/// ∫_0^h (start + u)·(f0 + slope·u) du.
fn segment_moment(start: f64, f0: f64, f1: f64, width: f64, h: f64) -> f64 {
    let slope = (f1 - f0) / width;
    start * f0 * h + 0.5 * (start * slope + f0) * h * h + slope * h * h * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn beta(alpha: f64) -> MixingDistribution {
        MixingDistribution::beta_symmetric(alpha).unwrap()
    }

    #[test]
    fn cdf_examples() {
        for alpha in [0.5, 1.0, 2.0, 32.0, 1024.0] {
            assert!((beta(alpha).cdf(0.5) - 0.5).abs() < 1e-12);
        }
        assert_eq!(MixingDistribution::uniform().cdf(0.3), 0.3);
        // independent polynomial route: 3x² − 2x³
        let x: f64 = 0.25;
        let poly = 3.0 * x * x - 2.0 * x * x * x;
        assert!((beta(2.0).cdf(x) - poly).abs() < 1e-14);
        assert!((poly - 0.15625).abs() < 1e-15);
    }

    #[test]
    fn cdf_endpoints_and_clamping() {
        let d = beta(3.5);
        assert_eq!(d.cdf(0.0), 0.0);
        assert_eq!(d.cdf(1.0), 1.0);
        assert_eq!(d.cdf(-1.0), 0.0);
        assert_eq!(d.cdf(2.0), 1.0);
    }

    #[test]
    fn invalid_shapes() {
        assert!(matches!(
            MixingDistribution::beta_symmetric(0.0),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(matches!(
            MixingDistribution::beta_symmetric(-2.0),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(matches!(
            MixingDistribution::beta_symmetric(0.3),
            Err(Error::UnsupportedAlpha { .. })
        ));
        assert!(MixingDistribution::tabulated(&[(0.0, 1.0), (0.5, -1.0), (1.0, 1.0)]).is_err());
        assert!(MixingDistribution::tabulated(&[(0.0, 1.0), (0.0, 1.0)]).is_err());
    }

    #[test]
    fn interval_examples() {
        let u = MixingDistribution::uniform();
        assert!((u.interval_mass(0.45, 0.55) - 0.1).abs() < 1e-15);
        assert!((u.interval_first_moment(0.0, 0.1) - 0.005).abs() < 1e-15);
        assert!((u.interval_first_moment(0.9, 1.0) - 0.095).abs() < 1e-15);
        assert!((beta(7.0).interval_mass(0.0, 1.0) - 1.0).abs() < 1e-14);
        assert!((beta(2.0).interval_first_moment(0.0, 1.0) - 0.5).abs() < 1e-14);
        assert_eq!(u.interval_mass(0.6, 0.4), 0.0);
        assert!((u.interval_mass(-1.0, 0.2) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn threshold_examples() {
        assert!((alpha_threshold(0.1) - 68.814_718_055_994_53).abs() < 1e-9);
        assert!((alpha_threshold(1.0) - 0.193_147_180_559_945_3).abs() < 1e-12);
        assert!(beta(70.0).interval_mass(0.4, 0.6) > 0.5);
    }

    #[test]
    fn tabulated_is_renormalized_and_exact() {
        // triangle on [0, 1] peaking at ½ with area ½ before renormalization
        let d = MixingDistribution::tabulated(&[(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]).unwrap();
        assert!((d.renormalization().unwrap() - 2.0).abs() < 1e-15);
        assert!(d.is_symmetric());
        assert!((d.cdf(0.5) - 0.5).abs() < 1e-15);
        assert!((d.cdf(0.25) - 0.125).abs() < 1e-15);
        assert!((d.mean() - 0.5).abs() < 1e-15);
        assert!((d.variance() - 1.0 / 24.0).abs() < 1e-12);

        let skew = MixingDistribution::tabulated(&[(0.0, 2.0), (1.0, 0.0)]).unwrap();
        assert!(!skew.is_symmetric());
        assert!((skew.mean() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tabulated_csv() {
        let csv = "lambda,density\n0,1\n0.5,1\n1,1\n";
        let d = MixingDistribution::tabulated_from_reader(csv.as_bytes()).unwrap();
        assert!((d.cdf(0.3) - 0.3).abs() < 1e-15);
        let bad = "lambda,density\n0,1\n0.5,abc\n";
        match MixingDistribution::tabulated_from_reader(bad.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(MixingDistribution::tabulated_from_reader("x,y\n0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn tabulated_sampling_matches_cdf() {
        let d = MixingDistribution::tabulated(&[(0.0, 2.0), (1.0, 0.0)]).unwrap();
        let mut rng = seeded(3);
        let n = 100_000;
        let below = (0..n).filter(|_| d.sample(&mut rng) <= 0.5).count() as f64 / n as f64;
        assert!((below - 0.75).abs() < 0.006, "{below}");
    }

    #[test]
    fn expectation_rules_integrate_moments() {
        for d in [
            MixingDistribution::uniform(),
            beta(0.5),
            beta(0.7),
            beta(1.0),
            beta(1.5),
            beta(32.0),
            beta(1024.0),
            MixingDistribution::tabulated(&[(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]).unwrap(),
        ] {
            let rule = d.expectation_rule(64);
            let mass = rule.integrate(|_| 1.0);
            let var = rule.integrate(|l| (l - 0.5) * (l - 0.5));
            assert!((mass - 1.0).abs() < 2e-4, "{}: mass {mass}", d.label());
            assert!(
                (var - d.variance()).abs() < 1e-4 * d.variance().max(1e-3),
                "{}: var {var}",
                d.label()
            );
        }
    }
}
