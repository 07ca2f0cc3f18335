//! Linear binary classification on ±1 labels: the minimum-norm interpolator,
//! its max-margin certificate, and the linear Mixup logistic loss.
//!
//! Because θ enters every loss term only through the scores sᵢ = θᵀxᵢ, the
//! loss and its gradient are computed on scores and pulled back with Xᵀ.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use serde::Serialize;

use crate::datasets::{gaussian_binary, LabeledDataset};
use crate::error::{Error, Result};
use crate::mixing::MixingDistribution;

/// θ together with the data vectors whose span it is kept in.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    pub theta: Vec<f64>,
    span_basis: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationCertificate {
    /// Common margin; the interpolator is scaled so that k = 1.
    pub k: f64,
    pub dual_coeffs: Vec<f64>,
    /// All yᵢβᵢ > 0: every point is a support vector of the hard-margin problem.
    pub is_max_margin: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (norm(a) * norm(b))
}

fn gram(points: &[Vec<f64>]) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| dot(&points[i], &points[j]))
}

/// Solves Gc = rhs; errors when the points are numerically dependent.
fn solve_gram(points: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let g = gram(points);
    let sv = g.clone().singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    if !(hi > 0.0) || lo < 1e-12 * hi {
        return Err(Error::Rank(format!(
            "Gram matrix is singular (condition estimate {:e})",
            if lo > 0.0 { hi / lo } else { f64::INFINITY }
        )));
    }
    let chol = g
        .cholesky()
        .ok_or_else(|| Error::Rank("Gram matrix is not positive definite".into()))?;
    Ok(chol
        .solve(&DVector::from_column_slice(rhs))
        .iter()
        .copied()
        .collect())
}

fn combine(points: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; points.first().map_or(0, Vec::len)];
    for (p, c) in points.iter().zip(coeffs) {
        for (o, v) in out.iter_mut().zip(p) {
            *o += c * v;
        }
    }
    out
}

impl LinearClassifier {
    pub fn new(theta: Vec<f64>, ds: &LabeledDataset) -> Self {
        Self {
            theta,
            span_basis: ds.points().to_vec(),
        }
    }

    /// Projection of `v` onto the span of the data.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        let rhs: Vec<f64> = self.span_basis.iter().map(|p| dot(p, v)).collect();
        Ok(combine(
            &self.span_basis,
            &solve_gram(&self.span_basis, &rhs)?,
        ))
    }

    /// ‖θ − P θ‖ for the projection P onto span(X).
    pub fn off_span_norm(&self) -> Result<f64> {
        let p = self.project(&self.theta)?;
        Ok(self
            .theta
            .iter()
            .zip(&p)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    pub fn scores(&self, points: &[Vec<f64>]) -> Vec<f64> {
        points.iter().map(|x| dot(&self.theta, x)).collect()
    }

    /// yᵢθᵀxᵢ for each point.
    pub fn margins(&self, ds: &LabeledDataset) -> Result<Vec<f64>> {
        let y = ds.signed_labels()?;
        Ok(self
            .scores(ds.points())
            .iter()
            .zip(&y)
            .map(|(s, y)| s * y)
            .collect())
    }
}

/// The minimum-norm θ with yᵢθᵀxᵢ = 1 for every point, with the dual
/// certificate deciding whether it is also the max-margin direction.
pub fn min_norm_interpolator(
    ds: &LabeledDataset,
) -> Result<(LinearClassifier, InterpolationCertificate)> {
    let y = ds.signed_labels()?;
    let beta = solve_gram(ds.points(), &y)?;
    let theta = combine(ds.points(), &beta);
    let is_max_margin = beta.iter().zip(&y).all(|(b, y)| b * y > 0.0);
    Ok((
        LinearClassifier::new(theta, ds),
        InterpolationCertificate {
            k: 1.0,
            dual_coeffs: beta,
            is_max_margin,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixupLossOptions {
    /// Quadrature nodes for the λ expectation (at least 16).
    pub nodes: usize,
    /// Include pairs from the same class (plain logistic terms).
    pub same_class_terms: bool,
}

impl Default for MixupLossOptions {
    fn default() -> Self {
        Self {
            nodes: 64,
            same_class_terms: true,
        }
    }
}

pub const MIN_NODES: usize = 16;

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Loss, gradient and (optionally) Hessian with respect to the scores.
fn score_loss(
    scores: &[f64],
    y: &[f64],
    dist: &MixingDistribution,
    opts: MixupLossOptions,
    with_hessian: bool,
) -> Result<(f64, Vec<f64>, Option<DMatrix<f64>>)> {
    if opts.nodes < MIN_NODES {
        return Err(Error::Contract(format!(
            "at least {MIN_NODES} quadrature nodes required, got {}",
            opts.nodes
        )));
    }
    let n = scores.len();
    let n_pos = y.iter().filter(|&&v| v > 0.0).count();
    let n_neg = n - n_pos;
    let weight = if opts.same_class_terms {
        1.0 / (n * n) as f64
    } else {
        if n_pos == 0 || n_neg == 0 {
            return Err(Error::Contract("both classes must be present".into()));
        }
        1.0 / (2 * n_pos * n_neg) as f64
    };
    let rule = dist.expectation_rule(opts.nodes);
    let mut loss = 0.0;
    let mut grad = vec![0.0; n];
    let mut hess = with_hessian.then(|| DMatrix::zeros(n, n));
    for a in 0..n {
        for b in 0..n {
            let same = (y[a] > 0.0) == (y[b] > 0.0);
            if same && !opts.same_class_terms {
                continue;
            }
            let (pa, pb) = (f64::from(y[a] > 0.0), f64::from(y[b] > 0.0));
            let (mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0);
            for (lambda, w) in rule.iter() {
                let z = lambda * scores[a] + (1.0 - lambda) * scores[b];
                let p = lambda * pa + (1.0 - lambda) * pb;
                let ww = weight * w;
                loss += ww * (p * softplus(-z) + (1.0 - p) * softplus(z));
                let sig = sigmoid(z);
                let dz = ww * (sig - p);
                grad[a] += dz * lambda;
                grad[b] += dz * (1.0 - lambda);
                if with_hessian {
                    let c = ww * sig * (1.0 - sig);
                    haa += c * lambda * lambda;
                    hab += c * lambda * (1.0 - lambda);
                    hbb += c * (1.0 - lambda) * (1.0 - lambda);
                }
            }
            if let Some(h) = hess.as_mut() {
                h[(a, a)] += haa;
                h[(b, b)] += hbb;
                h[(a, b)] += hab;
                h[(b, a)] += hab;
            }
        }
    }
    Ok((loss, grad, hess))
}

/// The linear Mixup logistic loss at θ and its gradient.
///
/// Ordered pairs (a, b) are weighted uniformly; the soft label of the mixture
/// λx_a + (1−λ)x_b is P(+) = λ[y_a = +] + (1−λ)[y_b = +]. Without same-class
/// terms only cross-class pairs are kept and renormalized. Either way θ = 0
/// gives ln 2.
pub fn mixup_linear_loss(
    theta: &[f64],
    ds: &LabeledDataset,
    dist: &MixingDistribution,
    opts: MixupLossOptions,
) -> Result<(f64, Vec<f64>)> {
    if theta.len() != ds.dim() {
        return Err(Error::Dimension {
            expected: ds.dim(),
            found: theta.len(),
        });
    }
    let y = ds.signed_labels()?;
    let scores: Vec<f64> = ds.points().iter().map(|x| dot(theta, x)).collect();
    let (loss, gs, _) = score_loss(&scores, &y, dist, opts, false)?;
    Ok((loss, combine(ds.points(), &gs)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOutcome {
    pub classifier: LinearClassifier,
    pub loss: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Minimizes the loss over θ ∈ span(X), started at θ = 0.
///
/// θ is parameterized as Xᵀc, so every iterate lies in the span exactly.
/// Each step is a damped Newton step on the scores s = Gc (the loss depends on
/// θ only through s), with backtracking on the loss and, once loss changes
/// fall below rounding, on the gradient norm. Requires a symmetric mixing law.
pub fn minimize_mixup_linear(
    ds: &LabeledDataset,
    dist: &MixingDistribution,
    opts: MixupLossOptions,
    max_iters: usize,
    grad_tol: f64,
) -> Result<MinimizeOutcome> {
    if !dist.is_symmetric() {
        return Err(Error::Contract(format!(
            "linear Mixup minimization assumes a symmetric mixing law, got {}",
            dist.label()
        )));
    }
    let y = ds.signed_labels()?;
    let n = ds.len();
    let g = gram(ds.points());
    // validates independence of the points
    solve_gram(ds.points(), &vec![0.0; n])?;
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Rank("Gram matrix is not positive definite".into()))?;
    // ‖Xᵀv‖ = sqrt(vᵀGv)
    let theta_norm = |v: &[f64]| {
        let v = DVector::from_column_slice(v);
        (v.dot(&(&g * &v))).max(0.0).sqrt()
    };

    let mut scores = vec![0.0; n];
    let (mut loss, mut grad_s, mut hess) = score_loss(&scores, &y, dist, opts, true)?;
    let mut grad_norm = theta_norm(&grad_s);
    let mut iterations = 0;
    while grad_norm > grad_tol {
        if iterations == max_iters {
            return Err(Error::NonConvergence {
                iterations,
                grad_norm,
            });
        }
        iterations += 1;
        let h = hess.take().expect("hessian requested");
        let rhs = DVector::from_column_slice(&grad_s);
        let direction: Vec<f64> = match h.clone().cholesky() {
            Some(c) => (-c.solve(&rhs)).iter().copied().collect(),
            None => grad_s.iter().map(|v| -v).collect(),
        };
        let mut t = 1.0;
        let slope: f64 = direction.iter().zip(&grad_s).map(|(d, g)| d * g).sum();
        loop {
            let trial: Vec<f64> = scores
                .iter()
                .zip(&direction)
                .map(|(s, d)| s + t * d)
                .collect();
            let (l, gs, hs) = score_loss(&trial, &y, dist, opts, true)?;
            let gn = theta_norm(&gs);
            let flat = (l - loss).abs() <= 1e-14 * loss.abs().max(1.0);
            if l <= loss + 1e-4 * t * slope || (flat && gn < grad_norm) {
                scores = trial;
                loss = l;
                grad_s = gs;
                hess = hs;
                grad_norm = gn;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::NonConvergence {
                    iterations,
                    grad_norm,
                });
            }
        }
    }
    let coeffs: Vec<f64> = chol
        .solve(&DVector::from_column_slice(&scores))
        .iter()
        .copied()
        .collect();
    Ok(MinimizeOutcome {
        classifier: LinearClassifier::new(combine(ds.points(), &coeffs), ds),
        loss,
        grad_norm,
        iterations,
    })
}

/// φ′(u) for φ(u) = E[λ·softplus((1−2λ)u) + (1−λ)·softplus((2λ−1)u)].
fn phi_prime(rule: &crate::quadrature::Rule, u: f64) -> f64 {
    rule.iter()
        .map(|(l, w)| {
            let c = 1.0 - 2.0 * l;
            w * (l * c * sigmoid(c * u) - (1.0 - l) * c * sigmoid(-c * u))
        })
        .sum()
}

/// The common margin k(P_f) of the two-point linear Mixup minimizer, found by
/// bisection on φ′. φ′(0) = −E[(1−2λ)²]/2, so a law concentrated at ½ has a
/// flat φ and no unique minimizer.
pub fn estimate_k(dist: &MixingDistribution, tol: f64) -> Result<f64> {
    if !dist.is_symmetric() {
        return Err(Error::Contract(format!(
            "k(P_f) needs a symmetric mixing law, got {}",
            dist.label()
        )));
    }
    let rule = dist.expectation_rule(256);
    let slope0 = phi_prime(&rule, 0.0);
    if -slope0 < tol {
        return Err(Error::Degenerate(format!(
            "φ is flat to within {tol:e} (φ′(0) = {slope0:e}); the minimizer is not unique"
        )));
    }
    let mut hi = 1.0;
    while phi_prime(&rule, hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Degenerate("φ has no finite minimizer".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > tol * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if phi_prime(&rule, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One seed of the Gaussian max-margin experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearTrial {
    pub seed: u64,
    pub is_max_margin: bool,
    /// cos(θ*, θ̂) between the Mixup minimizer and the min-norm interpolator.
    pub cosine: f64,
    /// Mean margin of the Mixup minimizer.
    pub k_mixup: f64,
    /// max |yᵢθ*ᵀxᵢ − k| / k.
    pub margin_residual: f64,
    pub grad_norm: f64,
    pub iters: usize,
}

pub fn run_linear_trial(
    n: usize,
    d: usize,
    dist: &MixingDistribution,
    seed: u64,
    opts: MixupLossOptions,
    max_iters: usize,
    grad_tol: f64,
) -> Result<LinearTrial> {
    let ds = gaussian_binary(n, d, seed)?;
    let (interp, cert) = min_norm_interpolator(&ds)?;
    let out = minimize_mixup_linear(&ds, dist, opts, max_iters, grad_tol)?;
    let margins = out.classifier.margins(&ds)?;
    let k = margins.iter().sum::<f64>() / margins.len() as f64;
    let residual = margins.iter().map(|m| (m - k).abs()).fold(0.0, f64::max) / k;
    Ok(LinearTrial {
        seed,
        is_max_margin: cert.is_max_margin,
        cosine: cosine(&out.classifier.theta, &interp.theta),
        k_mixup: k,
        margin_residual: residual,
        grad_norm: out.grad_norm,
        iters: out.iterations,
    })
}

/// CSV with columns `seed,is_max_margin,cosine,k_mixup,grad_norm,iters`.
pub fn write_trials_csv(trials: &[LinearTrial], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "seed",
        "is_max_margin",
        "cosine",
        "k_mixup",
        "grad_norm",
        "iters",
    ])?;
    for t in trials {
        w.write_record([
            t.seed.to_string(),
            t.is_max_margin.to_string(),
            t.cosine.to_string(),
            t.k_mixup.to_string(),
            t.grad_norm.to_string(),
            t.iters.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_points() -> LabeledDataset {
        LabeledDataset::new("pair", vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1, 2], 2).unwrap()
    }

    #[test]
    fn orthogonal_pair_interpolator() {
        let (clf, cert) = min_norm_interpolator(&two_points()).unwrap();
        assert!((clf.theta[0] - 1.0).abs() < 1e-14 && (clf.theta[1] + 1.0).abs() < 1e-14);
        assert!(cert.is_max_margin && cert.k == 1.0);
    }

    #[test]
    fn dependent_points_are_rejected() {
        let ds = LabeledDataset::new("dep", vec![vec![1.0, 0.0], vec![2.0, 0.0]], vec![1, 2], 2)
            .unwrap();
        assert!(matches!(min_norm_interpolator(&ds), Err(Error::Rank(_))));
    }

    #[test]
    fn loss_at_zero_is_ln2() {
        let ds = gaussian_binary(6, 10, 1).unwrap();
        for same in [true, false] {
            let opts = MixupLossOptions {
                nodes: 32,
                same_class_terms: same,
            };
            for dist in [
                MixingDistribution::uniform(),
                MixingDistribution::beta_symmetric(32.0).unwrap(),
            ] {
                let (l, _) = mixup_linear_loss(&vec![0.0; 10], &ds, &dist, opts).unwrap();
                assert!((l - 2f64.ln()).abs() < 1e-12, "{l}");
            }
        }
        let few = MixupLossOptions {
            nodes: 8,
            same_class_terms: true,
        };
        assert!(
            mixup_linear_loss(&vec![0.0; 10], &ds, &MixingDistribution::uniform(), few).is_err()
        );
    }

    #[test]
    fn pair_gradient_is_symmetric() {
        let ds = two_points();
        let (_, g) = mixup_linear_loss(
            &[0.7, -0.7],
            &ds,
            &MixingDistribution::uniform(),
            MixupLossOptions::default(),
        )
        .unwrap();
        assert!((g[0] + g[1]).abs() < 1e-14, "{g:?}");
    }

    #[test]
    fn gradient_matches_central_differences() {
        let ds = gaussian_binary(6, 9, 3).unwrap();
        let theta: Vec<f64> = (0..9).map(|i| 0.1 * (i as f64 - 4.0)).collect();
        let dist = MixingDistribution::beta_symmetric(2.5).unwrap();
        let opts = MixupLossOptions::default();
        let (_, g) = mixup_linear_loss(&theta, &ds, &dist, opts).unwrap();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..9 {
            let mut p = theta.clone();
            p[i] += h;
            let mut m = theta.clone();
            m[i] -= h;
            let fd = (mixup_linear_loss(&p, &ds, &dist, opts).unwrap().0
                - mixup_linear_loss(&m, &ds, &dist, opts).unwrap().0)
                / (2.0 * h);
            worst = worst.max((fd - g[i]).abs());
        }
        let scale = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        assert!(worst / scale < 1e-6, "{}", worst / scale);
    }

    #[test]
    fn two_point_minimizer_has_margin_k() {
        let ds = two_points();
        let opts = MixupLossOptions {
            nodes: 256,
            same_class_terms: false,
        };
        for dist in [
            MixingDistribution::uniform(),
            MixingDistribution::beta_symmetric(4.0).unwrap(),
        ] {
            let out = minimize_mixup_linear(&ds, &dist, opts, 20_000, 1e-11).unwrap();
            let (u, v) = (out.classifier.theta[0], -out.classifier.theta[1]);
            let k = estimate_k(&dist, 1e-12).unwrap();
            assert!((u - v).abs() <= 1e-6 * k, "{u} {v}");
            assert!((u - k).abs() <= 1e-6 * k, "{u} vs k {k}");
        }
    }

    #[test]
    fn same_class_terms_push_the_margin_out() {
        let ds = two_points();
        let u = MixingDistribution::uniform();
        let with =
            minimize_mixup_linear(&ds, &u, MixupLossOptions::default(), 20_000, 1e-10).unwrap();
        assert!(with.classifier.theta[0] > estimate_k(&u, 1e-12).unwrap());
    }

    #[test]
    fn estimate_k_examples() {
        let k = estimate_k(&MixingDistribution::uniform(), 1e-12).unwrap();
        assert!(k > 0.0);
        let w = 2f64.powi(-20);
        let spike =
            MixingDistribution::tabulated(&[(0.5 - w, 0.0), (0.5, 1.0), (0.5 + w, 0.0)]).unwrap();
        assert!(matches!(
            estimate_k(&spike, 1e-9),
            Err(Error::Degenerate(_))
        ));
        let skew = MixingDistribution::tabulated(&[(0.0, 2.0), (1.0, 0.0)]).unwrap();
        assert!(matches!(estimate_k(&skew, 1e-9), Err(Error::Contract(_))));
    }

    #[test]
    fn minimizer_stays_in_span() {
        let ds = gaussian_binary(6, 12, 8).unwrap();
        let out = minimize_mixup_linear(
            &ds,
            &MixingDistribution::uniform(),
            MixupLossOptions::default(),
            20_000,
            1e-9,
        )
        .unwrap();
        let off = out.classifier.off_span_norm().unwrap();
        assert!(off <= 1e-8 * norm(&out.classifier.theta), "{off}");
    }

    #[test]
    fn trial_csv_layout() {
        let t = run_linear_trial(
            6,
            40,
            &MixingDistribution::uniform(),
            2,
            MixupLossOptions::default(),
            20_000,
            1e-9,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trials_csv(&[t], &mut buf).unwrap();
        assert!(buf.starts_with(b"seed,is_max_margin,cosine,k_mixup,grad_norm,iters\n2,"));
    }
}
