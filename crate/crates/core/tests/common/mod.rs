//! Reference computations for the integration tests. Each one takes a
//! different route from the library (sampling, brute force, plain quadrature)
//! so agreement is evidence rather than repetition.
#![allow(dead_code)]

use mixup_core::datasets::LabeledDataset;
use mixup_core::mixing::MixingDistribution;
use rand::Rng;

/// Monte-Carlo estimate of the ξ tables: draw (s, t, λ) and count mixtures
/// landing in the closed ball. Returns (ξ, ξ_λ, se(ξ), se(ξ_λ)).
pub struct McXi {
    pub xi: Vec<Vec<f64>>,
    pub xi_lambda: Vec<Vec<f64>>,
    pub se_xi: Vec<Vec<f64>>,
    pub se_xi_lambda: Vec<Vec<f64>>,
}

pub fn monte_carlo_xi<R: Rng>(
    ds: &LabeledDataset,
    dist: &MixingDistribution,
    x: &[f64],
    epsilon: f64,
    samples: usize,
    rng: &mut R,
) -> McXi {
    let k = ds.k();
    let m = ds.len();
    let mut hits = vec![vec![0.0; k]; k];
    let mut lam = vec![vec![0.0; k]; k];
    let mut lam2 = vec![vec![0.0; k]; k];
    let eps2 = epsilon * epsilon;
    for _ in 0..samples {
        let s = rng.random_range(0..m);
        let t = rng.random_range(0..m);
        let l = dist.sample(rng);
        let d2: f64 = ds
            .point(s)
            .iter()
            .zip(ds.point(t))
            .zip(x)
            .map(|((a, b), c)| {
                let z = l * a + (1.0 - l) * b - c;
                z * z
            })
            .sum();
        if d2 <= eps2 {
            let (i, j) = (ds.label(s) - 1, ds.label(t) - 1);
            hits[i][j] += 1.0;
            lam[i][j] += l;
            lam2[i][j] += l * l;
        }
    }
    let n = samples as f64;
    let mean = |v: &Vec<Vec<f64>>| {
        v.iter()
            .map(|r| r.iter().map(|c| c / n).collect())
            .collect::<Vec<Vec<f64>>>()
    };
    let xi = mean(&hits);
    let xi_lambda = mean(&lam);
    let second = mean(&lam2);
    let se = |mu: &Vec<Vec<f64>>, sq: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        mu.iter()
            .zip(sq)
            .map(|(r, q)| {
                r.iter()
                    .zip(q)
                    .map(|(m1, m2)| ((m2 - m1 * m1).max(0.0) / n).sqrt())
                    .collect()
            })
            .collect()
    };
    McXi {
        se_xi: se(&xi, &xi),
        se_xi_lambda: se(&xi_lambda, &second),
        xi,
        xi_lambda,
    }
}

/// Class probabilities from an arbitrary ξ table via the general closed form.
pub fn closed_form(xi: &[Vec<f64>], xi_lambda: &[Vec<f64>]) -> Vec<f64> {
    let k = xi.len();
    let c: Vec<f64> = (0..k)
        .map(|i| {
            xi[i][i]
                + (0..k)
                    .filter(|&j| j != i)
                    .map(|j| xi_lambda[i][j] + xi[j][i] - xi_lambda[j][i])
                    .sum::<f64>()
        })
        .collect();
    let total: f64 = c.iter().sum();
    c.iter().map(|v| v / total).collect()
}

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    rec(
        f,
        a,
        b,
        fa,
        fm,
        fb,
        (b - a) / 6.0 * (fa + 4.0 * fm + fb),
        tol,
        50,
    )
}

/// P(λ ≤ x) for Beta(α, α), computed without the incomplete beta function.
///
/// The unnormalized density (4λ(1−λ))^{α−1} stays O(1) for large α. For
/// α < 1 the substitution λ = s² (and symmetrically near 1) removes the
/// endpoint singularity.
pub fn beta_cdf_oracle(alpha: f64, x: f64) -> f64 {
    let dens = |l: f64| (4.0 * l * (1.0 - l)).powf(alpha - 1.0);
    let half_mass = |upper: f64| -> f64 {
        // ∫_0^upper, upper ≤ ½
        if alpha < 1.0 {
            // 2s·(4s²(1−s²))^{α−1} with the s-powers combined so s = 0 is finite
            let g = |s: f64| {
                2.0 * 4f64.powf(alpha - 1.0)
                    * s.powf(2.0 * alpha - 1.0)
                    * (1.0 - s * s).powf(alpha - 1.0)
            };
            adaptive_simpson(&g, 0.0, upper.sqrt(), 1e-14)
        } else {
            adaptive_simpson(&dens, 0.0, upper, 1e-14)
        }
    };
    let total = 2.0 * half_mass(0.5);
    let x = x.clamp(0.0, 1.0);
    if x <= 0.5 {
        half_mass(x) / total
    } else {
        1.0 - half_mass(1.0 - x) / total
    }
}

/// Relative error of an analytic gradient against central differences,
/// measured as max |g − fd| / max |g|.
pub fn finite_difference_error(f: &dyn Fn(&[f64]) -> f64, x: &[f64], grad: &[f64], h: f64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        worst = worst.max(((up - down) / (2.0 * h) - grad[i]).abs());
    }
    let scale = grad.iter().fold(0.0_f64, |a, g| a.max(g.abs()));
    worst / scale.max(f64::MIN_POSITIVE)
}

fn det(m: &[Vec<i64>]) -> i128 {
    let n = m.len();
    if n == 1 {
        return m[0][0] as i128;
    }
    (0..n)
        .map(|c| {
            let minor: Vec<Vec<i64>> = m[1..]
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|&(j, _)| j != c)
                        .map(|(_, &v)| v)
                        .collect()
                })
                .collect();
            let sign = if c % 2 == 0 { 1 } else { -1 };
            sign * m[0][c] as i128 * det(&minor)
        })
        .sum()
}

fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    if n < r {
        return vec![];
    }
    let mut out = subsets(n - 1, r);
    for mut s in subsets(n - 1, r - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Rank as the size of the largest nonzero minor (exponential; small inputs only).
pub fn rank_by_minors(m: &[Vec<i64>]) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    for r in (1..=rows.min(cols)).rev() {
        for rs in subsets(rows, r) {
            for cs in subsets(cols, r) {
                let sub: Vec<Vec<i64>> = rs
                    .iter()
                    .map(|&i| cs.iter().map(|&j| m[i][j]).collect())
                    .collect();
                if det(&sub) != 0 {
                    return r;
                }
            }
        }
    }
    0
}

fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-14 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Hard-margin SVM (no bias) by exhaustive active-set search: for every
/// subset S, the min-norm θ with yᵢθᵀxᵢ = 1 on S is optimal iff its
/// multipliers are nonnegative and every other point has margin ≥ 1.
pub fn hard_margin_oracle(points: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let n = points.len();
    assert!(n <= 12, "exhaustive search is for small n");
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    for size in 1..=n {
        for s in subsets(n, size) {
            let mut g: Vec<Vec<f64>> = s
                .iter()
                .map(|&i| {
                    s.iter()
                        .map(|&j| y[i] * y[j] * dot(&points[i], &points[j]))
                        .collect()
                })
                .collect();
            let mut rhs = vec![1.0; size];
            let Some(alpha) = solve_dense(&mut g, &mut rhs) else {
                continue;
            };
            if alpha.iter().any(|&a| a < -1e-12) {
                continue;
            }
            let mut theta = vec![0.0; points[0].len()];
            for (&i, a) in s.iter().zip(&alpha) {
                for (t, v) in theta.iter_mut().zip(&points[i]) {
                    *t += a * y[i] * v;
                }
            }
            if (0..n).all(|i| y[i] * dot(&theta, &points[i]) >= 1.0 - 1e-9) {
                return Some(theta);
            }
        }
    }
    None
}

/// φ(u) from the definition, by adaptive Simpson against the density.
pub fn phi_reference(dist: &MixingDistribution, u: f64) -> f64 {
    let sp = |z: f64| {
        if z > 0.0 {
            z + (-z).exp().ln_1p()
        } else {
            z.exp().ln_1p()
        }
    };
    let f = |l: f64| {
        dist.density(l) * (l * sp((1.0 - 2.0 * l) * u) + (1.0 - l) * sp((2.0 * l - 1.0) * u))
    };
    adaptive_simpson(&f, 0.0, 1.0, 1e-14)
}

fn phi_prime_reference(dist: &MixingDistribution, u: f64) -> f64 {
    let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
    let f = |l: f64| {
        let c = 1.0 - 2.0 * l;
        dist.density(l) * (l * c * sig(c * u) - (1.0 - l) * c * sig(-c * u))
    };
    adaptive_simpson(&f, 0.0, 1.0, 1e-15)
}

/// Argmin of φ: a dense scan of φ brackets the minimum, then bisection on φ′
/// (both by adaptive Simpson) pins it down.
pub fn k_by_grid_scan(dist: &MixingDistribution) -> f64 {
    let h = 0.01;
    let grid: Vec<f64> = (0..=1000).map(|i| i as f64 * h).collect();
    let best = grid
        .iter()
        .copied()
        .min_by(|a, b| phi_reference(dist, *a).total_cmp(&phi_reference(dist, *b)))
        .unwrap();
    let (mut a, mut b) = ((best - h).max(0.0), best + h);
    while b - a > 1e-12 {
        let mid = 0.5 * (a + b);
        if phi_prime_reference(dist, mid) > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    0.5 * (a + b)
}
