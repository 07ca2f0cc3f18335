//! Derived example values checked against independent reference computations.

mod common;

use common::*;
use mixup_core::assumptions::{check_assumption1, estimate_epsilon};
use mixup_core::datasets::{alternating_line, four_point_cross, gaussian_binary, LabeledDataset};
use mixup_core::linear::{estimate_k, min_norm_interpolator};
use mixup_core::mixing::MixingDistribution;
use mixup_core::oracle::{h_epsilon, xi_table};
use mixup_core::recovery::{integer_rank, mixup_matrix, rank_concat};
use mixup_core::rng::seeded;

#[test]
fn three_point_line_table_agrees_with_sampling() {
    let ds = alternating_line(3, 2).unwrap();
    let u = MixingDistribution::uniform();
    let exact = xi_table(&ds, &u, &[1.0], 0.1).unwrap();
    let mc = monte_carlo_xi(&ds, &u, &[1.0], 0.1, 2_000_000, &mut seeded(100));
    for i in 0..2 {
        for j in 0..2 {
            assert!((exact.xi[i][j] - mc.xi[i][j]).abs() <= 4.0 * mc.se_xi[i][j] + 1e-12);
            assert!(
                (exact.xi_lambda[i][j] - mc.xi_lambda[i][j]).abs()
                    <= 4.0 * mc.se_xi_lambda[i][j] + 1e-12
            );
        }
    }
    let h_mc = closed_form(&mc.xi, &mc.xi_lambda);
    let h = h_epsilon(&ds, &u, &[1.0], 0.1).unwrap();
    assert!(
        (h.get(1) - h_mc[0]).abs() < 1e-3,
        "{} vs {}",
        h.get(1),
        h_mc[0]
    );
    assert!((h.get(1) - 0.1375).abs() < 1e-12);
}

#[test]
fn cross_origin_table_agrees_with_sampling() {
    let ds = four_point_cross();
    let u = MixingDistribution::uniform();
    let exact = xi_table(&ds, &u, &[0.0, 0.0], 0.1).unwrap();
    let mc = monte_carlo_xi(&ds, &u, &[0.0, 0.0], 0.1, 2_000_000, &mut seeded(101));
    assert!((exact.xi[0][0] - 0.0125).abs() < 1e-15 && (exact.xi[1][1] - 0.0125).abs() < 1e-15);
    for i in 0..2 {
        for j in 0..2 {
            assert!((exact.xi[i][j] - mc.xi[i][j]).abs() <= 4.0 * mc.se_xi[i][j] + 1e-12);
        }
    }
    assert_eq!(mc.xi[0][1], 0.0);
    assert_eq!(mc.xi[1][0], 0.0);
}

#[test]
fn beta_cdf_agrees_with_quadrature() {
    for alpha in [0.5, 0.7, 1.0, 2.5, 32.0, 70.0, 1024.0] {
        let d = MixingDistribution::beta_symmetric(alpha).unwrap();
        for x in [0.01, 0.1, 0.3, 0.45, 0.49, 0.5, 0.52, 0.6, 0.9, 0.999] {
            let reference = beta_cdf_oracle(alpha, x);
            assert!(
                (d.cdf(x) - reference).abs() < 1e-9,
                "α={alpha} x={x}: {} vs {reference}",
                d.cdf(x)
            );
        }
    }
}

#[test]
fn interval_moments_agree_with_quadrature() {
    for d in [
        MixingDistribution::uniform(),
        MixingDistribution::beta_symmetric(2.5).unwrap(),
        MixingDistribution::beta_symmetric(32.0).unwrap(),
        MixingDistribution::tabulated(&[(0.0, 1.0), (0.3, 3.0), (0.7, 0.5), (1.0, 2.0)]).unwrap(),
    ] {
        for (a, b) in [(0.0, 1.0), (0.1, 0.4), (0.45, 0.55), (0.6, 0.95)] {
            let mass = adaptive_simpson(&|l| d.density(l), a, b, 1e-14);
            let moment = adaptive_simpson(&|l| l * d.density(l), a, b, 1e-14);
            assert!(
                (d.interval_mass(a, b) - mass).abs() < 1e-9,
                "{} [{a},{b}]",
                d.label()
            );
            assert!(
                (d.interval_first_moment(a, b) - moment).abs() < 1e-9,
                "{} [{a},{b}]",
                d.label()
            );
        }
    }
}

#[test]
fn concentration_above_threshold() {
    let mass = beta_cdf_oracle(70.0, 0.6) - beta_cdf_oracle(70.0, 0.4);
    assert!(mass > 0.5);
    let d = MixingDistribution::beta_symmetric(70.0).unwrap();
    assert!((d.interval_mass(0.4, 0.6) - mass).abs() < 1e-9);
}

#[test]
fn bareiss_rank_matches_minor_enumeration() {
    let a = mixup_matrix(4).to_dense();
    assert_eq!(integer_rank(&a).unwrap(), rank_by_minors(&a));
    assert_eq!(rank_by_minors(&a), 4);
    // every row permutation for m = 4
    let mut perm: Vec<usize> = (0..6).collect();
    let mut count = 0;
    loop {
        let stacked: Vec<Vec<i64>> = (0..6)
            .map(|r| a[r].iter().chain(&a[perm[r]]).copied().collect())
            .collect();
        assert_eq!(
            rank_concat(4, &perm).unwrap(),
            rank_by_minors(&stacked),
            "{perm:?}"
        );
        count += 1;
        // next lexicographic permutation
        let Some(i) = (0..5).rev().find(|&i| perm[i] < perm[i + 1]) else {
            break;
        };
        let j = (i + 1..6).rev().find(|&j| perm[j] > perm[i]).unwrap();
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
    assert_eq!(count, 720);
}

#[test]
fn threshold_case_by_exact_elimination() {
    let mut p: Vec<usize> = (0..21).collect();
    p.swap(0, 1);
    let a = mixup_matrix(7).to_dense();
    let stacked: Vec<Vec<i64>> = (0..21)
        .map(|r| a[r].iter().chain(&a[p[r]]).copied().collect())
        .collect();
    let rank = rank_concat(7, &p).unwrap();
    assert!(rank >= 8);
    // independent check: 8 linearly independent rows by floating elimination on the transpose
    assert_eq!(rank, float_rank(&stacked));
}

fn float_rank(m: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .map(|r| r.iter().map(|&v| v as f64).collect())
        .collect();
    let (rows, cols) = (a.len(), a[0].len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())) else {
            break;
        };
        if a[p][c].abs() < 1e-9 {
            continue;
        }
        a.swap(rank, p);
        for r in 0..rows {
            if r != rank {
                let f = a[r][c] / a[rank][c];
                for k in c..cols {
                    a[r][k] -= f * a[rank][k];
                }
            }
        }
        rank += 1;
    }
    rank
}

#[test]
fn interpolator_matches_hard_margin_when_certified() {
    let mut certified = 0;
    for seed in 0..20 {
        let ds = gaussian_binary(8, 60, seed).unwrap();
        let (clf, cert) = min_norm_interpolator(&ds).unwrap();
        let y = ds.signed_labels().unwrap();
        let oracle = hard_margin_oracle(ds.points(), &y).expect("separable");
        let diff = clf
            .theta
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if cert.is_max_margin {
            certified += 1;
            assert!(diff < 1e-8, "seed {seed}: {diff}");
        } else {
            assert!(diff > 1e-6, "seed {seed}: uncertified but equal");
        }
    }
    assert!(certified > 10);
}

#[test]
fn interpolator_sign_violation_on_non_support_point() {
    // the second positive point lies far out along the first: not a support vector
    let ds = LabeledDataset::new(
        "skewed",
        vec![
            vec![1.0, 0.0, 0.0],
            vec![3.0, 0.0, 0.1],
            vec![0.0, 1.0, 0.0],
        ],
        vec![1, 1, 2],
        2,
    )
    .unwrap();
    let (clf, cert) = min_norm_interpolator(&ds).unwrap();
    assert!(!cert.is_max_margin);
    let y = ds.signed_labels().unwrap();
    assert!(cert.dual_coeffs.iter().zip(&y).any(|(b, y)| b * y <= 0.0));
    let oracle = hard_margin_oracle(ds.points(), &y).unwrap();
    let diff = clf
        .theta
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(diff > 1e-3);
}

#[test]
fn k_matches_grid_scan() {
    for d in [
        MixingDistribution::uniform(),
        MixingDistribution::beta_symmetric(2.0).unwrap(),
        MixingDistribution::beta_symmetric(32.0).unwrap(),
    ] {
        let k = estimate_k(&d, 1e-13).unwrap();
        let reference = k_by_grid_scan(&d);
        assert!(
            (k - reference).abs() < 1e-6,
            "{}: {k} vs {reference}",
            d.label()
        );
        assert!(k > 0.0);
    }
}

#[test]
fn line_epsilon_estimate_is_near_zero() {
    let ds = alternating_line(9, 3).unwrap();
    // brute force over cross-class pairs and a dense λ grid
    let mut best = f64::INFINITY;
    for s in 0..9 {
        for t in 0..9 {
            if ds.label(s) == ds.label(t) {
                continue;
            }
            for step in 0..=1000 {
                let l = step as f64 / 1000.0;
                let z = l * ds.point(s)[0] + (1.0 - l) * ds.point(t)[0];
                for r in 0..9 {
                    if ds.label(r) != ds.label(s) && ds.label(r) != ds.label(t) {
                        best = best.min((z - ds.point(r)[0]).abs());
                    }
                }
            }
        }
    }
    assert_eq!(best, 0.0);
    let est = estimate_epsilon(&ds, &MixingDistribution::uniform(), 10_000, &ds, 7).unwrap();
    assert!(est.min_distance < 0.01 && est.min_distance >= best);
}

#[test]
fn collinearity_matches_betweenness_on_integer_lines() {
    for (m, k) in [(3, 2), (5, 2), (7, 3), (9, 3)] {
        let ds = alternating_line(m, k).unwrap();
        let mut expected = Vec::new();
        for x in 0..m {
            for v in 0..m {
                if ds.label(v) == ds.label(x) {
                    continue;
                }
                for u in 0..m {
                    // x strictly between u and v on the integer line
                    if u != v && (u.min(v) < x && x < u.max(v)) {
                        expected.push((x, u, v));
                    }
                }
            }
        }
        let mut got: Vec<(usize, usize, usize)> = check_assumption1(&ds, 1e-9)
            .iter()
            .map(|c| (c.x_index, c.u_index, c.v_index))
            .collect();
        got.sort();
        expected.sort();
        assert_eq!(got, expected, "m={m} k={k}");
    }
}
