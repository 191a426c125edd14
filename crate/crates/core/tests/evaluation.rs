use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use volest::evaluate::{
    encompassing_regression, gof_test, gof_test_with, mse, unbiasedness_test, DeltaHat, GofConfig, Hypothesis,
    Term,
};
use volest::stats::{chi2_sf, design_with_intercept, ols_fit};
use volest::ErrorClass;

fn normals(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn panel(seed: u64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let z = normals(seed, 2 * n);
    let est: Vec<f64> = z[..n].iter().map(|v| 0.16 + 0.04 * v).collect();
    let real: Vec<f64> = est.iter().zip(&z[n..]).map(|(e, v)| 0.03 + 0.7 * e + 0.03 * v).collect();
    (real, est)
}

/// Textbook OLS by the normal equations with explicit 2x2 or 3x3 inverses.
fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let k = x[0].len();
    let mut a = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    for (row, yi) in x.iter().zip(y) {
        for i in 0..k {
            b[i] += row[i] * yi;
            for j in 0..k {
                a[i][j] += row[i] * row[j];
            }
        }
    }
    match k {
        2 => {
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            vec![
                (a[1][1] * b[0] - a[0][1] * b[1]) / det,
                (a[0][0] * b[1] - a[1][0] * b[0]) / det,
            ]
        }
        3 => {
            // Cramer's rule
            let det3 = |m: &[Vec<f64>]| {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            };
            let d = det3(&a);
            (0..3)
                .map(|c| {
                    let mut m = a.clone();
                    for r in 0..3 {
                        m[r][c] = b[r];
                    }
                    det3(&m) / d
                })
                .collect()
        }
        _ => unreachable!(),
    }
}

#[test]
fn ols_matches_normal_equations() {
    for d in 0..100u64 {
        let n = 8 + (d as usize % 20);
        let k = 1 + (d as usize % 2);
        let z = normals(d, n * (k + 1));
        let cols: Vec<&[f64]> = (0..k).map(|j| &z[j * n..(j + 1) * n]).collect();
        let y: Vec<f64> = (0..n).map(|i| 1.0 + 2.0 * cols[0][i] + z[k * n + i]).collect();
        let fit = ols_fit(&design_with_intercept(&cols).unwrap(), &y).unwrap();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| std::iter::once(1.0).chain(cols.iter().map(|c| c[i])).collect())
            .collect();
        for (a, b) in fit.coefficients.iter().zip(normal_equations(&rows, &y)) {
            assert!((a - b).abs() < 1e-10, "design {d}: {a} vs {b}");
        }
        let rss: f64 = fit.residuals.iter().map(|e| e * e).sum();
        assert!((rss - fit.ssr).abs() < 1e-12 * rss.max(1.0));
    }
}

#[test]
fn transform_identity() {
    for seed in 0..20 {
        let (real, est) = panel(seed, 150);
        let direct = ols_fit(&design_with_intercept(&[&est]).unwrap(), &real).unwrap();
        let u = unbiasedness_test(&real, &est).unwrap();
        assert!((direct.coefficients[1] - u.b - 1.0).abs() < 1e-10);
        assert!((direct.coefficients[0] - u.a).abs() < 1e-10);
        assert_eq!(u.n, 150);
        assert_eq!(u.ols.df_resid, 148);
        // t² = F on (1, n − 2)
        assert!((u.ols.t_stats[1].powi(2) - u.f_stat).abs() < 1e-8 * u.f_stat.max(1.0));
    }
}

#[test]
fn unbiased_estimator_is_not_rejected_often() {
    // realized = estimate + noise: a = b = 0 holds, so the joint test is
    // exact and rejects about 5% of the time.
    let mut rejections = 0;
    for seed in 0..200 {
        let z = normals(1000 + seed, 240);
        let est: Vec<f64> = z[..120].iter().map(|v| 0.15 + 0.03 * v).collect();
        let real: Vec<f64> = est.iter().zip(&z[120..]).map(|(e, v)| e + 0.02 * v).collect();
        if unbiasedness_test(&real, &est).unwrap().p_joint < 0.05 {
            rejections += 1;
        }
    }
    assert!((3..=20).contains(&rejections), "{rejections}");
}

#[test]
fn constant_estimate_is_degenerate() {
    let real = vec![0.1, 0.12, 0.11, 0.13];
    let err = unbiasedness_test(&real, &[0.1; 4]).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Numerical);
}

#[test]
fn freeing_the_intercept_recovers_the_overall_f() {
    let z = normals(5, 300);
    let x1: Vec<f64> = z[..100].iter().map(|v| 0.15 + 0.03 * v).collect();
    let x2: Vec<f64> = z[100..200].iter().map(|v| 0.18 + 0.02 * v).collect();
    let y: Vec<f64> = (0..100).map(|i| 0.02 + 0.3 * x1[i] + 0.5 * x2[i] + 0.01 * z[200 + i]).collect();
    let h = Hypothesis {
        pins: vec![(Term::Slope(0), 0.0), (Term::Slope(1), 0.0)],
    };
    let r = encompassing_regression(&y, &[("a", &x1), ("b", &x2)], &h).unwrap();
    assert!((r.test.f_stat - r.ols.f_stat).abs() < 1e-8 * r.ols.f_stat);
    assert!((r.test.p_value - r.ols.f_p_value).abs() < 1e-12);
    assert_eq!((r.test.q, r.test.df_resid), (2, 97));
}

#[test]
fn encompassing_null_holds_exactly() {
    let z = normals(9, 100);
    let x1: Vec<f64> = z[..50].iter().map(|v| 0.15 + 0.03 * v).collect();
    let x2: Vec<f64> = z[50..].iter().map(|v| 0.2 + 0.03 * v).collect();
    // y equals x2, so the restricted model fits perfectly
    let r = encompassing_regression(&x2, &[("a", &x1), ("b", &x2)], &Hypothesis::encompassing(2, 1)).unwrap();
    assert_eq!(r.test.f_stat, 0.0);
    assert_eq!(r.test.p_value, 1.0);
    assert_eq!(r.test.q, 3);
}

#[test]
fn collinear_estimators_are_named() {
    let x1: Vec<f64> = (0..40).map(|i| 0.1 + 0.001 * i as f64).collect();
    let x2: Vec<f64> = x1.iter().map(|v| 2.0 * v).collect();
    let y: Vec<f64> = x1.iter().map(|v| v + 0.01).collect();
    let err = encompassing_regression(&y, &[("hsv", &x1), ("garch", &x2)], &Hypothesis::encompassing(2, 1))
        .unwrap_err()
        .to_string();
    assert!(err.contains("hsv") && err.contains("garch"), "{err}");
}

#[test]
fn gof_definition() {
    let (real, est) = panel(3, 180);
    let g = gof_test(&est, &real).unwrap();
    let n = 180.0;
    let m = est.iter().zip(&real).map(|(e, r)| (e - r).powi(2)).sum::<f64>() / n;
    let mean = est.iter().sum::<f64>() / n;
    let d2 = est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((g.mse - m).abs() < 1e-15);
    assert!((g.delta_hat_sq - d2).abs() < 1e-15);
    assert!((g.statistic - n * m / d2).abs() < 1e-9);
    assert!((g.p_value - chi2_sf(n * m / d2, n).unwrap()).abs() < 1e-15);

    let alt = gof_test_with(
        &est,
        &real,
        &GofConfig {
            delta_hat: DeltaHat::AroundRealized,
            ..GofConfig::default()
        },
    )
    .unwrap();
    assert!((alt.delta_hat_sq - m).abs() < 1e-15);
    assert!((alt.statistic - n).abs() < 1e-9);
}

#[test]
fn gof_perfect_and_short() {
    let (_, est) = panel(4, 60);
    let g = gof_test(&est, &est).unwrap();
    assert_eq!((g.statistic, g.p_value), (0.0, 1.0));
    let err = gof_test(&est[..20], &est[..20]).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Data);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mse_is_permutation_invariant(seed in 0u64..10_000, rot in 1usize..50) {
        let (real, est) = panel(seed, 50);
        let mut idx: Vec<usize> = (0..50).collect();
        idx.rotate_left(rot);
        idx.swap(0, 49 - rot % 50);
        let pr: Vec<f64> = idx.iter().map(|&i| real[i]).collect();
        let pe: Vec<f64> = idx.iter().map(|&i| est[i]).collect();
        let (a, b) = (mse(&est, &real).unwrap(), mse(&pe, &pr).unwrap());
        prop_assert!((a - b).abs() <= 1e-15 * a);
    }

    #[test]
    fn gof_is_shift_invariant(seed in 0u64..10_000, c in -0.5f64..0.5) {
        let (real, est) = panel(seed, 60);
        let g = gof_test(&est, &real).unwrap();
        let sr: Vec<f64> = real.iter().map(|v| v + c).collect();
        let se: Vec<f64> = est.iter().map(|v| v + c).collect();
        let h = gof_test(&se, &sr).unwrap();
        prop_assert!((g.statistic - h.statistic).abs() <= 1e-8 * g.statistic);
    }

    #[test]
    fn unbiasedness_slope_shift(seed in 0u64..10_000, scale in 0.5f64..2.0) {
        // Scaling both series leaves b and every test statistic unchanged.
        let (real, est) = panel(seed, 80);
        let u = unbiasedness_test(&real, &est).unwrap();
        let sr: Vec<f64> = real.iter().map(|v| v * scale).collect();
        let se: Vec<f64> = est.iter().map(|v| v * scale).collect();
        let v = unbiasedness_test(&sr, &se).unwrap();
        prop_assert!((u.b - v.b).abs() < 1e-10);
        prop_assert!((u.a * scale - v.a).abs() < 1e-10);
        prop_assert!((u.f_stat - v.f_stat).abs() <= 1e-8 * u.f_stat.max(1.0));
    }
}
