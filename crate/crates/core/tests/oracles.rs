//! Library quantities checked against independently computed references.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta, Continuous};

use dynclust::distributions::special::logistic;
use dynclust::distributions::stirling_gamma::{expected_clusters_given_alpha, ln_rising_factorial};
use dynclust::distributions::{
    logistic_beta_density, pg_mean, pg_variance, polya_mean, sample_polya, sample_polya_gamma, Ar1Kernel,
};

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

// PG(1, c) as an infinite weighted sum of Exp(1) variables.
fn pg1_series_moments(c: f64) -> (f64, f64) {
    let two_pi_sq = 2.0 * std::f64::consts::PI.powi(2);
    let shift = c * c / (4.0 * std::f64::consts::PI.powi(2));
    let (mut m, mut v) = (0.0, 0.0);
    for k in 1..2_000_000u64 {
        let d = (k as f64 - 0.5).powi(2) + shift;
        m += 1.0 / d;
        v += 1.0 / (d * d);
    }
    (m / two_pi_sq, v / (two_pi_sq * two_pi_sq))
}

#[test]
fn pg_moments_match_series() {
    for &c in &[0.0, 0.4, 2.5, 9.0] {
        let (m, v) = pg1_series_moments(c);
        assert!((pg_mean(1.0, c) - m).abs() < 1e-6 * m.max(1e-3), "mean c={c}");
        assert!((pg_variance(1.0, c) - v).abs() < 1e-6 * v.max(1e-4), "var c={c}");
        assert!((pg_mean(3.0, c) - 3.0 * m).abs() < 3e-6 * m.max(1e-3));
    }
}

#[test]
fn pg_draws_match_series_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for &(b, c) in &[(1u32, 0.0), (1, 1.3), (4, 3.0), (250, 0.7)] {
        let n = 40_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_polya_gamma(b, c, 170, &mut rng).unwrap()).collect();
        let (m, v) = mean_var(&xs);
        let (m1, v1) = pg1_series_moments(c);
        let (em, ev) = (b as f64 * m1, b as f64 * v1);
        let se = (ev / n as f64).sqrt();
        assert!((m - em).abs() < 5.0 * se, "PG({b}, {c}) mean {m} vs {em}");
        assert!((v / ev - 1.0).abs() < 0.06, "PG({b}, {c}) var {v} vs {ev}");
    }
}

// Partial sum of the Pólya weights plus an integral bound for the tail.
fn polya_series_mean(a: f64, b: f64) -> f64 {
    let k_max = 1_000_000;
    let head: f64 = (0..k_max).map(|k| 2.0 / ((a + k as f64) * (b + k as f64))).sum();
    head + 2.0 / (k_max as f64 + 0.5 * (a + b) - 0.5)
}

#[test]
fn polya_mean_matches_series() {
    for &(a, b) in &[(1.0, 1.0), (0.5, 2.0), (3.0, 0.2), (7.5, 7.5)] {
        let s = polya_series_mean(a, b);
        assert!((polya_mean(a, b) - s).abs() < 1e-8 * s, "({a}, {b}): {} vs {s}", polya_mean(a, b));
    }
}

#[test]
fn polya_draws_have_series_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (a, b) = (1.0, 2.0);
    let n = 50_000;
    let xs: Vec<f64> = (0..n).map(|_| sample_polya(a, b, &mut rng).unwrap()).collect();
    let (m, v) = mean_var(&xs);
    let var: f64 = (0..1_000_000).map(|k| 4.0 / ((a + k as f64) * (b + k as f64)).powi(2)).sum();
    let mean = polya_series_mean(a, b);
    assert!((m - mean).abs() < 5.0 * (var / n as f64).sqrt(), "{m} vs {mean}");
    assert!((v / var - 1.0).abs() < 0.05, "{v} vs {var}");
}

#[test]
fn logistic_beta_is_logit_of_beta() {
    for &(a, b) in &[(1.0, 2.0), (0.6, 0.6), (4.0, 1.5)] {
        let beta = Beta::new(a, b).unwrap();
        for &e in &[-6.0, -1.2, 0.0, 0.3, 2.8] {
            let u = logistic(e);
            let want = beta.pdf(u) * u * (1.0 - u);
            let got = logistic_beta_density(e, a, b).unwrap();
            assert!((got - want).abs() < 1e-12 * want.max(1.0), "({a}, {b}) at {e}: {got} vs {want}");
        }
    }
}

#[test]
fn rising_factorial_and_expected_clusters_by_direct_sums() {
    for &alpha in &[0.01, 0.7, 3.0, 150.0, 2.0e5] {
        for &m in &[1u64, 4, 37, 300, 5000] {
            let lr: f64 = (0..m).map(|i| (alpha + i as f64).ln()).sum();
            let ek: f64 = (0..m).map(|i| alpha / (alpha + i as f64)).sum();
            assert!((ln_rising_factorial(alpha, m) - lr).abs() < 1e-9 * lr.abs().max(1.0), "lr a={alpha} m={m}");
            assert!((expected_clusters_given_alpha(alpha, m) - ek).abs() < 1e-9 * ek, "ek a={alpha} m={m}");
        }
    }
}

#[test]
fn ar1_precision_and_log_det_agree_with_dense_algebra() {
    for &psi in &[-0.8, 0.0, 0.45, 0.97] {
        let k = Ar1Kernel::new(psi, 7).unwrap();
        let r = k.correlation();
        let prod = k.precision().to_dense() * &r;
        let eye = nalgebra::DMatrix::<f64>::identity(7, 7);
        assert!((prod - eye).abs().max() < 1e-9, "psi {psi}");
        let dense = r.clone().lu().determinant().ln();
        assert!((k.log_det() - dense).abs() < 1e-9, "psi {psi}");
    }
}
