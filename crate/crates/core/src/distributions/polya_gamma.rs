//! Pólya-gamma PG(b, c) draws for integer `b`.
//!
//! PG(1, c) uses Devroye's alternating-series accept/reject sampler for
//! `J*(1, |c|/2)`, with `PG(1, c) = J*(1, |c|/2) / 4`. PG(b, c) for `b` up to
//! the exact threshold is the sum of `b` independent PG(1, c) draws; above it,
//! a normal with the exact PG mean and variance is used.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use super::special::ln_std_normal_cdf;
use crate::error::{Error, Result};

/// Default largest count drawn by exact summation.
pub const DEFAULT_EXACT_THRESHOLD: u32 = 170;

const TRUNC: f64 = 0.64;
const TRUNC_RECIP: f64 = 1.0 / 0.64;

/// `E[PG(b, c)] = b / (2c) tanh(c/2)`, `b/4` at `c = 0`.
pub fn pg_mean(b: f64, c: f64) -> f64 {
    let c = c.abs();
    if c < 1e-6 {
        b * (0.25 - c * c / 48.0)
    } else {
        b / (2.0 * c) * (0.5 * c).tanh()
    }
}

/// `Var[PG(b, c)] = b (sinh c - c) / (4 c^3 cosh^2(c/2))`, `b/24` at `c = 0`.
pub fn pg_variance(b: f64, c: f64) -> f64 {
    let c = c.abs();
    if c < 1e-3 {
        b * (1.0 / 24.0 - c * c / 120.0)
    } else {
        let ch = (0.5 * c).cosh();
        b * (c.sinh() - c) / (4.0 * c.powi(3) * ch * ch)
    }
}

/// Draw from PG(count, tilt). `exact_threshold` bounds the exact summation.
pub fn sample_polya_gamma<R: Rng + ?Sized>(count: u32, tilt: f64, exact_threshold: u32, rng: &mut R) -> Result<f64> {
    if count == 0 {
        return Err(Error::param("Pólya-gamma count must be at least 1"));
    }
    if !tilt.is_finite() {
        return Err(Error::param(format!("Pólya-gamma tilt must be finite, got {tilt}")));
    }
    if count <= exact_threshold {
        Ok((0..count).map(|_| pg1(tilt, rng)).sum())
    } else {
        let b = count as f64;
        let mean = pg_mean(b, tilt);
        let sd = pg_variance(b, tilt).sqrt();
        let z: f64 = rng.sample(StandardNormal);
        Ok((mean + sd * z).max(mean * 1e-6))
    }
}

/// One PG(1, c) draw.
pub fn pg1<R: Rng + ?Sized>(c: f64, rng: &mut R) -> f64 {
    let z = 0.5 * c.abs();
    let fz = 0.125 * PI * PI + 0.5 * z * z;
    let p_texp = mass_texpon(z, fz);
    loop {
        let x = if rng.random::<f64>() < p_texp {
            let e: f64 = rng.sample(Exp1);
            TRUNC + e / fz
        } else {
            truncated_inverse_gaussian(z, rng)
        };
        let mut s = series_term(0, x);
        let y = rng.random::<f64>() * s;
        let mut n = 0usize;
        loop {
            n += 1;
            if n % 2 == 1 {
                s -= series_term(n, x);
                if y <= s {
                    return 0.25 * x;
                }
            } else {
                s += series_term(n, x);
                if y > s {
                    break;
                }
            }
        }
    }
}

/// Probability of the truncated-exponential branch of the proposal.
fn mass_texpon(z: f64, fz: f64) -> f64 {
    let t = TRUNC;
    let b = (1.0 / t).sqrt() * (t * z - 1.0);
    let a = -(1.0 / t).sqrt() * (t * z + 1.0);
    let x0 = fz.ln() + fz * t;
    let xb = x0 - z + ln_std_normal_cdf(b);
    let xa = x0 + z + ln_std_normal_cdf(a);
    let q_over_p = 4.0 / PI * (xb.exp() + xa.exp());
    1.0 / (1.0 + q_over_p)
}

/// Inverse-Gaussian(1/z, 1) truncated to `(0, TRUNC)`.
fn truncated_inverse_gaussian<R: Rng + ?Sized>(z: f64, rng: &mut R) -> f64 {
    let t = TRUNC;
    if TRUNC_RECIP > z {
        // mean above the truncation point: propose from the z = 0 law
        loop {
            let mut e1: f64;
            let mut e2: f64;
            loop {
                e1 = rng.sample(Exp1);
                e2 = rng.sample(Exp1);
                if e1 * e1 <= 2.0 * e2 / t {
                    break;
                }
            }
            let x = 1.0 + e1 * t;
            let x = t / (x * x);
            let accept = (-0.5 * z * z * x).exp();
            if rng.random::<f64>() <= accept {
                return x;
            }
        }
    } else {
        let mu = 1.0 / z;
        loop {
            let n: f64 = rng.sample(StandardNormal);
            let y = n * n;
            let mu_y = mu * y;
            let mut x = mu + 0.5 * mu * mu_y - 0.5 * mu * (4.0 * mu_y + mu_y * mu_y).sqrt();
            if rng.random::<f64>() > mu / (mu + x) {
                x = mu * mu / x;
            }
            if x < t {
                return x;
            }
        }
    }
}

/// n-th coefficient of the alternating series for the J*(1, 0) density.
fn series_term(n: usize, x: f64) -> f64 {
    let k = (n as f64 + 0.5) * PI;
    if x > TRUNC {
        k * (-0.5 * k * k * x).exp()
    } else if x > 0.0 {
        let h = n as f64 + 0.5;
        (-1.5 * ((0.5 * PI).ln() + x.ln()) + k.ln() - 2.0 * h * h / x).exp()
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn empirical_mean(count: u32, tilt: f64, n: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| sample_polya_gamma(count, tilt, DEFAULT_EXACT_THRESHOLD, &mut rng).unwrap()).sum::<f64>()
            / n as f64
    }

    #[test]
    fn mean_at_zero_tilt() {
        let m = empirical_mean(1, 0.0, 100_000, 1);
        assert!((m - 0.25).abs() < 0.005, "{m}");
    }

    #[test]
    fn mean_identity_count_four_tilt_two() {
        let target = 4.0 / 4.0 * 1f64.tanh();
        assert!((pg_mean(4.0, 2.0) - target).abs() < 1e-14);
        let m = empirical_mean(4, 2.0, 100_000, 2);
        assert!((m / target - 1.0).abs() < 0.02, "{m} vs {target}");
    }

    #[test]
    fn mean_identity_over_tilts() {
        for (i, &c) in [-3.0, 0.0, 0.5, 4.0].iter().enumerate() {
            let m = empirical_mean(1, c, 100_000, 10 + i as u64);
            let target = pg_mean(1.0, c);
            assert!((m / target - 1.0).abs() < 0.02, "tilt {c}: {m} vs {target}");
        }
    }

    #[test]
    fn variance_series_limit_is_continuous() {
        let near = pg_variance(1.0, 1.001e-3);
        let at = pg_variance(1.0, 0.999e-3);
        assert!((near - at).abs() < 1e-8);
        assert!((pg_mean(1.0, 1e-6) - pg_mean(1.0, 1.0001e-6)).abs() < 1e-12);
    }

    #[test]
    fn zero_count_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_polya_gamma(0, 1.0, 170, &mut rng).is_err());
    }

    #[test]
    fn normal_branch_matches_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_polya_gamma(500, 1.5, 170, &mut rng).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        assert!((mean / pg_mean(500.0, 1.5) - 1.0).abs() < 0.005);
        assert!(draws.iter().all(|&v| v > 0.0));
    }
}
