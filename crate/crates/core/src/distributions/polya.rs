//! Pólya(a, b) mixing law of the logistic-beta variance-mean mixture.
//!
//! Matching the moment generating function of the logistic-beta law,
//! `Γ(a+s)Γ(b-s) / (Γ(a)Γ(b))`, against that of `N(λ(a-b)/2, λ)` mixed over λ
//! gives the series representation
//!
//! ```text
//! λ = Σ_{k≥0} 2 E_k / ((a+k)(b+k)),   E_k iid Exp(1).
//! ```
//!
//! The sampler keeps the first `K` terms and replaces the remainder by its
//! expectation. `K` is chosen so that the standard deviation of the discarded
//! part, which is the only error left after the mean correction, is below
//! `TAIL_SD_TOL` times the mean of λ.

use rand::Rng;
use rand_distr::Exp1;

use super::special::{digamma, trigamma};
use crate::error::{Error, Result};

const TAIL_SD_TOL: f64 = 2e-4;
const MIN_TERMS: usize = 16;
const MAX_TERMS: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polya {
    a: f64,
    b: f64,
    terms: usize,
    tail_mean: f64,
}

/// `E[λ] = 2 (ψ(a) - ψ(b)) / (a - b)`, with the `a = b` limit `2 ψ'(a)`.
pub fn polya_mean(a: f64, b: f64) -> f64 {
    if (a - b).abs() < 1e-7 * (a + b) {
        2.0 * trigamma(0.5 * (a + b))
    } else {
        2.0 * (digamma(a) - digamma(b)) / (a - b)
    }
}

#[inline]
fn weight(a: f64, b: f64, k: usize) -> f64 {
    let k = k as f64;
    2.0 / ((a + k) * (b + k))
}

impl Polya {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
            return Err(Error::param(format!("Pólya shapes must be positive and finite, got ({a}, {b})")));
        }
        let mean = polya_mean(a, b);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        // Var(tail from K) = Σ_{k≥K} 4/((a+k)(b+k))^2 <= 4 / ((hi+K)^2 (lo+K-1)).
        let target = (TAIL_SD_TOL * mean).powi(2);
        let mut terms = MIN_TERMS;
        while terms < MAX_TERMS {
            let kf = terms as f64;
            let bound = 4.0 / ((hi + kf).powi(2) * (lo + kf - 1.0));
            if bound <= target {
                break;
            }
            terms = (terms * 5 / 4).max(terms + 1);
        }
        let terms = terms.min(MAX_TERMS);
        let head: f64 = (0..terms).map(|k| weight(a, b, k)).sum();
        let tail_mean = (mean - head).max(0.0);
        Ok(Self { a, b, terms, tail_mean })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn mean(&self) -> f64 {
        polya_mean(self.a, self.b)
    }

    /// Number of exponential terms drawn explicitly.
    pub fn terms(&self) -> usize {
        self.terms
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut acc = self.tail_mean;
        for k in 0..self.terms {
            let e: f64 = rng.sample(Exp1);
            acc += weight(self.a, self.b, k) * e;
        }
        acc
    }
}

/// One draw from Pólya(a, b).
pub fn sample_polya<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    Ok(Polya::new(a, b)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mean_matches_series() {
        for &(a, b) in &[(1.0, 2.0), (0.7, 0.7), (3.0, 1.5)] {
            let series: f64 = (0..2_000_000).map(|k| weight(a, b, k)).sum();
            // remainder of the series is about 2/K
            assert!((polya_mean(a, b) - series - 1e-6).abs() < 1e-8, "{a} {b}");
        }
    }

    #[test]
    fn rejects_nonpositive_shapes() {
        assert!(Polya::new(0.0, 1.0).is_err());
        assert!(Polya::new(1.0, -2.0).is_err());
        assert!(Polya::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn draws_are_positive_for_many_seeds() {
        let p = Polya::new(1.0, 2.0).unwrap();
        for seed in 0..10_000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert!(p.sample(&mut rng) > 0.0);
        }
    }

    #[test]
    fn standard_logistic_variance_from_unit_shapes() {
        // a = b = 1: the mixture is the standard logistic law, variance π²/3.
        let p = Polya::new(1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let lam = p.sample(&mut rng);
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            let eps = lam.sqrt() * z;
            sum += eps;
            sum2 += eps * eps;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        let target = std::f64::consts::PI.powi(2) / 3.0;
        assert!((var / target - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn deterministic_given_seed() {
        let p = Polya::new(1.3, 0.4).unwrap();
        let a = p.sample(&mut ChaCha8Rng::seed_from_u64(5));
        let b = p.sample(&mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
