//! Univariate and multivariate logistic-beta laws.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use super::ar1::Ar1Kernel;
use super::polya::Polya;
use super::special::{ln_beta, ln_logistic};
use crate::error::{Error, Result};

/// Shapes and AR(1) correlation of a T-dimensional logistic-beta vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticBetaParams {
    pub a_eps: f64,
    pub b_eps: f64,
    pub correlation: Ar1Kernel,
}

impl LogisticBetaParams {
    pub fn new(a_eps: f64, b_eps: f64, correlation: Ar1Kernel) -> Result<Self> {
        check_shapes(a_eps, b_eps)?;
        Ok(Self { a_eps, b_eps, correlation })
    }

    /// One draw `ε | λ ~ N(λ(a-b)/2 · 1, λ Ψ)`, `λ ~ Pólya(a, b)`.
    /// Returns the mixing variable alongside the path.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, Vec<f64>)> {
        let lambda = Polya::new(self.a_eps, self.b_eps)?.sample(rng);
        let path = sample_path_given_lambda(lambda, self.a_eps - self.b_eps, self.correlation, rng);
        Ok((lambda, path))
    }
}

fn check_shapes(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::param(format!("logistic-beta shapes must be positive, got ({a}, {b})")));
    }
    Ok(())
}

/// Draw `ε ~ N(λ·diff/2 · 1, λ Ψ)` by running the AR(1) recursion directly.
pub fn sample_path_given_lambda<R: Rng + ?Sized>(
    lambda: f64,
    shape_diff: f64,
    kernel: Ar1Kernel,
    rng: &mut R,
) -> Vec<f64> {
    let psi = kernel.psi();
    let mean = 0.5 * lambda * shape_diff;
    let sd = lambda.sqrt();
    let innov = (1.0 - psi * psi).sqrt();
    let mut prev = rng.sample::<f64, _>(StandardNormal);
    let mut out = Vec::with_capacity(kernel.dim());
    out.push(mean + sd * prev);
    for _ in 1..kernel.dim() {
        let z: f64 = rng.sample(StandardNormal);
        prev = psi * prev + innov * z;
        out.push(mean + sd * prev);
    }
    out
}

/// Log density of the univariate logistic-beta law,
/// `a log σ(ε) + b log(1 - σ(ε)) - log B(a, b)`.
pub fn logistic_beta_log_density(eps: f64, a: f64, b: f64) -> Result<f64> {
    check_shapes(a, b)?;
    Ok(a * ln_logistic(eps) + b * ln_logistic(-eps) - ln_beta(a, b))
}

pub fn logistic_beta_density(eps: f64, a: f64, b: f64) -> Result<f64> {
    logistic_beta_log_density(eps, a, b).map(f64::exp)
}

/// Convenience: a draw as an nalgebra vector.
pub fn sample_logistic_beta_vector<R: Rng + ?Sized>(params: &LogisticBetaParams, rng: &mut R) -> Result<DVector<f64>> {
    params.sample(rng).map(|(_, p)| DVector::from_vec(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_shapes_give_standard_logistic_at_zero() {
        assert!((logistic_beta_density(0.0, 1.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn symmetric_when_shapes_equal() {
        let l = logistic_beta_density(1.7, 2.3, 2.3).unwrap();
        let r = logistic_beta_density(-1.7, 2.3, 2.3).unwrap();
        assert!((l - r).abs() < 1e-15);
    }

    #[test]
    fn integrates_to_one() {
        // composite Simpson on [-40, 40]
        let n = 200_000;
        let (lo, hi) = (-40.0, 40.0);
        let h = (hi - lo) / n as f64;
        let f = |x: f64| logistic_beta_density(x, 1.0, 3.0).unwrap();
        let mut s = f(lo) + f(hi);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + h * i as f64);
        }
        let integral = s * h / 3.0;
        assert!((integral - 1.0).abs() < 1e-8, "{integral}");
    }

    #[test]
    fn invalid_shapes() {
        assert!(logistic_beta_density(0.0, 0.0, 1.0).is_err());
        assert!(logistic_beta_density(0.0, 1.0, -1.0).is_err());
    }
}
