//! Spatial random effects `gamma ~ N(0, tau2 R(phi))` with the squared
//! exponential correlation `R_ij = exp(-d_ij^2 / (2 phi^2))`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_with_jitter, log_det_from_cholesky};
use crate::model::{ChainState, PanelDataset};
use crate::sampler::atoms::sample_inverse_gamma;

pub fn se_correlation(dist: &DMatrix<f64>, phi: f64) -> DMatrix<f64> {
    let c = 0.5 / (phi * phi);
    dist.map(|d| (-d * d * c).exp())
}

/// Cholesky factor of `R(phi)` and its log determinant.
#[derive(Debug, Clone)]
pub struct KernelFactor {
    pub phi: f64,
    pub chol: Cholesky<f64, Dyn>,
    pub ln_det: f64,
}

impl KernelFactor {
    pub fn new(dist: &DMatrix<f64>, phi: f64) -> Result<Self> {
        let chol = cholesky_with_jitter(&se_correlation(dist, phi))?;
        let ln_det = log_det_from_cholesky(&chol);
        Ok(Self { phi, chol, ln_det })
    }

    /// `g' R^{-1} g`.
    pub fn quad_form(&self, g: &DVector<f64>) -> f64 {
        let y = self.chol.l().solve_lower_triangular(g).expect("triangular factor is nonsingular");
        y.norm_squared()
    }

    /// `log N(g; 0, tau2 R)` up to the `2 pi` constant.
    pub fn log_density(&self, g: &DVector<f64>, tau_sq: f64) -> f64 {
        let n = g.len() as f64;
        -0.5 * (n * tau_sq.ln() + self.ln_det + self.quad_form(g) / tau_sq)
    }

    /// Correlation matrix as reconstructed from the factor (includes any jitter).
    pub fn correlation(&self) -> DMatrix<f64> {
        let l = self.chol.l();
        &l * l.transpose()
    }
}

/// Per-station likelihood precision `D_ii = sum_t 1/sigma2` and linear term
/// `b_i = sum_t (y - theta - x'beta) / sigma2` over observed cells.
pub fn gamma_likelihood_terms(state: &ChainState, data: &PanelDataset) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; state.n];
    let mut b = vec![0.0; state.n];
    for i in 0..state.n {
        for t in 0..state.times {
            if !data.is_observed(i, t) {
                continue;
            }
            let k = state.label(i, t);
            let w = 1.0 / state.sigma_sq[k];
            let xb: f64 = data.x(i, t).iter().zip(&state.beta).map(|(x, b)| x * b).sum();
            d[i] += w;
            b[i] += w * (data.y(i, t) - state.theta[k] - xb);
        }
    }
    (d, b)
}

/// Posterior mean and covariance of `gamma` in covariance form,
/// `Sigma = Lam - Lam D^{1/2} M^{-1} D^{1/2} Lam` with `M = I + D^{1/2} Lam D^{1/2}`.
pub fn gamma_conditional(
    kernel: &KernelFactor,
    tau_sq: f64,
    d: &[f64],
    b: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = d.len();
    let lam = kernel.correlation() * tau_sq;
    let sq = DVector::from_iterator(n, d.iter().map(|v| v.sqrt()));
    let (m_chol, lam_sq) = woodbury_parts(&lam, &sq)?;
    let v = DVector::from_iterator(n, (0..n).map(|i| if d[i] > 0.0 { b[i] / sq[i] } else { 0.0 }));
    let mean = &lam_sq * m_chol.solve(&v);
    let cov = &lam - &lam_sq * m_chol.solve(&lam_sq.transpose());
    Ok((mean, cov))
}

/// `chol(I + S Lam S)` and `Lam S` for `S = diag(sq)`.
fn woodbury_parts(lam: &DMatrix<f64>, sq: &DVector<f64>) -> Result<(Cholesky<f64, Dyn>, DMatrix<f64>)> {
    let n = sq.len();
    let lam_sq = DMatrix::from_fn(n, n, |i, j| lam[(i, j)] * sq[j]);
    let mut m = DMatrix::from_fn(n, n, |i, j| sq[i] * lam_sq[(i, j)]);
    for i in 0..n {
        m[(i, i)] += 1.0;
    }
    let chol = m.cholesky().ok_or_else(|| Error::numerical("spatial Woodbury system is not positive definite"))?;
    Ok((chol, lam_sq))
}

/// Joint draw of `gamma` by perturbing the prior and the pseudo-observations
/// (`v = D^{1/2} gamma + eta`, `eta ~ N(0, I)`), which stays stable when `R` is
/// nearly singular.
pub fn sample_gamma<R: Rng + ?Sized>(
    kernel: &KernelFactor,
    tau_sq: f64,
    d: &[f64],
    b: &[f64],
    rng: &mut R,
) -> Result<DVector<f64>> {
    let n = d.len();
    let l = kernel.chol.l();
    let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let eta = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let g0 = &l * z * tau_sq.sqrt();
    let lam = (&l * l.transpose()) * tau_sq;
    let sq = DVector::from_iterator(n, d.iter().map(|v| v.sqrt()));
    let (m_chol, lam_sq) = woodbury_parts(&lam, &sq)?;
    let v = DVector::from_iterator(n, (0..n).map(|i| if d[i] > 0.0 { b[i] / sq[i] } else { 0.0 }));
    let resid = v - sq.component_mul(&g0) - eta;
    Ok(g0 + lam_sq * m_chol.solve(&resid))
}

/// Inverse-gamma parameters of `tau2 | gamma, phi`.
pub fn tau_sq_conditional(quad: f64, n: usize, a_tau: f64, b_tau: f64) -> (f64, f64) {
    (a_tau + 0.5 * n as f64, b_tau + 0.5 * quad)
}

/// Priors and step size of the spatial block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialPriors {
    pub a_tau: f64,
    pub b_tau: f64,
    pub a_phi: f64,
    pub b_phi: f64,
    pub log_phi_step: f64,
}

/// `gamma`, then `tau2`, then a random-walk step on `log phi`. Returns the
/// accept flag of the `phi` move; a proposal whose kernel cannot be factorized
/// is rejected.
pub fn update_spatial<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &PanelDataset,
    priors: &SpatialPriors,
    kernel: &mut KernelFactor,
    rng: &mut R,
) -> Result<bool> {
    let (d, b) = gamma_likelihood_terms(state, data);
    let g = sample_gamma(kernel, state.tau_sq, &d, &b, rng)?;
    state.gamma.copy_from_slice(g.as_slice());

    let (shape, scale) = tau_sq_conditional(kernel.quad_form(&g), state.n, priors.a_tau, priors.b_tau);
    state.tau_sq = sample_inverse_gamma(shape, scale, rng);

    let step: f64 = rng.sample(StandardNormal);
    let proposal = state.phi * (priors.log_phi_step * step).exp();
    let u: f64 = rng.random();
    let Ok(cand) = KernelFactor::new(data.dist(), proposal) else {
        log::debug!("phi proposal {proposal} rejected: kernel factorization failed");
        return Ok(false);
    };
    let log_prior = |phi: f64| priors.a_phi * phi.ln() - priors.b_phi * phi;
    let log_ratio = cand.log_density(&g, state.tau_sq) - kernel.log_density(&g, state.tau_sq) + log_prior(proposal)
        - log_prior(state.phi);
    if log_ratio.is_finite() && (log_ratio >= 0.0 || u.ln() < log_ratio) {
        state.phi = proposal;
        *kernel = cand;
        Ok(true)
    } else {
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dist3() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[0.0, 10.0, 25.0, 10.0, 0.0, 18.0, 25.0, 18.0, 0.0])
    }

    #[test]
    fn tiny_range_decouples_stations() {
        let k = KernelFactor::new(&dist3(), 1e-6).unwrap();
        let (_, cov) = gamma_conditional(&k, 2.0, &[1.0, 3.0, 0.5], &[0.2, 0.1, -0.4]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(cov[(i, j)].abs() < 1e-8);
                }
            }
        }
        assert!((cov[(1, 1)] - 1.0 / (0.5 + 3.0)).abs() < 1e-12);
    }

    #[test]
    fn colocated_stations_fully_correlated() {
        let d = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 0.0]);
        let r = se_correlation(&d, 50.0);
        assert_eq!(r[(0, 1)], 1.0);
    }

    #[test]
    fn tau_parameters_by_hand() {
        let k = KernelFactor::new(&DMatrix::from_row_slice(2, 2, &[0.0, 1e6, 1e6, 0.0]), 1.0).unwrap();
        let g = DVector::from_vec(vec![1.0, 1.0]);
        let (shape, scale) = tau_sq_conditional(k.quad_form(&g), 2, 0.1, 0.1);
        assert!((shape - 1.1).abs() < 1e-12);
        assert!((scale - 1.1).abs() < 1e-12);
    }

    #[test]
    fn conditional_matches_precision_form() {
        let k = KernelFactor::new(&dist3(), 15.0).unwrap();
        let (d, b) = ([2.0, 0.7, 1.4], [0.3, -1.2, 0.8]);
        let tau = 1.7;
        let (mean, cov) = gamma_conditional(&k, tau, &d, &b).unwrap();
        let r = se_correlation(&dist3(), 15.0);
        let mut prec = r.try_inverse().unwrap() / tau;
        for i in 0..3 {
            prec[(i, i)] += d[i];
        }
        let cov2 = prec.clone().try_inverse().unwrap();
        let mean2 = &cov2 * DVector::from_column_slice(&b);
        assert!((cov - cov2).norm() < 1e-10);
        assert!((mean - mean2).norm() < 1e-10);
    }

    #[test]
    fn perturbation_draws_have_conditional_moments() {
        let k = KernelFactor::new(&dist3(), 15.0).unwrap();
        let (d, b) = ([2.0, 0.0, 1.4], [0.3, 0.0, 0.8]);
        let (mean, cov) = gamma_conditional(&k, 1.3, &d, &b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let reps = 100_000;
        let mut m = DVector::zeros(3);
        let mut s = DMatrix::zeros(3, 3);
        for _ in 0..reps {
            let g = sample_gamma(&k, 1.3, &d, &b, &mut rng).unwrap();
            m += &g;
            s += &g * g.transpose();
        }
        m /= reps as f64;
        let c = s / reps as f64 - &m * m.transpose();
        assert!((m - mean).norm() < 0.02);
        assert!((c - cov).norm() < 0.03);
    }
}
