//! Autoregressive coefficient `psi` of the stick paths.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::distributions::ar1::Ar1Kernel;
use crate::distributions::special::LN_2PI;
use crate::error::Result;
use crate::model::ChainState;

/// `sum_{k < H-1} log N_T(eps_k; lambda_k (1 - alpha)/2 * 1, lambda_k Psi(psi))`.
pub fn psi_log_target(state: &ChainState, psi: f64) -> Result<f64> {
    let times = state.times;
    let kernel = Ar1Kernel::new(psi, times)?;
    let prec = kernel.precision();
    let ln_det = kernel.log_det();
    let mut centered = vec![0.0; times];
    let mut total = 0.0;
    for k in 0..state.h - 1 {
        let lambda = state.lambda[k];
        let mu = 0.5 * lambda * (1.0 - state.alpha);
        for (c, &e) in centered.iter_mut().zip(&state.eps[k * times..(k + 1) * times]) {
            *c = e - mu;
        }
        let quad = prec.quad_form(&centered) / lambda;
        total -= 0.5 * (times as f64 * (LN_2PI + lambda.ln()) + ln_det + quad);
    }
    Ok(total)
}

/// Random-walk step on `atanh(psi)` under the uniform prior; returns the accept flag.
pub fn update_psi<R: Rng + ?Sized>(state: &mut ChainState, step: f64, rng: &mut R) -> Result<bool> {
    let z: f64 = rng.sample(StandardNormal);
    let u: f64 = rng.random();
    let proposal = (state.psi.atanh() + step * z).tanh();
    if !(proposal.abs() < 1.0) {
        return Ok(false);
    }
    let jac = |p: f64| (1.0 - p * p).ln();
    let log_ratio =
        psi_log_target(state, proposal)? - psi_log_target(state, state.psi)? + jac(proposal) - jac(state.psi);
    if log_ratio >= 0.0 || u.ln() < log_ratio {
        state.psi = proposal;
        Ok(true)
    } else {
        Ok(false)
    }
}
