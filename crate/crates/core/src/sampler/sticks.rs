//! Stick-breaking blocks: Pólya-gamma augmentation, the Pólya mixing
//! variables, the latent logistic-beta paths and the derived weights.
//!
//! For stick `k` only the counts `m_k`, `r_k`, the current `alpha` and `psi`
//! are needed, so the three per-stick updates can run for all sticks
//! independently.

use std::collections::VecDeque;

use rand::Rng;

use crate::distributions::ar1::{irregular_log_det, irregular_precision, Ar1Kernel};
use crate::distributions::mvn::sample_canonical_tridiagonal;
use crate::distributions::polya::{polya_mean, Polya};
use crate::distributions::polya_gamma::sample_polya_gamma;
use crate::distributions::special::{digamma, trigamma, LN_2PI};
use crate::error::{Error, Result};
use crate::linalg::SymTridiagonal;
use crate::model::ChainState;
use crate::sampler::workspace::StickUpdateWorkspace;

/// Running `lambda` averages used to tune the Pólya proposal of each stick.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaAdapter {
    window: usize,
    history: Vec<VecDeque<f64>>,
    frozen: Option<Vec<Option<f64>>>,
}

impl LambdaAdapter {
    pub fn new(sticks: usize, window: usize) -> Self {
        Self { window: window.max(1), history: vec![VecDeque::new(); sticks], frozen: None }
    }

    pub fn record(&mut self, k: usize, lambda: f64) {
        if self.frozen.is_some() {
            return;
        }
        let h = &mut self.history[k];
        if h.len() == self.window {
            h.pop_front();
        }
        h.push_back(lambda);
    }

    /// Stops adapting; later proposals use the averages at this point.
    pub fn freeze(&mut self) {
        if self.frozen.is_none() {
            self.frozen = Some((0..self.history.len()).map(|k| self.live_average(k)).collect());
        }
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen.is_some()
    }

    fn live_average(&self, k: usize) -> Option<f64> {
        let h = &self.history[k];
        (!h.is_empty()).then(|| h.iter().sum::<f64>() / h.len() as f64)
    }

    pub fn average(&self, k: usize) -> Option<f64> {
        match &self.frozen {
            Some(f) => f[k],
            None => self.live_average(k),
        }
    }
}

/// Proposal shapes `(a', b')` with `a' + b' = 1 + alpha` whose Pólya mean
/// matches `target`; `(1, alpha)` when there is no average yet.
pub fn moment_matched_shapes(target: Option<f64>, alpha: f64) -> (f64, f64) {
    let Some(target) = target.filter(|v| v.is_finite() && *v > 0.0) else {
        return (1.0, alpha);
    };
    let total = 1.0 + alpha;
    let half = 0.5 * total;
    // The mean decreases in a' on (0, total/2] towards 2 trigamma(total/2).
    if target <= 2.0 * trigamma(half) {
        return (half, half);
    }
    let mean = |a: f64| {
        let b = total - a;
        if (a - b).abs() < 1e-9 * total {
            2.0 * trigamma(half)
        } else {
            2.0 * (digamma(a) - digamma(b)) / (a - b)
        }
    };
    let (mut lo, mut hi) = (1e-10_f64.min(half * 1e-6), half);
    if mean(lo) <= target {
        return (lo, total - lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * half {
            break;
        }
    }
    let a = 0.5 * (lo + hi);
    (a, total - a)
}

/// Active-time data of one stick in the form used by the `lambda` update.
#[derive(Debug, Clone)]
pub struct ActiveStick {
    pub times: Vec<usize>,
    /// `kappa = r - m/2` on active times.
    pub kappa: Vec<f64>,
    pub xi: Vec<f64>,
}

impl ActiveStick {
    pub fn new(m: &[u32], r: &[u32], xi: &[f64]) -> Self {
        let times: Vec<usize> = (0..m.len()).filter(|&t| m[t] > 0).collect();
        let kappa = times.iter().map(|&t| r[t] as f64 - 0.5 * m[t] as f64).collect();
        let xi = times.iter().map(|&t| xi[t]).collect();
        Self { times, kappa, xi }
    }
}

/// `log L(lambda)`: Gaussian log density of `z = Xi^{-1} kappa` with mean
/// `lambda (1 - alpha)/2 * 1` and covariance `lambda Psi + Xi^{-1}` over the active
/// times, evaluated through the tridiagonal precision of `Psi`. Zero when no
/// time is active.
pub fn log_marginal_lambda(lambda: f64, alpha: f64, psi: f64, stick: &ActiveStick) -> Result<f64> {
    let d = stick.times.len();
    if d == 0 {
        return Ok(0.0);
    }
    let mu = 0.5 * lambda * (1.0 - alpha);
    // q = Psi~^{-1} / lambda
    let q = irregular_precision(&stick.times, psi).scaled(1.0 / lambda);
    let ln_det_q = -irregular_log_det(&stick.times, psi) - d as f64 * lambda.ln();
    let mut qx = q.clone();
    for (dq, &x) in qx.diag.iter_mut().zip(&stick.xi) {
        *dq += x;
    }
    let chol = qx.cholesky()?;
    // Xi e with e = z - mu 1
    let xe: Vec<f64> = stick.kappa.iter().zip(&stick.xi).map(|(k, x)| k - mu * x).collect();
    let e_xi_e: f64 = xe.iter().zip(&stick.xi).map(|(v, x)| v * v / x).sum();
    let mut y = xe.clone();
    chol.forward(&mut y);
    let correction: f64 = y.iter().map(|v| v * v).sum();
    let quad = e_xi_e - correction;
    let ln_det_xi: f64 = stick.xi.iter().map(|x| x.ln()).sum();
    let ln_det_cov = -ln_det_q - ln_det_xi + chol.log_det();
    let out = -0.5 * (d as f64 * LN_2PI + ln_det_cov + quad);
    if !out.is_finite() {
        return Err(Error::numerical(format!("non-finite lambda marginal at lambda = {lambda}")));
    }
    Ok(out)
}

/// Log Metropolis-Hastings ratio for the independence proposal `lambda* ~ Pólya(a', b')`.
pub fn lambda_log_accept_ratio(
    current: f64,
    proposal: f64,
    alpha: f64,
    shapes: (f64, f64),
    psi: f64,
    stick: &ActiveStick,
) -> Result<f64> {
    let tilt = 0.5 * (current - proposal) * (alpha - shapes.0 * shapes.1);
    Ok(tilt + log_marginal_lambda(proposal, alpha, psi, stick)? - log_marginal_lambda(current, alpha, psi, stick)?)
}

/// Draws `xi_k(t) ~ PG(m_k(t), eps_k(t))` on active times; zero elsewhere.
pub fn pg_stick<R: Rng + ?Sized>(
    m: &[u32],
    eps: &[f64],
    xi: &mut [f64],
    exact_threshold: u32,
    rng: &mut R,
) -> Result<()> {
    for t in 0..m.len() {
        xi[t] = if m[t] > 0 { sample_polya_gamma(m[t], eps[t], exact_threshold, rng)? } else { 0.0 };
    }
    Ok(())
}

/// One MH step for `lambda_k`. Returns whether the proposal was accepted.
#[allow(clippy::too_many_arguments)]
pub fn lambda_stick<R: Rng + ?Sized>(
    lambda: &mut f64,
    m: &[u32],
    r: &[u32],
    xi: &[f64],
    alpha: f64,
    psi: f64,
    average: Option<f64>,
    rng: &mut R,
) -> Result<bool> {
    let shapes = moment_matched_shapes(average, alpha);
    let proposal = Polya::new(shapes.0, shapes.1)?.sample(rng);
    let stick = ActiveStick::new(m, r, xi);
    let log_ratio = lambda_log_accept_ratio(*lambda, proposal, alpha, shapes, psi, &stick)?;
    let u: f64 = rng.random();
    if log_ratio >= 0.0 || u.ln() < log_ratio {
        *lambda = proposal;
        Ok(true)
    } else {
        Ok(false)
    }
}

/// Canonical parameters `(precision, linear)` of the Gaussian full conditional of `eps_k`.
pub fn epsilon_conditional(
    m: &[u32],
    r: &[u32],
    xi: &[f64],
    lambda: f64,
    alpha: f64,
    psi_precision: &SymTridiagonal,
) -> (SymTridiagonal, Vec<f64>) {
    let times = m.len();
    let mut prec = psi_precision.scaled(1.0 / lambda);
    let ones = vec![1.0; times];
    let mut linear: Vec<f64> = psi_precision.mul_vec(&ones).into_iter().map(|v| 0.5 * (1.0 - alpha) * v).collect();
    for t in 0..times {
        if m[t] > 0 {
            prec.diag[t] += xi[t];
            linear[t] += r[t] as f64 - 0.5 * m[t] as f64;
        }
    }
    (prec, linear)
}

#[allow(clippy::too_many_arguments)]
pub fn epsilon_stick<R: Rng + ?Sized>(
    eps: &mut [f64],
    m: &[u32],
    r: &[u32],
    xi: &[f64],
    lambda: f64,
    alpha: f64,
    psi_precision: &SymTridiagonal,
    rng: &mut R,
) -> Result<()> {
    let (prec, linear) = epsilon_conditional(m, r, xi, lambda, alpha, psi_precision);
    let (draw, _) = sample_canonical_tridiagonal(&prec, &linear, rng)?;
    eps.copy_from_slice(&draw);
    Ok(())
}

/// PG block over all free sticks.
pub fn update_pg_augmentation<R: Rng + ?Sized>(
    state: &mut ChainState,
    ws: &StickUpdateWorkspace,
    exact_threshold: u32,
    rng: &mut R,
) -> Result<()> {
    let times = state.times;
    for k in 0..state.h - 1 {
        let (eps, xi) = (&state.eps[k * times..(k + 1) * times], &mut state.xi[k * times..(k + 1) * times]);
        pg_stick(ws.m_row(k), eps, xi, exact_threshold, rng)?;
    }
    Ok(())
}

/// `lambda` block over all free sticks; returns per-stick accept flags.
pub fn update_lambda<R: Rng + ?Sized>(
    state: &mut ChainState,
    ws: &StickUpdateWorkspace,
    adapter: &LambdaAdapter,
    rng: &mut R,
) -> Result<Vec<bool>> {
    let times = state.times;
    (0..state.h - 1)
        .map(|k| {
            let xi = &state.xi[k * times..(k + 1) * times];
            lambda_stick(
                &mut state.lambda[k],
                ws.m_row(k),
                ws.r_row(k),
                xi,
                state.alpha,
                state.psi,
                adapter.average(k),
                rng,
            )
        })
        .collect()
}

/// `eps` block over all free sticks. The last row is never drawn.
pub fn update_epsilon<R: Rng + ?Sized>(state: &mut ChainState, ws: &StickUpdateWorkspace, rng: &mut R) -> Result<()> {
    let times = state.times;
    let psi_prec = Ar1Kernel::new(state.psi, times)?.precision();
    for k in 0..state.h - 1 {
        let (xi, lambda) = (&state.xi[k * times..(k + 1) * times], state.lambda[k]);
        let eps = &mut state.eps[k * times..(k + 1) * times];
        epsilon_stick(eps, ws.m_row(k), ws.r_row(k), xi, lambda, state.alpha, &psi_prec, rng)?;
    }
    Ok(())
}

pub fn compute_weights(state: &mut ChainState) {
    state.refresh_weights();
}

/// Prior mean of `lambda` under `Pólya(1, alpha)`.
pub fn prior_lambda_mean(alpha: f64) -> f64 {
    polya_mean(1.0, alpha)
}
