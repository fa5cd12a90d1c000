//! Latent chain state and retained posterior draws.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::ar1::Ar1Kernel;
use crate::distributions::logistic_beta::sample_path_given_lambda;
use crate::distributions::polya::Polya;
use crate::distributions::special::logistic;
use crate::distributions::stirling_gamma::{sample_stirling_gamma, StirlingGammaParams};
use crate::error::Result;
use crate::model::config::ModelConfig;
use crate::model::data::PanelDataset;
use crate::sampler::atoms::{draw_from_base, update_atoms};

/// Full latent state of one chain.
///
/// Labels are zero-based. `eps`, `xi` are stored stick-major (`k * T + t`);
/// `weights` is time-major (`t * H + k`). Row `H - 1` of `eps`, `xi` and the
/// last entry of `lambda` are placeholders: the final stick is forced to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub n: usize,
    pub times: usize,
    pub h: usize,
    pub s: Vec<u16>,
    pub theta: Vec<f64>,
    pub sigma_sq: Vec<f64>,
    pub eps: Vec<f64>,
    pub lambda: Vec<f64>,
    pub xi: Vec<f64>,
    pub alpha: f64,
    pub psi: f64,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub tau_sq: f64,
    pub phi: f64,
    pub rho_sq: f64,
    pub weights: Vec<f64>,
}

impl ChainState {
    #[inline]
    pub fn label(&self, i: usize, t: usize) -> usize {
        self.s[i * self.times + t] as usize
    }

    #[inline]
    pub fn eps_at(&self, k: usize, t: usize) -> f64 {
        self.eps[k * self.times + t]
    }

    #[inline]
    pub fn weight(&self, t: usize, k: usize) -> f64 {
        self.weights[t * self.h + k]
    }

    pub fn weights_at(&self, t: usize) -> &[f64] {
        &self.weights[t * self.h..(t + 1) * self.h]
    }

    /// Recomputes stick-breaking weights from `eps`; the last stick absorbs the remainder.
    pub fn refresh_weights(&mut self) {
        let (h, times) = (self.h, self.times);
        for t in 0..times {
            let mut remaining = 1.0;
            let mut used = 0.0;
            for k in 0..h - 1 {
                let e = self.eps[k * times + t];
                let w = remaining * logistic(e);
                self.weights[t * h + k] = w;
                used += w;
                remaining *= logistic(-e);
            }
            self.weights[t * h + h - 1] = (1.0 - used).max(0.0);
        }
    }

    /// Number of occupied clusters at each time.
    pub fn occupied_counts(&self) -> Vec<usize> {
        let mut seen = vec![false; self.h];
        (0..self.times)
            .map(|t| {
                seen.iter_mut().for_each(|x| *x = false);
                let mut k = 0;
                for i in 0..self.n {
                    let l = self.label(i, t);
                    if !seen[l] {
                        seen[l] = true;
                        k += 1;
                    }
                }
                k
            })
            .collect()
    }

    /// Largest label in use.
    pub fn max_label(&self) -> usize {
        self.s.iter().copied().max().unwrap_or(0) as usize
    }
}

/// Type-7 quantile of sorted data.
fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Starting state: memberships by per-time quantile binning of `y` into
/// `min(5, H)` groups, `alpha` from its prior, sticks from their prior and
/// atoms drawn once from their conditional given the initial memberships.
pub fn init_state<R: Rng + ?Sized>(config: &ModelConfig, data: &PanelDataset, rng: &mut R) -> Result<ChainState> {
    let (n, times, h, p) = (data.n(), data.times(), config.truncation, data.p());
    let groups = 5.min(h);
    let mut s = vec![0u16; n * times];
    if !config.single_cluster {
        for t in 0..times {
            let mut vals: Vec<f64> = (0..n).filter(|&i| data.is_observed(i, t)).map(|i| data.y(i, t)).collect();
            if vals.is_empty() {
                continue;
            }
            vals.sort_by(f64::total_cmp);
            let cuts: Vec<f64> = (1..groups).map(|j| quantile_sorted(&vals, j as f64 / groups as f64)).collect();
            for i in 0..n {
                if data.is_observed(i, t) {
                    let y = data.y(i, t);
                    s[i * times + t] = cuts.iter().filter(|&&c| c < y).count() as u16;
                }
            }
        }
    }

    let prior = StirlingGammaParams::new(config.sg_a, config.sg_b, n as u64)?;
    let alpha = sample_stirling_gamma(&prior, rng)?;
    let base = config.base_measure(data);

    let mut theta = Vec::with_capacity(h);
    let mut sigma_sq = Vec::with_capacity(h);
    for _ in 0..h {
        let (th, s2) = draw_from_base(&base, rng);
        theta.push(th);
        sigma_sq.push(s2);
    }

    let kernel = Ar1Kernel::new(0.0, times)?;
    let polya = Polya::new(1.0, alpha)?;
    let mut lambda = vec![1.0; h];
    let mut eps = vec![0.0; h * times];
    for k in 0..h - 1 {
        lambda[k] = polya.sample(rng);
        let path = sample_path_given_lambda(lambda[k], 1.0 - alpha, kernel, rng);
        eps[k * times..(k + 1) * times].copy_from_slice(&path);
    }

    let mut state = ChainState {
        n,
        times,
        h,
        s,
        theta,
        sigma_sq,
        eps,
        lambda,
        xi: vec![0.0; h * times],
        alpha,
        psi: 0.0,
        beta: vec![0.0; p],
        gamma: vec![0.0; n],
        tau_sq: 1.0,
        phi: config.a_phi / config.b_phi,
        rho_sq: config.rho_sq_fixed.unwrap_or(1.0),
        weights: vec![0.0; h * times],
    };
    state.refresh_weights();
    update_atoms(&mut state, data, &base, rng);
    Ok(state)
}

/// Optional large latents, kept only when requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Latents {
    pub lambda: Vec<f64>,
    pub eps: Vec<f64>,
    pub xi: Vec<f64>,
}

/// One retained state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetainedDraw {
    pub iteration: u64,
    pub s: Vec<u16>,
    pub alpha: f64,
    pub psi: f64,
    pub tau_sq: f64,
    pub phi: f64,
    pub rho_sq: f64,
    pub theta: Vec<f64>,
    pub sigma_sq: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub latents: Option<Latents>,
}

impl RetainedDraw {
    pub fn from_state(iteration: u64, state: &ChainState, keep_latents: bool) -> Self {
        Self {
            iteration,
            s: state.s.clone(),
            alpha: state.alpha,
            psi: state.psi,
            tau_sq: state.tau_sq,
            phi: state.phi,
            rho_sq: state.rho_sq,
            theta: state.theta.clone(),
            sigma_sq: state.sigma_sq.clone(),
            beta: state.beta.clone(),
            gamma: state.gamma.clone(),
            latents: keep_latents.then(|| Latents {
                lambda: state.lambda.clone(),
                eps: state.eps.clone(),
                xi: state.xi.clone(),
            }),
        }
    }

    #[inline]
    pub fn label(&self, times: usize, i: usize, t: usize) -> usize {
        self.s[i * times + t] as usize
    }

    /// Labels of all units at time `t`.
    pub fn partition_at(&self, n: usize, times: usize, t: usize) -> Vec<usize> {
        (0..n).map(|i| self.label(times, i, t)).collect()
    }
}

/// Metropolis acceptance rates over all iterations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRates {
    /// Per stick `k < H - 1`; NaN when a stick was never updated.
    pub lambda: Vec<f64>,
    pub psi: f64,
    pub phi: f64,
}

impl AcceptanceRates {
    /// Mean over sticks that were updated at least once.
    pub fn lambda_mean(&self) -> f64 {
        let v: Vec<f64> = self.lambda.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    }
}

/// Thinned post-burn-in draws with their per-cell log-likelihoods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub n: usize,
    pub times: usize,
    pub h: usize,
    pub p: usize,
    pub draws: Vec<RetainedDraw>,
    /// Cell indices `i * T + t` of the observed cells, the columns of `loglik`.
    pub cells: Vec<usize>,
    /// Row-major `draws x cells` log-likelihood matrix.
    pub loglik: Vec<f64>,
    pub acceptance: AcceptanceRates,
    pub sampling_seconds: f64,
    pub warnings: Vec<String>,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn loglik_row(&self, d: usize) -> &[f64] {
        let c = self.cells.len();
        &self.loglik[d * c..(d + 1) * c]
    }

    /// Number of occupied clusters at each time for draw `d`.
    pub fn occupied_counts(&self, d: usize) -> Vec<usize> {
        let draw = &self.draws[d];
        (0..self.times)
            .map(|t| {
                let mut labels = draw.partition_at(self.n, self.times, t);
                labels.sort_unstable();
                labels.dedup();
                labels.len()
            })
            .collect()
    }
}
