//! Seeded chain runner tying the blocks into one sweep.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distributions::ar1::Ar1Kernel;
use crate::distributions::stirling_gamma::StirlingGammaParams;
use crate::error::{Block, Error, Result};
use crate::linalg::SymTridiagonal;
use crate::model::state::{AcceptanceRates, RetainedDraw};
use crate::model::{
    init_state, log_likelihood, validate_config, BaseMeasure, ChainState, ModelConfig, PanelDataset, PosteriorDraws,
};
use crate::sampler::alpha::update_alpha;
use crate::sampler::atoms::update_atoms;
use crate::sampler::memberships::update_memberships;
use crate::sampler::psi::update_psi;
use crate::sampler::regression::update_regression;
use crate::sampler::spatial::{update_spatial, KernelFactor, SpatialPriors};
use crate::sampler::sticks::{epsilon_stick, lambda_stick, pg_stick, LambdaAdapter};
use crate::sampler::workspace::StickUpdateWorkspace;

/// Snapshot handed to the progress callback after a sweep.
#[derive(Debug, Clone)]
pub struct Progress {
    pub iteration: usize,
    pub n_iter: usize,
    pub block: Block,
    pub acceptance: AcceptanceRates,
}

pub type ProgressFn<'a> = &'a (dyn Fn(&Progress) + Sync);

#[derive(Clone, Copy, Default)]
pub struct RunOptions<'a> {
    /// Keep `lambda`, `eps`, `xi` in every retained draw.
    pub store_latents: bool,
    /// Report every this many sweeps; 0 disables reporting.
    pub progress_every: usize,
    pub progress: Option<ProgressFn<'a>>,
    /// Checked at sweep boundaries.
    pub abort: Option<&'a AtomicBool>,
    /// Independent generator stream, one per chain.
    pub chain: u64,
}

#[derive(Debug, Clone, Default)]
struct Counters {
    lambda_accepted: Vec<u64>,
    lambda_tried: Vec<u64>,
    psi: (u64, u64),
    phi: (u64, u64),
}

impl Counters {
    fn rates(&self) -> AcceptanceRates {
        let ratio = |(a, n): (u64, u64)| if n == 0 { f64::NAN } else { a as f64 / n as f64 };
        AcceptanceRates {
            lambda: self.lambda_accepted.iter().zip(&self.lambda_tried).map(|(&a, &n)| ratio((a, n))).collect(),
            psi: ratio(self.psi),
            phi: ratio(self.phi),
        }
    }
}

/// Metropolis-within-Gibbs sampler holding one chain's state.
pub struct GibbsSampler {
    config: ModelConfig,
    data: PanelDataset,
    base: BaseMeasure,
    prior: StirlingGammaParams,
    state: ChainState,
    ws: StickUpdateWorkspace,
    adapter: LambdaAdapter,
    kernel: KernelFactor,
    rng: ChaCha8Rng,
    counters: Counters,
    iteration: usize,
    truncation_warned: bool,
    warnings: Vec<String>,
}

impl GibbsSampler {
    /// Validates the configuration and draws the starting state.
    pub fn new(config: &ModelConfig, data: &PanelDataset, chain: u64) -> Result<Self> {
        let report = validate_config(config, data);
        if !report.passed() {
            return Err(Error::param(format!("invalid configuration: {}", report.summary())));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(chain);
        let state = init_state(config, data, &mut rng)?;
        Self::from_state(config, data, state, rng)
    }

    /// Continues from a given state with the given generator.
    pub fn from_state(config: &ModelConfig, data: &PanelDataset, state: ChainState, rng: ChaCha8Rng) -> Result<Self> {
        let h = config.truncation;
        let kernel = KernelFactor::new(data.dist(), state.phi)?;
        Ok(Self {
            base: config.base_measure(data),
            prior: StirlingGammaParams::new(config.sg_a, config.sg_b, data.n() as u64)?,
            ws: StickUpdateWorkspace::from_state(&state, data),
            adapter: LambdaAdapter::new(h - 1, config.lambda_window),
            kernel,
            rng,
            counters: Counters { lambda_accepted: vec![0; h - 1], lambda_tried: vec![0; h - 1], ..Counters::default() },
            iteration: 0,
            truncation_warned: false,
            warnings: Vec::new(),
            config: config.clone(),
            data: data.clone(),
            state,
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    /// Direct access, e.g. to resample parts of the state between sweeps.
    pub fn state_mut(&mut self) -> &mut ChainState {
        &mut self.state
    }

    pub fn data(&self) -> &PanelDataset {
        &self.data
    }

    /// Replaces the data (same shape and distances) between sweeps.
    pub fn set_data(&mut self, data: PanelDataset) {
        self.data = data;
    }

    pub fn workspace(&self) -> &StickUpdateWorkspace {
        &self.ws
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn acceptance(&self) -> AcceptanceRates {
        self.counters.rates()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Reloads the spatial factor after `phi` was changed externally.
    pub fn refresh_kernel(&mut self) -> Result<()> {
        self.kernel = KernelFactor::new(self.data.dist(), self.state.phi)?;
        Ok(())
    }

    /// One full sweep in the fixed block order.
    pub fn sweep(&mut self) -> Result<()> {
        let it = self.iteration + 1;
        let fail = |block: Block| move |e: Error| Error::Sampler { iteration: it, block, source: Box::new(e) };
        let single = self.config.single_cluster;

        if !single {
            update_memberships(&mut self.state, &self.data, &mut self.rng).map_err(fail(Block::Memberships))?;
            self.check_truncation(it);
        }
        self.ws.recompute(&self.state, &self.data);

        if !single {
            let seeds: Vec<u64> = (0..self.state.h - 1).map(|_| self.rng.random()).collect();
            self.update_sticks(&seeds).map_err(|(block, e)| fail(block)(e))?;
            self.state.refresh_weights();
            update_alpha(&mut self.state, &self.prior, &mut self.rng).map_err(fail(Block::Alpha))?;
        }

        update_atoms(&mut self.state, &self.data, &self.base, &mut self.rng);
        let cfg = &self.config;
        update_regression(&mut self.state, &self.data, cfg.a_rho, cfg.b_rho, cfg.rho_sq_fixed, &mut self.rng)
            .map_err(fail(Block::Regression))?;
        let priors = SpatialPriors {
            a_tau: cfg.a_tau,
            b_tau: cfg.b_tau,
            a_phi: cfg.a_phi,
            b_phi: cfg.b_phi,
            log_phi_step: cfg.log_phi_step,
        };
        let phi_acc = update_spatial(&mut self.state, &self.data, &priors, &mut self.kernel, &mut self.rng)
            .map_err(fail(Block::Spatial))?;
        self.counters.phi.0 += phi_acc as u64;
        self.counters.phi.1 += 1;

        if !single {
            let psi_acc = update_psi(&mut self.state, cfg.psi_step, &mut self.rng).map_err(fail(Block::Psi))?;
            self.counters.psi.0 += psi_acc as u64;
            self.counters.psi.1 += 1;
            if it <= cfg.burn_in {
                for k in 0..self.state.h - 1 {
                    self.adapter.record(k, self.state.lambda[k]);
                }
            }
        }
        if it >= cfg.burn_in {
            self.adapter.freeze();
        }
        self.iteration = it;
        Ok(())
    }

    fn check_truncation(&mut self, it: usize) {
        let h = self.state.h;
        if !self.truncation_warned && h >= 2 && self.state.max_label() >= h - 2 {
            let msg = format!(
                "iteration {it}: cluster {} of H = {h} is occupied; consider a larger truncation",
                self.state.max_label() + 1
            );
            log::warn!("{msg}");
            self.warnings.push(msg);
            self.truncation_warned = true;
        }
    }

    /// PG, `lambda` and `eps` for every free stick, each on its own seeded substream.
    fn update_sticks(&mut self, seeds: &[u64]) -> std::result::Result<(), (Block, Error)> {
        let state = &mut self.state;
        let (times, h, alpha, psi) = (state.times, state.h, state.alpha, state.psi);
        let psi_prec = Ar1Kernel::new(psi, times).map_err(|e| (Block::Epsilon, e))?.precision();
        let ws = &self.ws;
        let adapter = &self.adapter;
        let threshold = self.config.pg_exact_threshold;
        let task = |k: usize, ((eps, xi), lambda): ((&mut [f64], &mut [f64]), &mut f64)| {
            stick_task(k, seeds[k], eps, xi, lambda, ws, alpha, psi, &psi_prec, adapter.average(k), threshold)
        };
        let results: Vec<std::result::Result<bool, (Block, Error)>> = if self.config.parallel_sticks {
            state
                .eps
                .par_chunks_mut(times)
                .zip(state.xi.par_chunks_mut(times))
                .zip(state.lambda.par_iter_mut())
                .take(h - 1)
                .enumerate()
                .map(|(k, slot)| task(k, slot))
                .collect()
        } else {
            state
                .eps
                .chunks_mut(times)
                .zip(state.xi.chunks_mut(times))
                .zip(state.lambda.iter_mut())
                .take(h - 1)
                .enumerate()
                .map(|(k, slot)| task(k, slot))
                .collect()
        };
        for (k, r) in results.into_iter().enumerate() {
            let accepted = r?;
            self.counters.lambda_tried[k] += 1;
            self.counters.lambda_accepted[k] += accepted as u64;
        }
        Ok(())
    }

    /// Observed-cell log-likelihoods of the current state, in row-major cell order.
    pub fn observed_loglik(&self) -> Result<Vec<f64>> {
        let ll = log_likelihood(&self.state, &self.data)?;
        let mask = self.data.observed_mask();
        Ok(ll.cells.iter().zip(mask).filter(|(_, &o)| o).map(|(&v, _)| v).collect())
    }
}

#[allow(clippy::too_many_arguments)]
fn stick_task(
    k: usize,
    seed: u64,
    eps: &mut [f64],
    xi: &mut [f64],
    lambda: &mut f64,
    ws: &StickUpdateWorkspace,
    alpha: f64,
    psi: f64,
    psi_prec: &SymTridiagonal,
    average: Option<f64>,
    threshold: u32,
) -> std::result::Result<bool, (Block, Error)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, r) = (ws.m_row(k), ws.r_row(k));
    pg_stick(m, eps, xi, threshold, &mut rng).map_err(|e| (Block::PolyaGamma, e))?;
    let accepted = lambda_stick(lambda, m, r, xi, alpha, psi, average, &mut rng).map_err(|e| (Block::Lambda, e))?;
    epsilon_stick(eps, m, r, xi, *lambda, alpha, psi_prec, &mut rng).map_err(|e| (Block::Epsilon, e))?;
    Ok(accepted)
}

/// Checks the state invariants that must hold after every sweep.
pub fn check_state_invariants(state: &ChainState) -> Result<()> {
    for t in 0..state.times {
        let w = state.weights_at(t);
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || w.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::numerical(format!("weights at time {t} leave the simplex (sum {sum})")));
        }
    }
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::numerical(format!("{name} must be positive, got {v}")))
        }
    };
    for &v in &state.sigma_sq {
        positive("sigma_sq", v)?;
    }
    for &v in &state.lambda[..state.h - 1] {
        positive("lambda", v)?;
    }
    positive("alpha", state.alpha)?;
    positive("tau_sq", state.tau_sq)?;
    positive("phi", state.phi)?;
    positive("rho_sq", state.rho_sq)?;
    if !(state.psi.abs() < 1.0) {
        return Err(Error::numerical(format!("psi outside (-1, 1): {}", state.psi)));
    }
    if state.s.iter().any(|&l| l as usize >= state.h) {
        return Err(Error::numerical("membership label outside 0..H"));
    }
    Ok(())
}

pub fn run_chain(config: &ModelConfig, data: &PanelDataset) -> Result<PosteriorDraws> {
    run_chain_with(config, data, &RunOptions::default())
}

pub fn run_chain_with(config: &ModelConfig, data: &PanelDataset, opts: &RunOptions<'_>) -> Result<PosteriorDraws> {
    let start = Instant::now();
    let mut sampler = GibbsSampler::new(config, data, opts.chain)?;
    let cells: Vec<usize> = (0..data.n() * data.times()).filter(|&c| data.observed_mask()[c]).collect();
    let mut draws = Vec::with_capacity(config.retained_draws());
    let mut loglik = Vec::with_capacity(config.retained_draws() * cells.len());
    for it in 1..=config.n_iter {
        if opts.abort.is_some_and(|a| a.load(Ordering::Relaxed)) {
            return Err(Error::Aborted { iteration: it });
        }
        sampler.sweep()?;
        if it > config.burn_in && (it - config.burn_in).is_multiple_of(config.thin) {
            draws.push(RetainedDraw::from_state(it as u64, sampler.state(), opts.store_latents));
            let ll = sampler.observed_loglik().map_err(|e| Error::Sampler {
                iteration: it,
                block: Block::Psi,
                source: Box::new(e),
            })?;
            loglik.extend_from_slice(&ll);
        }
        if let Some(cb) = opts.progress {
            if opts.progress_every > 0 && (it % opts.progress_every == 0 || it == config.n_iter) {
                cb(&Progress {
                    iteration: it,
                    n_iter: config.n_iter,
                    block: Block::Psi,
                    acceptance: sampler.acceptance(),
                });
            }
        }
    }
    Ok(PosteriorDraws {
        n: data.n(),
        times: data.times(),
        h: config.truncation,
        p: data.p(),
        draws,
        cells,
        loglik,
        acceptance: sampler.acceptance(),
        sampling_seconds: start.elapsed().as_secs_f64(),
        warnings: sampler.warnings().to_vec(),
    })
}

/// Runs `chains` independent chains in parallel, chain `c` on generator stream `c`.
pub fn run_chains(
    config: &ModelConfig,
    data: &PanelDataset,
    chains: usize,
    opts: &RunOptions<'_>,
) -> Result<Vec<PosteriorDraws>> {
    (0..chains as u64)
        .into_par_iter()
        .map(|c| run_chain_with(config, data, &RunOptions { chain: c, ..*opts }))
        .collect()
}
