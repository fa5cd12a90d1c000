//! Cluster membership indicators.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::likelihood::offset;
use crate::model::{ChainState, PanelDataset};

/// Unnormalized log probabilities `log w_tk + log N(y_it; theta_k + x'beta + gamma_i, sigma2_k)`
/// for every `k`; missing cells get the prior weights alone.
pub fn membership_log_probs(state: &ChainState, data: &PanelDataset, i: usize, t: usize, out: &mut [f64]) {
    let w = state.weights_at(t);
    if !data.is_observed(i, t) {
        for (o, &wk) in out.iter_mut().zip(w) {
            *o = wk.ln();
        }
        return;
    }
    let resid = data.y(i, t) - offset(state, data, i, t);
    for k in 0..state.h {
        let d = resid - state.theta[k];
        let s2 = state.sigma_sq[k];
        out[k] = w[k].ln() - 0.5 * (s2.ln() + d * d / s2);
    }
}

/// Normalized probabilities with max-subtraction.
pub fn membership_probs(state: &ChainState, data: &PanelDataset, i: usize, t: usize) -> Result<Vec<f64>> {
    let mut lp = vec![0.0; state.h];
    membership_log_probs(state, data, i, t, &mut lp);
    normalize_log_probs(&mut lp).map_err(|_| all_neg_inf(i, t))?;
    Ok(lp)
}

fn all_neg_inf(i: usize, t: usize) -> Error {
    Error::numerical(format!("all membership log-probabilities are -inf at (station {i}, time {t})"))
}

/// Turns log weights into probabilities in place; fails if none is finite.
fn normalize_log_probs(lp: &mut [f64]) -> std::result::Result<(), ()> {
    let max = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(());
    }
    let mut total = 0.0;
    for v in lp.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in lp.iter_mut() {
        *v /= total;
    }
    Ok(())
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // Round-off: fall back to the last index with positive mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Redraws every `s_it` from its categorical full conditional.
pub fn update_memberships<R: Rng + ?Sized>(state: &mut ChainState, data: &PanelDataset, rng: &mut R) -> Result<()> {
    let h = state.h;
    let ln_s2: Vec<f64> = state.sigma_sq.iter().map(|v| v.ln()).collect();
    let inv_s2: Vec<f64> = state.sigma_sq.iter().map(|v| 1.0 / v).collect();
    let mut ln_w = vec![0.0; h];
    let mut lp = vec![0.0; h];
    for t in 0..state.times {
        for (o, w) in ln_w.iter_mut().zip(state.weights_at(t)) {
            *o = w.ln();
        }
        for i in 0..state.n {
            if data.is_observed(i, t) {
                let resid = data.y(i, t) - offset(state, data, i, t);
                for k in 0..h {
                    let d = resid - state.theta[k];
                    lp[k] = ln_w[k] - 0.5 * (ln_s2[k] + d * d * inv_s2[k]);
                }
            } else {
                lp.copy_from_slice(&ln_w);
            }
            normalize_log_probs(&mut lp).map_err(|_| all_neg_inf(i, t))?;
            let k = sample_index(&lp, rng);
            state.s[i * state.times + t] = k as u16;
        }
    }
    Ok(())
}
