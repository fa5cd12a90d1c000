//! Concentration parameter.

use rand::Rng;

use crate::distributions::stirling_gamma::{StirlingGammaGrid, StirlingGammaParams};
use crate::error::Result;
use crate::model::ChainState;

/// Stirling-gamma full conditional `SG(a + sum_t K_t, b + T, n)` given the occupied counts.
pub fn alpha_conditional(prior: &StirlingGammaParams, occupied: &[usize]) -> StirlingGammaParams {
    let total: usize = occupied.iter().sum();
    prior.posterior(total as u64, occupied.len() as u64)
}

pub fn update_alpha<R: Rng + ?Sized>(state: &mut ChainState, prior: &StirlingGammaParams, rng: &mut R) -> Result<()> {
    let post = alpha_conditional(prior, &state.occupied_counts());
    state.alpha = StirlingGammaGrid::new(post)?.sample(rng);
    Ok(())
}
