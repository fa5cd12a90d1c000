//! Label-invariant posterior summaries and model-comparison criteria.

pub mod criteria;
pub mod partition;
pub mod vi;

pub use criteria::{fit_gpd_pwm, pareto_k_histogram, psis_loo, waic, LogLikMatrix, LooResult, WaicResult};
pub use partition::{
    adjusted_rand_index, canonicalize, cocluster_error, cocluster_probs, lagged_ari, mean_by_lag, num_clusters,
    CoclusterStack, PartitionSeries,
};
pub use vi::{expected_vi_lower_bound, vi_point_estimate, vi_point_series, vi_search};

use crate::error::Result;
use crate::model::PosteriorDraws;

/// Co-clustering stack, VI point partitions and their lagged ARI table.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub cocluster: CoclusterStack,
    pub point: PartitionSeries,
    /// `lagged[l - 1][t]`; empty when `T = 1`.
    pub lagged: Vec<Vec<f64>>,
}

pub fn summarize(draws: &PosteriorDraws, max_lag: usize) -> Result<PosteriorSummary> {
    if draws.is_empty() {
        return Err(crate::error::Error::input("no retained draws to summarize"));
    }
    let cocluster = cocluster_probs(draws);
    let point = vi_point_series(draws, &cocluster);
    let lag = max_lag.min(draws.times.saturating_sub(1));
    let lagged = if lag == 0 { Vec::new() } else { lagged_ari(&point, lag)? };
    Ok(PosteriorSummary { cocluster, point, lagged })
}

/// Pools the draws of several chains of the same fit.
pub fn pool_chains(chains: &[PosteriorDraws]) -> Result<PosteriorDraws> {
    let first = chains.first().ok_or_else(|| crate::error::Error::input("no chains to pool"))?;
    let mut out = first.clone();
    for c in &chains[1..] {
        if (c.n, c.times, c.h, c.p) != (first.n, first.times, first.h, first.p) || c.cells != first.cells {
            return Err(crate::error::Error::input("chains differ in shape and cannot be pooled"));
        }
        out.draws.extend(c.draws.iter().cloned());
        out.loglik.extend_from_slice(&c.loglik);
        out.warnings.extend(c.warnings.iter().cloned());
        out.sampling_seconds += c.sampling_seconds;
    }
    Ok(out)
}
