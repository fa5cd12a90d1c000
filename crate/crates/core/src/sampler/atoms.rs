//! Cluster atoms `(theta_k, sigma2_k)` under the normal / inverse-gamma base measure.

use rand::Rng;
use rand_distr::{Gamma, StandardNormal};

use crate::model::likelihood::offset;
use crate::model::{BaseMeasure, ChainState, PanelDataset};

/// `sigma2 ~ IG(shape, scale)` as `scale / Gamma(shape, 1)`.
pub fn sample_inverse_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    let g: f64 = rng.sample(Gamma::new(shape, 1.0).expect("inverse-gamma shape must be positive"));
    scale / g.max(f64::MIN_POSITIVE)
}

pub fn draw_from_base<R: Rng + ?Sized>(base: &BaseMeasure, rng: &mut R) -> (f64, f64) {
    let z: f64 = rng.sample(StandardNormal);
    let theta = base.theta0 + base.theta_var.sqrt() * z;
    (theta, sample_inverse_gamma(base.a0, base.b0, rng))
}

/// Mean and variance of `theta_k | sigma2_k` given `count` residuals summing to `sum`.
pub fn theta_conditional(sum: f64, count: usize, sigma_sq: f64, base: &BaseMeasure) -> (f64, f64) {
    let prec = 1.0 / base.theta_var + count as f64 / sigma_sq;
    let mean = (base.theta0 / base.theta_var + sum / sigma_sq) / prec;
    (mean, 1.0 / prec)
}

/// Inverse-gamma shape and scale of `sigma2_k | theta_k` given the residual sum of squares around `theta_k`.
pub fn sigma_conditional(sum_sq: f64, count: usize, base: &BaseMeasure) -> (f64, f64) {
    (base.a0 + 0.5 * count as f64, base.b0 + 0.5 * sum_sq)
}

/// Residuals `y - x'beta - gamma_i` of the observed cells, grouped by label.
pub fn residuals_by_cluster(state: &ChainState, data: &PanelDataset) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); state.h];
    for i in 0..state.n {
        for t in 0..state.times {
            if data.is_observed(i, t) {
                out[state.label(i, t)].push(data.y(i, t) - offset(state, data, i, t));
            }
        }
    }
    out
}

/// Occupied atoms: `theta` given the current variance, then the variance given
/// the new `theta`. Empty atoms are refreshed from the base measure.
pub fn update_atoms<R: Rng + ?Sized>(state: &mut ChainState, data: &PanelDataset, base: &BaseMeasure, rng: &mut R) {
    let groups = residuals_by_cluster(state, data);
    for (k, resid) in groups.iter().enumerate() {
        if resid.is_empty() {
            let (th, s2) = draw_from_base(base, rng);
            state.theta[k] = th;
            state.sigma_sq[k] = s2;
            continue;
        }
        let sum: f64 = resid.iter().sum();
        let (mean, var) = theta_conditional(sum, resid.len(), state.sigma_sq[k], base);
        let z: f64 = rng.sample(StandardNormal);
        let theta = mean + var.sqrt() * z;
        let ss: f64 = resid.iter().map(|r| (r - theta).powi(2)).sum();
        let (shape, scale) = sigma_conditional(ss, resid.len(), base);
        state.theta[k] = theta;
        state.sigma_sq[k] = sample_inverse_gamma(shape, scale, rng);
    }
}
