//! Covariate coefficients `beta` and their prior variance `rho^2`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::distributions::mvn::sample_canonical_dense;
use crate::error::Result;
use crate::model::{ChainState, PanelDataset};
use crate::sampler::atoms::sample_inverse_gamma;

/// Canonical parameters of `beta | rest`: precision `I / rho2 + sum x x' / sigma2_s`
/// and linear term `sum x (y - theta_s - gamma_i) / sigma2_s` over observed cells.
pub fn beta_conditional(state: &ChainState, data: &PanelDataset) -> (DMatrix<f64>, DVector<f64>) {
    let p = data.p();
    let mut prec = DMatrix::identity(p, p) / state.rho_sq;
    let mut lin = DVector::zeros(p);
    for i in 0..state.n {
        for t in 0..state.times {
            if !data.is_observed(i, t) {
                continue;
            }
            let k = state.label(i, t);
            let w = 1.0 / state.sigma_sq[k];
            let x = data.x(i, t);
            let resid = data.y(i, t) - state.theta[k] - state.gamma[i];
            for a in 0..p {
                lin[a] += w * x[a] * resid;
                for b in 0..=a {
                    prec[(a, b)] += w * x[a] * x[b];
                }
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            prec[(b, a)] = prec[(a, b)];
        }
    }
    (prec, lin)
}

/// Inverse-gamma parameters of `rho^2 | beta`.
pub fn rho_sq_conditional(beta: &[f64], a_rho: f64, b_rho: f64) -> (f64, f64) {
    let ss: f64 = beta.iter().map(|b| b * b).sum();
    (a_rho + 0.5 * beta.len() as f64, b_rho + 0.5 * ss)
}

/// Draws `beta` jointly, then `rho^2` unless it is held fixed. No-op when `p = 0`.
pub fn update_regression<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &PanelDataset,
    a_rho: f64,
    b_rho: f64,
    rho_sq_fixed: Option<f64>,
    rng: &mut R,
) -> Result<()> {
    if data.p() == 0 {
        return Ok(());
    }
    let (prec, lin) = beta_conditional(state, data);
    let (draw, _) = sample_canonical_dense(&prec, &lin, rng)?;
    state.beta.copy_from_slice(draw.as_slice());
    state.rho_sq = match rho_sq_fixed {
        Some(v) => v,
        None => {
            let (shape, scale) = rho_sq_conditional(&state.beta, a_rho, b_rho);
            sample_inverse_gamma(shape, scale, rng)
        }
    };
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_support::tiny_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn no_covariates_is_noop() {
        let (mut st, data) = tiny_state(2, 2, 2);
        let before = st.clone();
        update_regression(&mut st, &data, 0.1, 0.1, None, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(st, before);
    }

    #[test]
    fn rho_parameters_by_hand() {
        let (shape, scale) = rho_sq_conditional(&[1.0, 2.0], 0.1, 0.1);
        assert!((shape - 1.1).abs() < 1e-12);
        assert!((scale - 2.6).abs() < 1e-12);
    }

    #[test]
    fn vague_prior_recovers_least_squares() {
        let (n, times) = (6, 5);
        let x: Vec<f64> = (0..n * times).map(|c| ((c * 7919) % 13) as f64 / 13.0).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(c, v)| 2.0 * v + 0.1 * ((c % 3) as f64 - 1.0)).collect();
        let data = PanelDataset::new(
            n,
            times,
            1,
            y.clone(),
            vec![true; n * times],
            x.clone(),
            (0..n).map(|i| (i as f64, 0.0)).collect(),
            (0..n).map(|i| i.to_string()).collect(),
            (0..times).map(|t| t.to_string()).collect(),
            vec!["x".into()],
        )
        .unwrap();
        let (mut st, _) = tiny_state(n, times, 2);
        st.theta = vec![0.0, 0.0];
        st.beta = vec![0.0];
        st.rho_sq = 1e12;
        let (prec, lin) = beta_conditional(&st, &data);
        let mean = lin[0] / prec[(0, 0)];
        let ols = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / x.iter().map(|a| a * a).sum::<f64>();
        assert!((mean - ols).abs() < 1e-3);
    }
}
