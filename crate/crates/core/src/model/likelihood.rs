//! Gaussian observation log-likelihood.

use crate::distributions::special::ln_normal_pdf;
use crate::error::{Error, Result};
use crate::model::data::PanelDataset;
use crate::model::state::ChainState;

/// Total log-likelihood and its per-cell terms (`i * T + t`, zero when missing).
#[derive(Debug, Clone, PartialEq)]
pub struct CellLogLik {
    pub total: f64,
    pub cells: Vec<f64>,
}

/// Linear predictor `x' beta + gamma_i` without the atom mean.
#[inline]
pub fn offset(state: &ChainState, data: &PanelDataset, i: usize, t: usize) -> f64 {
    let xb: f64 = data.x(i, t).iter().zip(&state.beta).map(|(x, b)| x * b).sum();
    xb + state.gamma[i]
}

pub fn log_likelihood(state: &ChainState, data: &PanelDataset) -> Result<CellLogLik> {
    let (n, times) = (data.n(), data.times());
    let mut cells = vec![0.0; n * times];
    let mut total = 0.0;
    for i in 0..n {
        for t in 0..times {
            if !data.is_observed(i, t) {
                continue;
            }
            let k = state.label(i, t);
            let mean = state.theta[k] + offset(state, data, i, t);
            let ll = ln_normal_pdf(data.y(i, t), mean, state.sigma_sq[k]);
            if !ll.is_finite() {
                return Err(Error::numerical(format!(
                    "non-finite log-likelihood {ll} at cell (station {i}, time {t})"
                )));
            }
            cells[i * times + t] = ll;
            total += ll;
        }
    }
    Ok(CellLogLik { total, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::special::LN_2PI;

    fn state_for(n: usize, times: usize, p: usize) -> ChainState {
        ChainState {
            n,
            times,
            h: 2,
            s: vec![0; n * times],
            theta: vec![0.0, 0.0],
            sigma_sq: vec![1.0, 1.0],
            eps: vec![0.0; 2 * times],
            lambda: vec![1.0; 2],
            xi: vec![0.0; 2 * times],
            alpha: 1.0,
            psi: 0.0,
            beta: vec![0.0; p],
            gamma: vec![0.0; n],
            tau_sq: 1.0,
            phi: 1.0,
            rho_sq: 1.0,
            weights: vec![0.5; 2 * times],
        }
    }

    fn data(n: usize, times: usize, p: usize, y: Vec<f64>, x: Vec<f64>, mask: Vec<bool>) -> PanelDataset {
        PanelDataset::new(
            n,
            times,
            p,
            y,
            mask,
            x,
            (0..n).map(|i| (i as f64, 0.0)).collect(),
            (0..n).map(|i| i.to_string()).collect(),
            (0..times).map(|i| i.to_string()).collect(),
            (0..p).map(|j| format!("x{j}")).collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_cell_at_mean() {
        let mut st = state_for(1, 1, 0);
        st.theta[0] = 2.5;
        let d = data(1, 1, 0, vec![2.5], vec![], vec![true]);
        let ll = log_likelihood(&st, &d).unwrap();
        assert!((ll.total + 0.5 * LN_2PI).abs() < 1e-15);
    }

    #[test]
    fn four_zero_cells() {
        let st = state_for(2, 2, 0);
        let d = data(2, 2, 0, vec![0.0; 4], vec![], vec![true; 4]);
        let ll = log_likelihood(&st, &d).unwrap();
        assert!((ll.total - 4.0 * (-0.5 * LN_2PI)).abs() < 1e-14);
    }

    #[test]
    fn missing_cells_contribute_zero() {
        let st = state_for(2, 2, 0);
        let d = data(2, 2, 0, vec![0.0, f64::NAN, 0.0, 0.0], vec![], vec![true, false, true, true]);
        let ll = log_likelihood(&st, &d).unwrap();
        assert_eq!(ll.cells[1], 0.0);
        assert!((ll.total - 3.0 * (-0.5 * LN_2PI)).abs() < 1e-14);
    }

    #[test]
    fn matches_naive_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let (n, times, p) = (5, 4, 2);
        let y: Vec<f64> = (0..n * times).map(|_| rng.random_range(-3.0..3.0)).collect();
        let x: Vec<f64> = (0..n * times * p).map(|_| rng.random::<f64>()).collect();
        let d = data(n, times, p, y.clone(), x.clone(), vec![true; n * times]);
        let mut st = state_for(n, times, p);
        st.theta = vec![-1.0, 1.5];
        st.sigma_sq = vec![0.7, 2.2];
        st.beta = vec![0.3, -0.8];
        st.gamma = (0..n).map(|i| 0.1 * i as f64).collect();
        st.s = (0..n * times).map(|c| (c % 2) as u16).collect();
        let mut naive = 0.0;
        for i in 0..n {
            for t in 0..times {
                let c = i * times + t;
                let k = st.s[c] as usize;
                let mu = st.theta[k] + x[c * p] * st.beta[0] + x[c * p + 1] * st.beta[1] + st.gamma[i];
                let s2 = st.sigma_sq[k];
                naive += -0.5 * (2.0 * std::f64::consts::PI * s2).ln() - (y[c] - mu).powi(2) / (2.0 * s2);
            }
        }
        let ll = log_likelihood(&st, &d).unwrap();
        assert!((ll.total - naive).abs() < 1e-12);
    }

    #[test]
    fn nonfinite_names_cell() {
        let mut st = state_for(1, 2, 0);
        st.s[1] = 1;
        st.sigma_sq[1] = 0.0;
        let d = data(1, 2, 0, vec![0.0, 1.0], vec![], vec![true, true]);
        let err = log_likelihood(&st, &d).unwrap_err().to_string();
        assert!(err.contains("station 0, time 1"), "{err}");
    }
}
