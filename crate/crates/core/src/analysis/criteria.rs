//! Predictive model-comparison criteria from per-cell log-likelihood draws.
//! Both are on the deviance scale, so lower is better.

use serde::Serialize;

use crate::distributions::special::log_sum_exp;
use crate::error::{Error, Result};

/// Draws x cells log-likelihood matrix, row-major.
#[derive(Debug, Clone, Copy)]
pub struct LogLikMatrix<'a> {
    pub values: &'a [f64],
    pub draws: usize,
    pub cells: usize,
}

impl<'a> LogLikMatrix<'a> {
    pub fn new(values: &'a [f64], draws: usize, cells: usize) -> Result<Self> {
        if values.len() != draws * cells {
            return Err(Error::input(format!(
                "log-likelihood matrix has {} entries, expected {draws} x {cells}",
                values.len()
            )));
        }
        if draws == 0 {
            return Err(Error::input("log-likelihood matrix has no draws"));
        }
        Ok(Self { values, draws, cells })
    }

    fn column(&self, c: usize) -> Vec<f64> {
        (0..self.draws).map(|d| self.values[d * self.cells + c]).collect()
    }

    fn check_finite(&self) -> Result<()> {
        if let Some(pos) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::numerical(format!(
                "non-finite log-likelihood at draw {}, cell {}",
                pos / self.cells,
                pos % self.cells
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaicResult {
    pub waic: f64,
    pub lppd: f64,
    pub p_waic: f64,
    /// Per-cell contribution `-2 (lppd_i - p_i)`.
    pub pointwise: Vec<f64>,
}

/// `-2 sum_i [log mean_s exp(ll_si) - var_s(ll_si)]` with the unbiased variance.
pub fn waic(ll: LogLikMatrix<'_>) -> Result<WaicResult> {
    ll.check_finite()?;
    let s = ll.draws as f64;
    let mut pointwise = Vec::with_capacity(ll.cells);
    let (mut lppd, mut p_waic) = (0.0, 0.0);
    for c in 0..ll.cells {
        let col = ll.column(c);
        let lp = log_sum_exp(&col) - s.ln();
        let mean = col.iter().sum::<f64>() / s;
        let var = if ll.draws > 1 { col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s - 1.0) } else { 0.0 };
        lppd += lp;
        p_waic += var;
        pointwise.push(-2.0 * (lp - var));
    }
    Ok(WaicResult { waic: -2.0 * (lppd - p_waic), lppd, p_waic, pointwise })
}

/// Generalized Pareto shape `k` and scale `sigma` fitted by probability-weighted moments.
pub fn fit_gpd_pwm(exceedances: &[f64]) -> Option<(f64, f64)> {
    let n = exceedances.len();
    if n < 2 {
        return None;
    }
    let mut x = exceedances.to_vec();
    x.sort_by(f64::total_cmp);
    let nf = n as f64;
    let a0 = x.iter().sum::<f64>() / nf;
    let a1 = x.iter().enumerate().map(|(j, v)| (nf - 1.0 - j as f64) / (nf - 1.0) * v).sum::<f64>() / nf;
    let denom = a0 - 2.0 * a1;
    if !(denom > 0.0) || !(a0 > 0.0) {
        return None;
    }
    let k = 2.0 - a0 / denom;
    let sigma = 2.0 * a0 * a1 / denom;
    (k.is_finite() && sigma > 0.0).then_some((k, sigma))
}

/// Quantile function of the generalized Pareto law with location 0.
pub fn gpd_quantile(p: f64, k: f64, sigma: f64) -> f64 {
    if k.abs() < 1e-12 {
        -sigma * (-p).ln_1p()
    } else {
        sigma / k * ((-k * (-p).ln_1p()).exp() - 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LooResult {
    pub looic: f64,
    pub elpd: f64,
    /// Per-cell `-2 log p(y_i | y_-i)`.
    pub pointwise: Vec<f64>,
    pub pareto_k: Vec<f64>,
    /// Cells that fell back to plain importance sampling.
    pub plain_is: Vec<usize>,
    pub warnings: Vec<String>,
}

impl LooResult {
    pub fn max_k(&self) -> f64 {
        self.pareto_k.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub const PARETO_TAIL_FRACTION: f64 = 0.2;
pub const PARETO_MIN_TAIL: usize = 25;
pub const PARETO_K_WARN: f64 = 0.7;

/// Smoothed log importance weights of one cell and its Pareto `k`.
/// `None` when the ratios are degenerate and plain weights are kept.
fn psis_smooth(log_ratios: &[f64]) -> (Vec<f64>, Option<f64>) {
    let s = log_ratios.len();
    let max = log_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = log_ratios.iter().map(|v| (v - max).exp()).collect();
    let tail = ((PARETO_TAIL_FRACTION * s as f64).ceil() as usize).max(PARETO_MIN_TAIL);
    if tail >= s {
        return (w, None);
    }
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| w[a].total_cmp(&w[b]));
    let threshold = w[order[s - tail - 1]];
    let tail_idx = &order[s - tail..];
    let exceed: Vec<f64> = tail_idx.iter().map(|&i| w[i] - threshold).collect();
    if exceed.iter().all(|&e| e <= 0.0) {
        return (w, None);
    }
    let Some((k, sigma)) = fit_gpd_pwm(&exceed) else {
        return (w, None);
    };
    for (z, &i) in tail_idx.iter().enumerate() {
        let p = (z as f64 + 0.5) / tail as f64;
        w[i] = (threshold + gpd_quantile(p, k, sigma)).min(1.0);
    }
    let mean = w.iter().sum::<f64>() / s as f64;
    let cap = (s as f64).powf(0.75) * mean;
    for v in w.iter_mut() {
        *v = v.min(cap);
    }
    (w, Some(k))
}

/// Pareto-smoothed importance-sampling leave-one-out criterion.
pub fn psis_loo(ll: LogLikMatrix<'_>) -> Result<LooResult> {
    ll.check_finite()?;
    let mut warnings = Vec::new();
    if ll.draws < 100 {
        warnings.push(format!("only {} draws; PSIS-LOO is unreliable below 100", ll.draws));
    }
    let mut pointwise = Vec::with_capacity(ll.cells);
    let mut pareto_k = Vec::with_capacity(ll.cells);
    let mut plain_is = Vec::new();
    let mut elpd = 0.0;
    for c in 0..ll.cells {
        let col = ll.column(c);
        let log_ratios: Vec<f64> = col.iter().map(|v| -v).collect();
        let spread = log_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - log_ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let (w, k) = if spread < 1e-12 { (vec![1.0; ll.draws], None) } else { psis_smooth(&log_ratios) };
        if k.is_none() {
            plain_is.push(c);
        }
        let k = k.unwrap_or(0.0);
        pareto_k.push(k);
        let lw: Vec<f64> = w.iter().map(|v| v.ln()).collect();
        let num: Vec<f64> = lw.iter().zip(&col).map(|(a, b)| a + b).collect();
        let loo = log_sum_exp(&num) - log_sum_exp(&lw);
        elpd += loo;
        pointwise.push(-2.0 * loo);
    }
    let bad = pareto_k.iter().filter(|&&k| k > PARETO_K_WARN).count();
    if bad > 0 {
        warnings.push(format!("{bad} cells have Pareto k above {PARETO_K_WARN}"));
    }
    if !plain_is.is_empty() {
        warnings.push(format!("{} cells had degenerate ratios; plain importance sampling used", plain_is.len()));
    }
    Ok(LooResult { looic: -2.0 * elpd, elpd, pointwise, pareto_k, plain_is, warnings })
}

/// Counts of Pareto `k` in the bins `(-inf, 0.5]`, `(0.5, 0.7]`, `(0.7, 1]`, `(1, inf)`.
pub fn pareto_k_histogram(ks: &[f64]) -> [usize; 4] {
    let mut h = [0; 4];
    for &k in ks {
        let b = if k <= 0.5 {
            0
        } else if k <= 0.7 {
            1
        } else if k <= 1.0 {
            2
        } else {
            3
        };
        h[b] += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_loglik_has_no_penalty() {
        let v = vec![-1.3; 10];
        let r = waic(LogLikMatrix::new(&v, 10, 1).unwrap()).unwrap();
        assert!((r.waic - 2.6).abs() < 1e-12);
        let l = psis_loo(LogLikMatrix::new(&v, 10, 1).unwrap()).unwrap();
        assert!((l.looic - 2.6).abs() < 1e-12);
    }

    #[test]
    fn two_draw_hand_arithmetic() {
        let v = vec![0.0, -2.0];
        let r = waic(LogLikMatrix::new(&v, 2, 1).unwrap()).unwrap();
        let lppd = ((1.0 + (-2.0f64).exp()) / 2.0).ln();
        assert!((r.waic - (-2.0 * (lppd - 2.0))).abs() < 1e-12);
    }

    #[test]
    fn matches_unstabilized_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (d, c) = (40, 7);
        let v: Vec<f64> = (0..d * c).map(|_| rng.random_range(-4.0..0.5)).collect();
        let r = waic(LogLikMatrix::new(&v, d, c).unwrap()).unwrap();
        let mut naive = 0.0;
        for j in 0..c {
            let col: Vec<f64> = (0..d).map(|s| v[s * c + j]).collect();
            let lp = (col.iter().map(|x| x.exp()).sum::<f64>() / d as f64).ln();
            let m = col.iter().sum::<f64>() / d as f64;
            let var = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (d as f64 - 1.0);
            naive += -2.0 * (lp - var);
        }
        assert!((r.waic - naive).abs() < 1e-10);
    }

    #[test]
    fn nonfinite_cell_is_named() {
        let v = vec![0.0, f64::NAN, -1.0, -1.0];
        let err = waic(LogLikMatrix::new(&v, 2, 2).unwrap()).unwrap_err().to_string();
        assert!(err.contains("cell 1"), "{err}");
    }

    #[test]
    fn pwm_recovers_known_gpd() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for &(k, sigma) in &[(0.3, 2.0), (0.5, 1.0), (-0.2, 1.5)] {
            let x: Vec<f64> = (0..100_000).map(|_| gpd_quantile(rng.random::<f64>(), k, sigma)).collect();
            let (kh, sh) = fit_gpd_pwm(&x).unwrap();
            assert!((kh - k).abs() < 0.05 * f64::abs(k), "k {kh} vs {k}");
            assert!((sh - sigma).abs() < 0.05 * sigma, "sigma {sh} vs {sigma}");
        }
    }

    #[test]
    fn every_cell_gets_finite_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (d, c) = (400, 5);
        let v: Vec<f64> = (0..d * c).map(|_| -0.5 * rng.random::<f64>().powi(2) * 6.0).collect();
        let l = psis_loo(LogLikMatrix::new(&v, d, c).unwrap()).unwrap();
        assert_eq!(l.pareto_k.len(), c);
        assert!(l.pareto_k.iter().all(|k| k.is_finite()));
        assert!(l.looic.is_finite());
    }
}
