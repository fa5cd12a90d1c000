//! Stirling-gamma SG(a, b, m) law on the DP concentration parameter,
//! with unnormalized density `α^(a-1) / (α (α+1) ... (α+m-1))^b`.
//!
//! Sampling works on `u = log α`, where the log density
//! `g(u) = a u - b [lnΓ(e^u + m) - lnΓ(e^u)]` is concave. The grid spans the
//! region outside of which the tail mass is below 1e-12 (tails are bounded
//! through the slope at the grid edges), `g` is interpolated linearly between
//! nodes and the resulting piecewise-exponential law is inverted exactly.

use rand::Rng;

use super::special::{digamma, ln_gamma};
use crate::error::{Error, Result};

const GRID_NODES: usize = 2049;
const TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StirlingGammaParams {
    pub a: f64,
    pub b: f64,
    pub m: u64,
}

impl StirlingGammaParams {
    pub fn new(a: f64, b: f64, m: u64) -> Result<Self> {
        let p = Self { a, b, m };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { a, b, m } = *self;
        if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
            return Err(Error::param(format!("Stirling-gamma shapes must be positive, got a={a}, b={b}")));
        }
        if m == 0 {
            return Err(Error::param("Stirling-gamma m must be a positive integer"));
        }
        let ratio = a / b;
        if !(ratio > 1.0 && ratio < m as f64) {
            return Err(Error::param(format!("Stirling-gamma requires 1 < a/b < m, got a/b = {ratio} with m = {m}")));
        }
        Ok(())
    }

    /// Conjugate update after observing `partitions` partitions of `m`
    /// items with `total_clusters` blocks in total.
    pub fn posterior(&self, total_clusters: u64, partitions: u64) -> Self {
        Self { a: self.a + total_clusters as f64, b: self.b + partitions as f64, m: self.m }
    }

    /// Prior mean of the number of clusters among `m` items, `a / b`.
    pub fn expected_clusters(&self) -> f64 {
        self.a / self.b
    }
}

const DIRECT_SUM_MAX: u64 = 256;
const LARGE_ALPHA_RATIO: f64 = 1e3;

/// Power sums `Σ_{r<m} r^k` for `k = 1, 2, 3`.
fn power_sums(m: u64) -> (f64, f64, f64) {
    let m = m as f64;
    let s1 = m * (m - 1.0) / 2.0;
    let s2 = (m - 1.0) * m * (2.0 * m - 1.0) / 6.0;
    (s1, s2, s1 * s1)
}

/// `log Π_{r=0}^{m-1} (α + r)`. Direct sum for small `m`, a series in `1/α`
/// when `α` dwarfs `m`, gamma functions otherwise.
pub fn ln_rising_factorial(alpha: f64, m: u64) -> f64 {
    if m <= DIRECT_SUM_MAX {
        return (0..m).map(|r| (alpha + r as f64).ln()).sum();
    }
    if alpha > LARGE_ALPHA_RATIO * m as f64 {
        let (s1, s2, s3) = power_sums(m);
        let x = alpha.recip();
        return m as f64 * alpha.ln() + x * (s1 - x * (s2 / 2.0 - x * s3 / 3.0));
    }
    ln_gamma(alpha + m as f64) - ln_gamma(alpha)
}

/// `E[K_m | α] = Σ_{r<m} α / (α + r)`.
pub fn expected_clusters_given_alpha(alpha: f64, m: u64) -> f64 {
    if m <= DIRECT_SUM_MAX {
        return (0..m).map(|r| alpha / (alpha + r as f64)).sum();
    }
    if alpha > LARGE_ALPHA_RATIO * m as f64 {
        let (s1, s2, s3) = power_sums(m);
        let x = alpha.recip();
        return m as f64 - x * (s1 - x * (s2 - x * s3));
    }
    alpha * (digamma(alpha + m as f64) - digamma(alpha))
}

/// `(a-1) log α - b Σ_{r<m} log(α + r)`.
pub fn stirling_gamma_log_density_unnorm(alpha: f64, params: &StirlingGammaParams) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::param(format!("Stirling-gamma support is α > 0, got {alpha}")));
    }
    Ok((params.a - 1.0) * alpha.ln() - params.b * ln_rising_factorial(alpha, params.m))
}

/// Precomputed inverse-CDF grid for one parameter triple.
#[derive(Debug, Clone)]
pub struct StirlingGammaGrid {
    params: StirlingGammaParams,
    nodes: Vec<f64>,
    log_dens: Vec<f64>,
    /// normalized cumulative mass at the right end of each cell
    cum: Vec<f64>,
    log_norm: f64,
}

impl StirlingGammaGrid {
    pub fn new(params: StirlingGammaParams) -> Result<Self> {
        params.validate()?;
        let StirlingGammaParams { a, b, m } = params;
        let g = |u: f64| a * u - b * ln_rising_factorial(u.exp(), m);
        let dg = |u: f64| a - b * expected_clusters_given_alpha(u.exp(), m);

        let (mut lo, mut hi) = (-5.0f64, 5.0f64);
        while dg(lo) <= 0.0 && lo > -700.0 {
            lo -= 10.0;
        }
        while dg(hi) >= 0.0 && hi < 700.0 {
            hi += 10.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dg(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 {
                break;
            }
        }
        let mode = 0.5 * (lo + hi);
        let g_mode = g(mode);
        let h = 1e-3;
        let curv = (g(mode + h) - 2.0 * g_mode + g(mode - h)) / (h * h);
        let sd = if curv < 0.0 { (-curv).sqrt().recip() } else { 1.0 };

        // Concavity bounds the tail beyond x by exp(g(x)) / |g'(x)|.
        let scale = sd * (2.0 * std::f64::consts::PI).sqrt();
        let tail_ok = |x: f64| {
            let slope = dg(x).abs();
            slope > 0.0 && (g(x) - g_mode).exp() / slope < TAIL_TOL * scale
        };
        let mut step = sd;
        let mut left = mode - 3.0 * sd;
        while !tail_ok(left) {
            left -= step;
            step *= 1.5;
            if left < -745.0 {
                break;
            }
        }
        let mut step = sd;
        let mut right = mode + 3.0 * sd;
        while !tail_ok(right) {
            right += step;
            step *= 1.5;
            if right > 700.0 {
                break;
            }
        }

        let cells = GRID_NODES - 1;
        let width = (right - left) / cells as f64;
        let nodes: Vec<f64> = (0..GRID_NODES).map(|i| left + width * i as f64).collect();
        let log_dens: Vec<f64> = nodes.iter().map(|&u| g(u) - g_mode).collect();
        if log_dens.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(format!("non-finite Stirling-gamma log density on grid for {params:?}")));
        }

        let mut cum = Vec::with_capacity(cells);
        let mut total = 0.0;
        for i in 0..cells {
            total += cell_mass(log_dens[i], log_dens[i + 1], width);
            cum.push(total);
        }
        for c in &mut cum {
            *c /= total;
        }

        // Simpson's rule on the same nodes for the normalizing constant.
        let mut simpson = log_dens[0].exp() + log_dens[cells].exp();
        for (i, ld) in log_dens.iter().enumerate().take(cells).skip(1) {
            simpson += if i % 2 == 1 { 4.0 } else { 2.0 } * ld.exp();
        }
        simpson *= width / 3.0;
        let log_norm = g_mode + simpson.ln();

        Ok(Self { params, nodes, log_dens, cum, log_norm })
    }

    pub fn params(&self) -> &StirlingGammaParams {
        &self.params
    }

    /// Range of `log α` covered by the grid.
    pub fn log_alpha_range(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    /// Normalized density of α.
    pub fn density(&self, alpha: f64) -> f64 {
        match stirling_gamma_log_density_unnorm(alpha, &self.params) {
            Ok(ld) => (ld - self.log_norm).exp(),
            Err(_) => 0.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let cell = self.cum.partition_point(|&c| c < u).min(self.cum.len() - 1);
        let lower = if cell == 0 { 0.0 } else { self.cum[cell - 1] };
        let span = self.cum[cell] - lower;
        let frac = if span > 0.0 { ((u - lower) / span).clamp(0.0, 1.0) } else { 0.5 };
        let width = self.nodes[1] - self.nodes[0];
        let delta = self.log_dens[cell + 1] - self.log_dens[cell];
        let offset = if delta.abs() < 1e-10 { frac * width } else { width * (frac * delta.exp_m1()).ln_1p() / delta };
        (self.nodes[cell] + offset).exp()
    }
}

fn cell_mass(g0: f64, g1: f64, width: f64) -> f64 {
    let delta = g1 - g0;
    if delta.abs() < 1e-10 {
        width * g0.exp()
    } else {
        width * g0.exp() * delta.exp_m1() / delta
    }
}

pub fn sample_stirling_gamma<R: Rng + ?Sized>(params: &StirlingGammaParams, rng: &mut R) -> Result<f64> {
    Ok(StirlingGammaGrid::new(*params)?.sample(rng))
}
