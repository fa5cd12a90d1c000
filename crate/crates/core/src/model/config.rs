//! Hyperparameters and MCMC controls.

use serde::{Deserialize, Serialize};

use crate::model::data::PanelDataset;

/// Every hyperparameter and sampler control of the model.
///
/// `base_theta0` and `base_sigma0_sq` default to the observed response mean
/// and twice its unbiased variance when left unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub sg_a: f64,
    pub sg_b: f64,
    /// Truncation level `H`; the last stick is forced to one.
    pub truncation: usize,
    pub base_theta0: Option<f64>,
    pub base_sigma0_sq: Option<f64>,
    pub base_a0: f64,
    pub base_b0: f64,
    pub a_phi: f64,
    pub b_phi: f64,
    pub a_rho: f64,
    pub b_rho: f64,
    pub a_tau: f64,
    pub b_tau: f64,
    /// Holds `rho^2` fixed at this value instead of sampling it.
    pub rho_sq_fixed: Option<f64>,
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Random-walk step on `atanh(psi)`.
    pub psi_step: f64,
    /// Random-walk step on `log(phi)`.
    pub log_phi_step: f64,
    /// Largest PG count drawn exactly; larger counts use a normal approximation.
    pub pg_exact_threshold: u32,
    /// Window length of the running `lambda` average used for moment matching.
    pub lambda_window: usize,
    /// Ablation: pins every unit to the first cluster and skips the stick and `alpha` blocks.
    pub single_cluster: bool,
    /// Runs the per-stick blocks on the rayon pool. Output is identical either way.
    pub parallel_sticks: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            sg_a: 1.0,
            sg_b: 0.25,
            truncation: 25,
            base_theta0: None,
            base_sigma0_sq: None,
            base_a0: 0.1,
            base_b0: 0.1,
            a_phi: 0.1,
            b_phi: 0.1,
            a_rho: 0.1,
            b_rho: 0.1,
            a_tau: 0.1,
            b_tau: 0.1,
            rho_sq_fixed: None,
            n_iter: 20_000,
            burn_in: 10_000,
            thin: 5,
            seed: 0,
            psi_step: 0.3,
            log_phi_step: 0.5,
            pg_exact_threshold: crate::distributions::polya_gamma::DEFAULT_EXACT_THRESHOLD,
            lambda_window: 50,
            single_cluster: false,
            parallel_sticks: false,
        }
    }
}

/// Base measure `theta ~ N(theta0, theta_var)`, `sigma^2 ~ IG(a0, b0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseMeasure {
    pub theta0: f64,
    pub theta_var: f64,
    pub a0: f64,
    pub b0: f64,
}

impl ModelConfig {
    /// Long-run controls: 200000 iterations, 20000 burn-in, thin 25.
    pub fn long_run() -> Self {
        Self { n_iter: 200_000, burn_in: 20_000, thin: 25, ..Self::default() }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::default()),
            "long" | "long_run" => Some(Self::long_run()),
            _ => None,
        }
    }

    pub fn retained_draws(&self) -> usize {
        if self.n_iter <= self.burn_in || self.thin == 0 {
            0
        } else {
            (self.n_iter - self.burn_in) / self.thin
        }
    }

    /// Resolves the base measure; the kernel `exp{-((theta - theta0) / (2 sigma0))^2}` has variance `2 sigma0^2`.
    pub fn base_measure(&self, data: &PanelDataset) -> BaseMeasure {
        let (mean, var) = data.response_moments();
        let theta0 = self.base_theta0.unwrap_or(mean);
        let sigma0_sq = self.base_sigma0_sq.unwrap_or(2.0 * var.max(1e-12));
        BaseMeasure { theta0, theta_var: 2.0 * sigma0_sq, a0: self.base_a0, b0: self.base_b0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

/// Result of [`validate_config`]: passes when no invariant is violated.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConfigReport {
    pub violations: Vec<Violation>,
}

impl ConfigReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.violations.push(Violation { field: field.to_string(), message: message.into() });
    }

    pub fn summary(&self) -> String {
        self.violations.iter().map(|v| format!("{}: {}", v.field, v.message)).collect::<Vec<_>>().join("; ")
    }
}

/// Checks every configuration invariant against the dataset, naming each violation.
pub fn validate_config(config: &ModelConfig, data: &PanelDataset) -> ConfigReport {
    let mut r = ConfigReport::default();
    let n = data.n() as f64;
    let ratio = config.sg_a / config.sg_b;
    if !(config.sg_a > 0.0 && config.sg_b > 0.0) {
        r.push("sg_a/sg_b", "Stirling-gamma shapes must be positive");
    } else if !(ratio > 1.0 && ratio < n) {
        r.push("sg_a/sg_b", format!("Stirling-gamma constraint 1 < a/b < n violated: a/b = {ratio}, n = {n}"));
    }
    if config.truncation < 2 {
        r.push("truncation", format!("H must be at least 2 (got {})", config.truncation));
    }
    if config.truncation > u16::MAX as usize {
        r.push("truncation", "H exceeds the 16-bit label range");
    }
    let positives = [
        ("base_a0", config.base_a0),
        ("base_b0", config.base_b0),
        ("a_phi", config.a_phi),
        ("b_phi", config.b_phi),
        ("a_rho", config.a_rho),
        ("b_rho", config.b_rho),
        ("a_tau", config.a_tau),
        ("b_tau", config.b_tau),
        ("psi_step", config.psi_step),
        ("log_phi_step", config.log_phi_step),
    ];
    for (name, v) in positives {
        if !(v > 0.0 && v.is_finite()) {
            r.push(name, format!("must be positive and finite (got {v})"));
        }
    }
    if let Some(v) = config.base_sigma0_sq {
        if !(v > 0.0 && v.is_finite()) {
            r.push("base_sigma0_sq", format!("must be positive (got {v})"));
        }
    }
    if let Some(v) = config.base_theta0 {
        if !v.is_finite() {
            r.push("base_theta0", "must be finite");
        }
    }
    if let Some(v) = config.rho_sq_fixed {
        if !(v > 0.0 && v.is_finite()) {
            r.push("rho_sq_fixed", format!("must be positive (got {v})"));
        }
    }
    if config.n_iter == 0 {
        r.push("n_iter", "must be positive");
    }
    if config.thin == 0 {
        r.push("thin", "must be positive");
    }
    if config.burn_in >= config.n_iter {
        r.push("burn_in", format!("must be below n_iter ({} >= {})", config.burn_in, config.n_iter));
    } else if config.thin > 0 && config.retained_draws() == 0 {
        r.push("thin", "no draws would be retained after burn-in");
    }
    if config.pg_exact_threshold == 0 {
        r.push("pg_exact_threshold", "must be at least 1");
    }
    if config.lambda_window == 0 {
        r.push("lambda_window", "must be at least 1");
    }
    if data.observed_count() == 0 {
        r.push("data", "panel has no observed cells");
    }
    r
}
