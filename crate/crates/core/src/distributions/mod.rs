//! Samplers and densities for the special laws used by the Gibbs sampler.

pub mod ar1;
pub mod logistic_beta;
pub mod mvn;
pub mod polya;
pub mod polya_gamma;
pub mod special;
pub mod stirling_gamma;

pub use ar1::{ar1_precision, Ar1Kernel};
pub use logistic_beta::{logistic_beta_density, logistic_beta_log_density, LogisticBetaParams};
pub use mvn::sample_mvn_precision;
pub use polya::{polya_mean, sample_polya, Polya};
pub use polya_gamma::{pg_mean, pg_variance, sample_polya_gamma};
pub use stirling_gamma::{
    sample_stirling_gamma, stirling_gamma_log_density_unnorm, StirlingGammaGrid, StirlingGammaParams,
};
