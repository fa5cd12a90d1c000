//! Metropolis-within-Gibbs sampler.
//!
//! Sweep order: memberships, stick workspace, Pólya-gamma augmentation,
//! `lambda`, `eps`, weights, `alpha`, atoms, regression, spatial effects, `psi`.

pub mod alpha;
pub mod atoms;
pub mod memberships;
pub mod psi;
pub mod regression;
pub mod runner;
pub mod spatial;
pub mod sticks;
pub mod workspace;

pub use alpha::update_alpha;
pub use atoms::update_atoms;
pub use memberships::{membership_probs, update_memberships};
pub use psi::update_psi;
pub use regression::update_regression;
pub use runner::{check_state_invariants, run_chain, run_chain_with, run_chains, GibbsSampler, Progress, RunOptions};
pub use spatial::update_spatial;
pub use sticks::{compute_weights, update_epsilon, update_lambda, update_pg_augmentation, LambdaAdapter};
pub use workspace::StickUpdateWorkspace;
