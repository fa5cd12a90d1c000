//! Bayesian nonparametric dynamic clustering of panel data with the
//! autoregressive logistic-beta Stirling-gamma process.
//!
//! The crate covers special-distribution samplers, the model state, a seeded
//! Metropolis-within-Gibbs runner, label-invariant posterior summaries,
//! synthetic scenarios and file formats.

pub mod analysis;
pub mod distributions;
pub mod error;
pub mod geo;
pub mod io;
pub mod linalg;
pub mod model;
pub mod sampler;
pub mod simulation;

pub use error::{Block, Error, Result};
pub use model::{ChainState, ModelConfig, PanelDataset, PosteriorDraws};
