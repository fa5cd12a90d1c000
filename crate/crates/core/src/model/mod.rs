//! Panel data, hyperparameters and chain state.

pub mod config;
pub mod data;
pub mod likelihood;
pub mod state;

#[cfg(test)]
pub(crate) mod test_support;

pub use config::{validate_config, BaseMeasure, ConfigReport, ModelConfig, Violation};
pub use data::PanelDataset;
pub use likelihood::{log_likelihood, CellLogLik};
pub use state::{init_state, AcceptanceRates, ChainState, Latents, PosteriorDraws, RetainedDraw};
