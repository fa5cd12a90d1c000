//! File formats: panel CSV, TOML configuration, binary draws, manifests and
//! summary tables.

mod draws;
mod manifest;
mod panel;
mod tables;

use std::path::Path;

pub use draws::{
    load_draws, read_draws, save_draws, write_draws, write_membership_csv, write_parameter_csv, MAGIC, VERSION,
};
pub use manifest::{
    dataset_fingerprint, file_sha256, write_atomic, write_manifest, AcceptanceRecord, ChainRecord, DataRecord,
    RunManifest, Timing,
};
pub use panel::{circular_encoding, load_panel_csv, read_panel_csv, save_panel_csv, write_panel_csv, SchemaOptions};
pub use tables::{
    read_partition_csv, write_cocluster_csv, write_criteria_csv, write_lagged_ari_csv, write_partition_csv,
};

use crate::error::{Error, Result};
use crate::model::ModelConfig;

pub fn parse_config(text: &str) -> Result<ModelConfig> {
    toml::from_str(text).map_err(|e| Error::Format(format!("bad config: {e}")))
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ModelConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// Every field written explicitly, optional ones included as comments when unset.
pub fn config_to_toml(config: &ModelConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| Error::Format(e.to_string()))
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<SchemaOptions> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Format(format!("bad schema: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(parse_config("sg_a = 2.0\nbogus = 1\n").is_err());
        let c = parse_config("sg_a = 2.0\n").unwrap();
        assert_eq!(c.sg_a, 2.0);
        assert_eq!(c.truncation, ModelConfig::default().truncation);
    }

    #[test]
    fn config_text_round_trip() {
        let c = ModelConfig { rho_sq_fixed: Some(0.5), seed: 9, ..ModelConfig::default() };
        assert_eq!(parse_config(&config_to_toml(&c).unwrap()).unwrap(), c);
    }
}
