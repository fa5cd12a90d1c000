//! Run manifests: everything needed to reproduce a fit.

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::panel::SchemaOptions;
use crate::error::{Error, Result};
use crate::model::{AcceptanceRates, ModelConfig, PanelDataset};

/// Hex SHA-256 of the panel content (shape, responses, mask, covariates,
/// coordinates and labels), independent of the file it was read from.
pub fn dataset_fingerprint(data: &PanelDataset) -> String {
    let mut h = Sha256::new();
    for v in [data.n(), data.times(), data.p()] {
        h.update((v as u64).to_le_bytes());
    }
    for v in data.y_values().iter().chain(data.covariates()) {
        h.update(v.to_le_bytes());
    }
    h.update(data.observed_mask().iter().map(|&b| b as u8).collect::<Vec<_>>());
    for &(lat, lon) in data.coords() {
        h.update(lat.to_le_bytes());
        h.update(lon.to_le_bytes());
    }
    for s in data.station_ids.iter().chain(&data.time_labels).chain(&data.covariate_names) {
        h.update((s.len() as u64).to_le_bytes());
        h.update(s.as_bytes());
    }
    hex(&h.finalize())
}

pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    Ok(hex(&Sha256::digest(fs::read(path)?)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Acceptance rates with never-updated entries as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRecord {
    pub lambda: Vec<Option<f64>>,
    pub lambda_mean: Option<f64>,
    pub psi: Option<f64>,
    pub phi: Option<f64>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl From<&AcceptanceRates> for AcceptanceRecord {
    fn from(a: &AcceptanceRates) -> Self {
        Self {
            lambda: a.lambda.iter().copied().map(finite).collect(),
            lambda_mean: finite(a.lambda_mean()),
            psi: finite(a.psi),
            phi: finite(a.phi),
        }
    }
}

impl AcceptanceRecord {
    pub fn to_rates(&self) -> AcceptanceRates {
        let f = |v: Option<f64>| v.unwrap_or(f64::NAN);
        AcceptanceRates { lambda: self.lambda.iter().map(|&v| f(v)).collect(), psi: f(self.psi), phi: f(self.phi) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataRecord {
    pub path: Option<String>,
    pub sha256: String,
    pub n: usize,
    pub times: usize,
    pub p: usize,
    pub observed_cells: usize,
    pub schema: SchemaOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub chain: u64,
    pub draw_file: String,
    pub draws_sha256: String,
    pub retained_draws: usize,
    pub acceptance: AcceptanceRecord,
    pub sampling_minutes: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub sampling_minutes: f64,
    pub post_processing_minutes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub software_version: String,
    pub command: String,
    pub seed: u64,
    pub chains: usize,
    pub store_latents: bool,
    pub config: ModelConfig,
    pub data: DataRecord,
    pub chain_records: Vec<ChainRecord>,
    pub timing: Timing,
}

impl RunManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("bad manifest: {e}")))
    }
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_manifest(manifest: &RunManifest, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| Error::Format(e.to_string()))?;
    write_atomic(path, text.as_bytes())
}
