//! Backend sampling parameters and run manifests.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// Sampling parameters sent to a completion backend.
/// Temperature 0 requests deterministic sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            model_name: "text-davinci-003".into(),
            temperature: 0.0,
            max_tokens: 64,
        }
    }
}

/// Everything needed to reproduce a run. With the scripted backend, two
/// runs sharing a manifest produce identical trial outcome sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub experiment_id: String,
    pub backend_id: String,
    pub model_params: ModelParams,
    pub master_seed: u64,
    pub replication_count: u32,
    pub planned_trials: usize,
    pub created_at: DateTime<Utc>,
    /// SHA-256 hex digest of the canonical experiment config.
    pub config_digest: String,
}
