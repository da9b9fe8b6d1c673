//! Human-editable experiment configs and their canonical digest.
//!
//! A config file is JSON with the schema: `experiment_id`, `template_text`,
//! `factors`, `personas`, `reps`, `model_params`, plus an optional
//! `scenarios` section for experiment payloads that are not expressible as
//! bare factor levels (currently dictator-game payoffs).
//!
//! `config_digest` is SHA-256 over the canonical serialized form: JSON with
//! object keys sorted, no insignificant whitespace, LF line endings (the
//! canonical form contains no line breaks, so this holds trivially).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::design::{Factor, FactorGrid, ModelParams, Persona, PromptTemplate};
use crate::experiments::dictator::DictatorScenario;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config '{path}': {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Design(#[from] crate::design::DesignError),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub template_text: String,
    pub factors: Vec<Factor>,
    pub personas: Vec<Persona>,
    pub reps: u32,
    pub model_params: ModelParams,
    /// Experiment-specific payload data keyed by factor level.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scenarios: Vec<DictatorScenario>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    /// Validates the structural invariants a run depends on.
    pub fn validate(&self) -> Result<(), ConfigError> {
        FactorGrid::new(self.factors.clone())?;
        if self.reps == 0 {
            return Err(ConfigError::Invalid("reps must be at least 1".into()));
        }
        if self.personas.is_empty() {
            return Err(ConfigError::Invalid("at least one persona required".into()));
        }
        let mut ids = std::collections::BTreeSet::new();
        for persona in &self.personas {
            if !ids.insert(persona.persona_id.as_str()) {
                return Err(ConfigError::Invalid(format!(
                    "duplicate persona_id '{}'",
                    persona.persona_id
                )));
            }
        }
        if self.model_params.temperature < 0.0 {
            return Err(ConfigError::Invalid("temperature must be >= 0".into()));
        }
        if self.model_params.max_tokens == 0 {
            return Err(ConfigError::Invalid("max_tokens must be positive".into()));
        }
        let template = PromptTemplate::new(&self.template_text);
        let known: std::collections::BTreeSet<String> = self
            .factors
            .iter()
            .map(|f| f.name.clone())
            .chain(["beliefs".to_string()])
            .collect();
        for name in template.required_placeholders() {
            if !known.contains(name) && !self.is_builtin_placeholder(name) {
                return Err(ConfigError::Invalid(format!(
                    "template placeholder '{{{name}}}' matches no factor"
                )));
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for scenario in &self.scenarios {
            scenario.validate().map_err(ConfigError::Invalid)?;
            if !names.insert(scenario.name.as_str()) {
                return Err(ConfigError::Invalid(format!(
                    "duplicate scenario name '{}'",
                    scenario.name
                )));
            }
        }
        Ok(())
    }

    fn is_builtin_placeholder(&self, name: &str) -> bool {
        // Placeholders bound by experiment builders rather than factor levels.
        matches!(
            name,
            "left_to_a" | "left_to_b" | "right_to_a" | "right_to_b" | "framing_text" | "options"
        )
    }

    /// SHA-256 hex digest of the canonical serialized form.
    pub fn digest(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        // serde_json maps are BTreeMaps: re-encoding a Value sorts all keys.
        let canonical = serde_json::to_string(&value).expect("value serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hex::encode(hasher.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::Level;

    fn minimal() -> ExperimentConfig {
        ExperimentConfig {
            experiment_id: "demo".into(),
            template_text: "Price is {price}.".into(),
            factors: vec![Factor::new("price", vec![Level::Number(16.0)])],
            personas: vec![Persona::unendowed("none")],
            reps: 1,
            model_params: ModelParams::default(),
            scenarios: vec![],
        }
    }

    #[test]
    fn digest_is_64_hex_chars_and_stable() {
        let cfg = minimal();
        let d1 = cfg.digest();
        let d2 = cfg.digest();
        assert_eq!(d1, d2);
        assert_eq!(d1.len(), 64);
        assert!(d1.chars().all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase()));
    }

    #[test]
    fn digest_changes_with_any_field() {
        let cfg = minimal();
        let mut other = cfg.clone();
        other.reps = 2;
        assert_ne!(cfg.digest(), other.digest());
    }

    #[test]
    fn empty_factor_fails_validation() {
        let mut cfg = minimal();
        cfg.factors = vec![Factor::new("price", vec![])];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unbound_template_placeholder_fails_validation() {
        let mut cfg = minimal();
        cfg.template_text = "Price is {price}, rate is {rate}.".into();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("rate"));
    }

    #[test]
    fn valid_config_passes() {
        minimal().validate().unwrap();
    }
}
