//! Pluggable agent backends.
//!
//! A backend turns one planned trial into a [`CompletionRecord`]. The
//! scripted backend is a pure function of the trial's scenario payload,
//! objective, and seed; the HTTP backend sends the rendered prompt to a
//! remote completion endpoint with retry, backoff, and response caching.

mod cache;
mod llm;
mod scripted;

pub use cache::{cache_key, FileCache};
pub use llm::{HttpCompletionClient, LlmClientConfig, RetryPolicy, DEFAULT_TIMEOUT};
pub use scripted::{
    scripted_budget_choice, scripted_dictator_choice, scripted_fairness_rating,
    scripted_hiring_choice, RatingTable, ScriptedBackend, ScriptedObjective, ScriptedParams,
    DEFAULT_BIAS_STRENGTH, DEFAULT_EXPERIENCE_VALUE, DEFAULT_WASTE_THRESHOLD,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::ModelParams;
use crate::experiments::PlannedTrial;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("request timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("http status {status} after {attempts} attempts")]
    Http { status: u16, attempts: u32 },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend cannot serve this trial: {0}")]
    Unsupported(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCounts {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// One completion, with enough provenance to audit it later.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub raw_text: String,
    pub backend_id: String,
    pub latency_ms: u64,
    pub token_counts: Option<TokenCounts>,
    pub cache_hit: bool,
    pub attempts: u32,
}

/// A completion backend. Implementations must be safe to call from several
/// worker threads at once.
pub trait AgentBackend: Sync {
    fn backend_id(&self) -> &str;

    /// Produces one completion for a planned trial. The scripted backend
    /// reads the trial's scenario payload and objective; remote backends
    /// read the rendered prompt and the trial seed.
    fn complete(
        &self,
        trial: &PlannedTrial,
        params: &ModelParams,
    ) -> Result<CompletionRecord, BackendError>;
}
