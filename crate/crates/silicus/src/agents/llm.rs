//! Remote completion backend over HTTP.
//!
//! Speaks a single generic completion shape: POST a JSON body with
//! `model`, `prompt`, `temperature`, and `max_tokens`; read the first
//! completion text from `choices[0].text`. Providers come and go, so
//! anything provider-specific stays behind this one request shape.
//!
//! Retry policy: 429 and 5xx responses are retried with exponential
//! backoff and full jitter (base 1s, factor 2, at most 5 attempts).
//! 401/403 fail immediately. The response cache is consulted before any
//! network call.

use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::design::ModelParams;
use crate::experiments::PlannedTrial;

use super::cache::{cache_key, canonical_request, FileCache};
use super::{AgentBackend, BackendError, CompletionRecord, TokenCounts};

pub const API_KEY_ENV: &str = "SILICUS_API_KEY";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Clone, Debug, PartialEq)]
pub struct RetryPolicy {
    pub base_delay: Duration,
    pub factor: f64,
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            base_delay: Duration::from_secs(1),
            factor: 2.0,
            max_attempts: 5,
        }
    }
}

impl RetryPolicy {
    /// Full-jitter delay before retry number `attempt` (1-based): uniform in
    /// [0, base * factor^(attempt-1)].
    fn delay(&self, attempt: u32, rng: &mut impl Rng) -> Duration {
        let cap = self.base_delay.as_secs_f64() * self.factor.powi(attempt as i32 - 1);
        Duration::from_secs_f64(rng.random_range(0.0..=cap))
    }
}

#[derive(Clone, Debug)]
pub struct LlmClientConfig {
    pub endpoint: String,
    pub api_key: String,
    pub timeout: Duration,
    pub retry: RetryPolicy,
    pub backend_id: String,
}

impl LlmClientConfig {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>) -> LlmClientConfig {
        LlmClientConfig {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            timeout: DEFAULT_TIMEOUT,
            retry: RetryPolicy::default(),
            backend_id: "llm".into(),
        }
    }

    /// Reads the bearer token from `SILICUS_API_KEY`. Fails before any
    /// network call when the variable is missing or empty.
    pub fn from_env(endpoint: impl Into<String>) -> Result<LlmClientConfig, BackendError> {
        let api_key = std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| BackendError::Auth(format!("{API_KEY_ENV} is not set")))?;
        Ok(LlmClientConfig::new(endpoint, api_key))
    }
}

/// HTTP completion client with retries and an optional file cache.
pub struct HttpCompletionClient {
    config: LlmClientConfig,
    agent: ureq::Agent,
    cache: Option<FileCache>,
}

impl HttpCompletionClient {
    pub fn new(config: LlmClientConfig, cache: Option<FileCache>) -> HttpCompletionClient {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        HttpCompletionClient {
            config,
            agent,
            cache,
        }
    }

    /// One completion for (prompt, params, seed), cache-first.
    pub fn complete_prompt(
        &self,
        prompt: &str,
        params: &ModelParams,
        trial_seed: u64,
    ) -> Result<CompletionRecord, BackendError> {
        let started = Instant::now();
        let key = cache_key(&self.config.backend_id, params, prompt, trial_seed);
        if let Some(cache) = &self.cache {
            if let Some(response) = cache.get(&key) {
                return Ok(CompletionRecord {
                    raw_text: response,
                    backend_id: self.config.backend_id.clone(),
                    latency_ms: started.elapsed().as_millis() as u64,
                    token_counts: None,
                    cache_hit: true,
                    attempts: 0,
                });
            }
        }

        let (raw_text, token_counts, attempts) = self.send_with_retries(prompt, params, trial_seed)?;
        if let Some(cache) = &self.cache {
            let request = canonical_request(&self.config.backend_id, params, prompt, trial_seed);
            if let Err(error) = cache.put(&key, &request, &raw_text) {
                // A cold cache never blocks a successful completion.
                eprintln!("warning: cache write failed for {key}: {error}");
            }
        }
        Ok(CompletionRecord {
            raw_text,
            backend_id: self.config.backend_id.clone(),
            latency_ms: started.elapsed().as_millis() as u64,
            token_counts,
            cache_hit: false,
            attempts,
        })
    }

    fn send_with_retries(
        &self,
        prompt: &str,
        params: &ModelParams,
        trial_seed: u64,
    ) -> Result<(String, Option<TokenCounts>, u32), BackendError> {
        let body = serde_json::json!({
            "model": params.model_name,
            "prompt": prompt,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        });
        let mut jitter = ChaCha12Rng::seed_from_u64(trial_seed);
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.send_once(&body) {
                Ok((text, counts)) => return Ok((text, counts, attempt)),
                Err(SendError::Retryable(status)) => {
                    if attempt >= self.config.retry.max_attempts {
                        return Err(if status == 429 {
                            BackendError::RateLimited { attempts: attempt }
                        } else {
                            BackendError::Http {
                                status,
                                attempts: attempt,
                            }
                        });
                    }
                    std::thread::sleep(self.config.retry.delay(attempt, &mut jitter));
                }
                Err(SendError::Fatal(error)) => return Err(error),
            }
        }
    }

    fn send_once(
        &self,
        body: &serde_json::Value,
    ) -> Result<(String, Option<TokenCounts>), SendError> {
        let response = self
            .agent
            .post(&self.config.endpoint)
            .header("authorization", &format!("Bearer {}", self.config.api_key))
            .send_json(body);
        let mut response = match response {
            Ok(response) => response,
            Err(ureq::Error::Timeout(_)) => {
                return Err(SendError::Fatal(BackendError::Timeout(self.config.timeout)))
            }
            Err(error) => return Err(SendError::Fatal(BackendError::Transport(error.to_string()))),
        };
        let status = response.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => {
                return Err(SendError::Fatal(BackendError::Auth(format!(
                    "endpoint returned status {status}"
                ))))
            }
            429 => return Err(SendError::Retryable(429)),
            500..=599 => return Err(SendError::Retryable(status)),
            other => {
                return Err(SendError::Fatal(BackendError::Http {
                    status: other,
                    attempts: 1,
                }))
            }
        }
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| SendError::Fatal(BackendError::Transport(e.to_string())))?;
        let json: serde_json::Value = serde_json::from_str(&text)
            .map_err(|_| SendError::Fatal(BackendError::MalformedResponse("not JSON".into())))?;
        let completion = json
            .get("choices")
            .and_then(|c| c.get(0))
            .and_then(|c| c.get("text"))
            .and_then(|t| t.as_str())
            .ok_or_else(|| {
                SendError::Fatal(BackendError::MalformedResponse(
                    "missing choices[0].text".into(),
                ))
            })?;
        if completion.is_empty() {
            return Err(SendError::Fatal(BackendError::MalformedResponse(
                "empty completion text".into(),
            )));
        }
        let token_counts = json.get("usage").map(|usage| TokenCounts {
            prompt_tokens: usage.get("prompt_tokens").and_then(|v| v.as_u64()).unwrap_or(0),
            completion_tokens: usage
                .get("completion_tokens")
                .and_then(|v| v.as_u64())
                .unwrap_or(0),
        });
        Ok((completion.to_string(), token_counts))
    }
}

enum SendError {
    /// 429 or 5xx: eligible for backoff and retry.
    Retryable(u16),
    Fatal(BackendError),
}

impl AgentBackend for HttpCompletionClient {
    fn backend_id(&self) -> &str {
        &self.config.backend_id
    }

    fn complete(
        &self,
        trial: &PlannedTrial,
        params: &ModelParams,
    ) -> Result<CompletionRecord, BackendError> {
        self.complete_prompt(&trial.prompt, params, trial.spec.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_api_key_fails_before_any_network_call() {
        // Temporarily clear the variable for this process.
        let saved = std::env::var(API_KEY_ENV).ok();
        std::env::remove_var(API_KEY_ENV);
        let result = LlmClientConfig::from_env("http://localhost:9/v1/completions");
        assert!(matches!(result, Err(BackendError::Auth(_))));
        if let Some(value) = saved {
            std::env::set_var(API_KEY_ENV, value);
        }
    }

    #[test]
    fn jitter_delay_is_bounded_by_the_exponential_cap() {
        let policy = RetryPolicy {
            base_delay: Duration::from_millis(100),
            factor: 2.0,
            max_attempts: 5,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for attempt in 1..=4 {
            let cap = Duration::from_millis(100 * 2u64.pow(attempt - 1));
            for _ in 0..50 {
                assert!(policy.delay(attempt, &mut rng) <= cap);
            }
        }
    }
}
