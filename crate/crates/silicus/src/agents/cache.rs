//! Content-addressed response cache for remote completions.
//!
//! Each cache entry is one file named by the request's key digest, holding
//! the canonical request and the raw response text, so released run data
//! can be audited against exactly what was sent.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::design::ModelParams;

/// SHA-256 hex digest over the canonical serialization of a request:
/// a JSON object with sorted keys (and therefore LF-free), stable across
/// runs and platforms.
pub fn cache_key(backend_id: &str, params: &ModelParams, prompt: &str, trial_seed: u64) -> String {
    let canonical = canonical_request(backend_id, params, prompt, trial_seed);
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    hex::encode(hasher.finalize())
}

pub fn canonical_request(
    backend_id: &str,
    params: &ModelParams,
    prompt: &str,
    trial_seed: u64,
) -> String {
    // serde_json object keys are BTreeMap-sorted, which makes this canonical.
    let value = serde_json::json!({
        "backend_id": backend_id,
        "max_tokens": params.max_tokens,
        "model_name": params.model_name,
        "prompt": prompt,
        "temperature": params.temperature,
        "trial_seed": trial_seed,
    });
    serde_json::to_string(&value).expect("request serializes")
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    request: String,
    response: String,
}

/// A directory of cache entries keyed by [`cache_key`]. Inserts are atomic
/// (write to a temp file, then rename), so concurrent writers of the same
/// key cannot tear an entry.
#[derive(Clone, Debug)]
pub struct FileCache {
    dir: PathBuf,
}

impl FileCache {
    pub fn new(dir: impl Into<PathBuf>) -> std::io::Result<FileCache> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(FileCache { dir })
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(key)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let text = fs::read_to_string(self.entry_path(key)).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        Some(entry.response)
    }

    pub fn put(&self, key: &str, request: &str, response: &str) -> std::io::Result<()> {
        let entry = CacheEntry {
            request: request.to_string(),
            response: response.to_string(),
        };
        let tmp = self.dir.join(format!(".{key}.tmp{}", std::process::id()));
        {
            let mut file = fs::File::create(&tmp)?;
            file.write_all(serde_json::to_string(&entry)?.as_bytes())?;
            file.flush()?;
        }
        fs::rename(&tmp, self.entry_path(key))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn digest_is_64_lowercase_hex_chars() {
        let key = cache_key("llm", &params(), "hello", 1);
        assert_eq!(key.len(), 64);
        assert!(key.chars().all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase()));
    }

    #[test]
    fn equal_inputs_give_equal_digests() {
        let a = cache_key("llm", &params(), "hello", 1);
        let b = cache_key("llm", &params(), "hello", 1);
        assert_eq!(a, b);
    }

    #[test]
    fn one_character_difference_changes_the_digest() {
        let a = cache_key("llm", &params(), "hello", 1);
        let b = cache_key("llm", &params(), "hellp", 1);
        assert_ne!(a, b);
        let c = cache_key("llm", &params(), "hello", 2);
        assert_ne!(a, c);
    }

    #[test]
    fn round_trips_through_the_file_store() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FileCache::new(dir.path()).unwrap();
        let key = cache_key("llm", &params(), "prompt", 0);
        assert_eq!(cache.get(&key), None);
        cache
            .put(&key, &canonical_request("llm", &params(), "prompt", 0), "Left")
            .unwrap();
        assert_eq!(cache.get(&key), Some("Left".to_string()));
    }
}
