//! Append-only persistence of trials and manifests.
//!
//! Layout per run: `runs/<run_id>/{manifest.json, trials.jsonl, report.json}`.
//! The trials file holds one self-describing JSON record per line and is
//! only ever appended to; a run is complete when its trial count equals the
//! manifest's planned count. One writer per run, enforced by a lock file.

mod lock;
mod runner;

pub use lock::RunLock;
pub use runner::{execute_run, RunReport};

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{OutcomeRecord, OutcomeRow};
use crate::design::RunManifest;
use crate::parsing::{Outcome, ParseError, ParseMode, OutcomeKind};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRIALS_FILE: &str = "trials.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("another writer holds the lock for run '{0}'")]
    Locked(String),
    #[error("run '{0}' not found")]
    RunNotFound(String),
    #[error("run '{run_id}' already exists with a different manifest ({field} differs)")]
    ManifestMismatch { run_id: String, field: String },
    #[error("store io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt store file {path}: {message}")]
    Corrupt { path: String, message: String },
}

/// How one trial ended: a parsed outcome, an unparseable completion, or a
/// backend failure after retries. Failed trials stay in the record so
/// attrition is measurable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrialResult {
    Parsed {
        outcome: Outcome,
        outcome_label: String,
        mode_used: ParseMode,
        matched_start: usize,
        matched_end: usize,
    },
    ParseFailed {
        reason: ParseError,
    },
    BackendFailed {
        error: String,
    },
}

/// One persisted trial. Immutable once written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub run_id: String,
    pub trial_id: String,
    pub trial_index: usize,
    pub assignments: Vec<(String, String)>,
    pub persona_id: String,
    pub rep_index: u32,
    pub seed: u64,
    pub prompt: String,
    pub raw_response: Option<String>,
    pub result: TrialResult,
    pub backend_id: String,
    pub latency_ms: u64,
    pub cache_hit: bool,
    pub attempts: u32,
    pub finished_at: DateTime<Utc>,
}

impl TrialRecord {
    /// Reduction used by the analysis layer; parse failures yield None.
    pub fn outcome_record(&self, kind: OutcomeKind) -> Option<OutcomeRecord> {
        match &self.result {
            TrialResult::Parsed { outcome_label, .. } => Some(OutcomeRecord {
                assignments: self.assignments.clone(),
                persona_id: self.persona_id.clone(),
                outcome_kind: kind,
                outcome_label: outcome_label.clone(),
            }),
            _ => None,
        }
    }

    pub fn outcome_row(&self) -> OutcomeRow {
        let (outcome_label, parse_mode, error) = match &self.result {
            TrialResult::Parsed {
                outcome_label,
                mode_used,
                ..
            } => (
                Some(outcome_label.clone()),
                Some(format!("{mode_used:?}").to_lowercase()),
                None,
            ),
            TrialResult::ParseFailed { reason } => (None, None, Some(reason.to_string())),
            TrialResult::BackendFailed { error } => (None, None, Some(error.clone())),
        };
        OutcomeRow {
            trial_id: self.trial_id.clone(),
            assignments: self.assignments.clone(),
            persona_id: self.persona_id.clone(),
            outcome_label,
            parse_mode,
            error,
        }
    }
}

/// Deterministic trial id from the plan position.
pub fn trial_id(trial_index: usize) -> String {
    format!("t{trial_index:06}")
}

/// A directory of runs.
#[derive(Clone, Debug)]
pub struct RunStore {
    root: PathBuf,
}

impl RunStore {
    pub fn new(root: impl Into<PathBuf>) -> RunStore {
        RunStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn run_dir(&self, run_id: &str) -> PathBuf {
        self.root.join(run_id)
    }

    pub fn run_exists(&self, run_id: &str) -> bool {
        self.run_dir(run_id).join(MANIFEST_FILE).exists()
    }

    /// Creates the run directory and manifest, or verifies that an existing
    /// manifest matches (so a re-invocation resumes instead of clobbering).
    pub fn init_run(&self, manifest: &RunManifest) -> Result<(), StoreError> {
        let dir = self.run_dir(&manifest.run_id);
        fs::create_dir_all(&dir)?;
        let path = dir.join(MANIFEST_FILE);
        if path.exists() {
            let existing = self.read_manifest(&manifest.run_id)?;
            let field = if existing.config_digest != manifest.config_digest {
                Some("config_digest")
            } else if existing.master_seed != manifest.master_seed {
                Some("master_seed")
            } else if existing.backend_id != manifest.backend_id {
                Some("backend_id")
            } else if existing.planned_trials != manifest.planned_trials {
                Some("planned_trials")
            } else {
                None
            };
            if let Some(field) = field {
                return Err(StoreError::ManifestMismatch {
                    run_id: manifest.run_id.clone(),
                    field: field.to_string(),
                });
            }
            return Ok(());
        }
        let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        fs::write(path, json)?;
        Ok(())
    }

    /// Writes the canonical config next to the manifest (the exact bytes
    /// the manifest's digest covers). A no-op when the file already exists.
    pub fn write_config(
        &self,
        run_id: &str,
        config: &crate::config::ExperimentConfig,
    ) -> Result<(), StoreError> {
        let path = self.run_dir(run_id).join(CONFIG_FILE);
        if path.exists() {
            return Ok(());
        }
        let value = serde_json::to_value(config).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        fs::write(path, canonical)?;
        Ok(())
    }

    pub fn read_config(&self, run_id: &str) -> Result<crate::config::ExperimentConfig, StoreError> {
        let path = self.run_dir(run_id).join(CONFIG_FILE);
        if !path.exists() {
            return Err(StoreError::RunNotFound(run_id.to_string()));
        }
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn read_manifest(&self, run_id: &str) -> Result<RunManifest, StoreError> {
        let path = self.run_dir(run_id).join(MANIFEST_FILE);
        if !path.exists() {
            return Err(StoreError::RunNotFound(run_id.to_string()));
        }
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Reads all complete trial records. A torn final line (no trailing
    /// newline, or unparseable) is detected, reported, and dropped; the
    /// file is truncated back to the valid prefix so appends stay clean.
    /// A torn line anywhere else is corruption and an error.
    pub fn read_trials(&self, run_id: &str) -> Result<Vec<TrialRecord>, StoreError> {
        let path = self.run_dir(run_id).join(TRIALS_FILE);
        if !path.exists() {
            return Ok(Vec::new());
        }
        let file = fs::File::open(&path)?;
        let mut reader = BufReader::new(file);
        let mut records = Vec::new();
        let mut valid_bytes: u64 = 0;
        let mut line = String::new();
        loop {
            line.clear();
            let read = reader.read_line(&mut line)?;
            if read == 0 {
                break;
            }
            let complete = line.ends_with('\n');
            match serde_json::from_str::<TrialRecord>(line.trim_end()) {
                Ok(record) if complete => {
                    valid_bytes += read as u64;
                    records.push(record);
                }
                _ => {
                    // Only the final line may be torn.
                    let mut probe = String::new();
                    if reader.read_line(&mut probe)? != 0 {
                        return Err(StoreError::Corrupt {
                            path: path.display().to_string(),
                            message: "unparseable record before end of file".into(),
                        });
                    }
                    let file = fs::OpenOptions::new().write(true).open(&path)?;
                    file.set_len(valid_bytes)?;
                    break;
                }
            }
        }
        Ok(records)
    }

    /// Opens the trials file for appending.
    pub fn open_appender(&self, run_id: &str) -> Result<TrialAppender, StoreError> {
        let path = self.run_dir(run_id).join(TRIALS_FILE);
        let file = fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(TrialAppender { file })
    }

    pub fn write_report(&self, run_id: &str, report: &RunReport) -> Result<(), StoreError> {
        let json = serde_json::to_string_pretty(report).expect("report serializes");
        fs::write(self.run_dir(run_id).join(REPORT_FILE), json)?;
        Ok(())
    }

    pub fn read_report(&self, run_id: &str) -> Result<RunReport, StoreError> {
        let path = self.run_dir(run_id).join(REPORT_FILE);
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// All runs in the store, sorted by run id.
    pub fn list_runs(&self) -> Result<Vec<RunManifest>, StoreError> {
        let mut manifests = Vec::new();
        if !self.root.exists() {
            return Ok(manifests);
        }
        for entry in fs::read_dir(&self.root)? {
            let entry = entry?;
            if !entry.file_type()?.is_dir() {
                continue;
            }
            let run_id = entry.file_name().to_string_lossy().to_string();
            if self.run_exists(&run_id) {
                manifests.push(self.read_manifest(&run_id)?);
            }
        }
        manifests.sort_by(|a, b| a.run_id.cmp(&b.run_id));
        Ok(manifests)
    }

    pub fn lock_run(&self, run_id: &str) -> Result<RunLock, StoreError> {
        fs::create_dir_all(self.run_dir(run_id))?;
        RunLock::acquire(self.run_dir(run_id), run_id)
    }
}

/// Serializes one record per line; each line is flushed before the next
/// write so a crash can tear at most the final line.
pub struct TrialAppender {
    file: fs::File,
}

impl TrialAppender {
    pub fn append(&mut self, record: &TrialRecord) -> Result<(), StoreError> {
        let mut line = serde_json::to_string(record).expect("record serializes");
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::ModelParams;
    use crate::parsing::Choice;

    fn manifest(run_id: &str) -> RunManifest {
        RunManifest {
            run_id: run_id.into(),
            experiment_id: "charness_rabin".into(),
            backend_id: "scripted".into(),
            model_params: ModelParams::default(),
            master_seed: 1,
            replication_count: 1,
            planned_trials: 2,
            created_at: Utc::now(),
            config_digest: "ab".repeat(32),
        }
    }

    fn record(run_id: &str, index: usize) -> TrialRecord {
        TrialRecord {
            run_id: run_id.into(),
            trial_id: trial_id(index),
            trial_index: index,
            assignments: vec![("scenario".into(), "Berk29".into())],
            persona_id: "selfish".into(),
            rep_index: 0,
            seed: 42,
            prompt: "Do you choose Left or Right?".into(),
            raw_response: Some("Right".into()),
            result: TrialResult::Parsed {
                outcome: Outcome::BinaryChoice { choice: Choice::Right },
                outcome_label: "Right".into(),
                mode_used: ParseMode::Strict,
                matched_start: 0,
                matched_end: 5,
            },
            backend_id: "scripted".into(),
            latency_ms: 0,
            cache_hit: false,
            attempts: 1,
            finished_at: Utc::now(),
        }
    }

    #[test]
    fn init_read_append_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::new(dir.path());
        let m = manifest("run-a");
        store.init_run(&m).unwrap();
        assert_eq!(store.read_manifest("run-a").unwrap().run_id, "run-a");

        let mut appender = store.open_appender("run-a").unwrap();
        appender.append(&record("run-a", 0)).unwrap();
        appender.append(&record("run-a", 1)).unwrap();
        drop(appender);

        let trials = store.read_trials("run-a").unwrap();
        assert_eq!(trials.len(), 2);
        assert_eq!(trials[0].trial_id, "t000000");
    }

    #[test]
    fn reinit_with_matching_manifest_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::new(dir.path());
        let m = manifest("run-a");
        store.init_run(&m).unwrap();
        store.init_run(&m).unwrap();
    }

    #[test]
    fn reinit_with_different_seed_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::new(dir.path());
        let m = manifest("run-a");
        store.init_run(&m).unwrap();
        let mut other = m.clone();
        other.master_seed = 2;
        assert!(matches!(
            store.init_run(&other),
            Err(StoreError::ManifestMismatch { .. })
        ));
    }

    #[test]
    fn torn_final_line_is_dropped_and_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::new(dir.path());
        store.init_run(&manifest("run-a")).unwrap();
        let mut appender = store.open_appender("run-a").unwrap();
        appender.append(&record("run-a", 0)).unwrap();
        drop(appender);

        // Simulate a crash mid-write.
        let path = store.run_dir("run-a").join(TRIALS_FILE);
        let full = fs::read_to_string(&path).unwrap();
        fs::write(&path, format!("{full}{{\"run_id\":\"run-a\",\"trial")).unwrap();

        let trials = store.read_trials("run-a").unwrap();
        assert_eq!(trials.len(), 1);
        // The torn tail is gone; the valid prefix is untouched.
        assert_eq!(fs::read_to_string(&path).unwrap(), full);

        // Appending after recovery keeps the file parseable.
        let mut appender = store.open_appender("run-a").unwrap();
        appender.append(&record("run-a", 1)).unwrap();
        drop(appender);
        assert_eq!(store.read_trials("run-a").unwrap().len(), 2);
    }

    #[test]
    fn torn_middle_line_is_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::new(dir.path());
        store.init_run(&manifest("run-a")).unwrap();
        let path = store.run_dir("run-a").join(TRIALS_FILE);
        fs::write(&path, "not json\n{\"also\":\"bad\"}\n").unwrap();
        assert!(matches!(
            store.read_trials("run-a"),
            Err(StoreError::Corrupt { .. })
        ));
    }

    #[test]
    fn missing_run_is_a_not_found_error() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::new(dir.path());
        assert!(matches!(
            store.read_manifest("nope"),
            Err(StoreError::RunNotFound(_))
        ));
    }

    #[test]
    fn list_runs_sorted_by_id() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::new(dir.path());
        store.init_run(&manifest("run-b")).unwrap();
        store.init_run(&manifest("run-a")).unwrap();
        let runs = store.list_runs().unwrap();
        let ids: Vec<&str> = runs.iter().map(|m| m.run_id.as_str()).collect();
        assert_eq!(ids, vec!["run-a", "run-b"]);
    }
}
