//! Trial execution with bounded parallelism and trial-level resume.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use chrono::Utc;
use serde::{Deserialize, Serialize};

use crate::agents::AgentBackend;
use crate::design::RunManifest;
use crate::experiments::{PlannedTrial, RunPlan};
use crate::parsing::parse_outcome;

use super::{trial_id, RunStore, StoreError, TrialRecord, TrialResult};

/// Outcome summary of a run, written next to the trials file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_id: String,
    pub planned_trials: usize,
    pub executed_this_invocation: usize,
    pub total_trials: usize,
    pub complete: bool,
    pub outcome_counts: BTreeMap<String, usize>,
    pub parse_failures: usize,
    pub backend_failures: usize,
    pub cache_hits: usize,
}

/// Executes every not-yet-persisted trial of the plan.
///
/// Workers pull trials from a shared cursor and send finished records to a
/// single appender, so each record is written exactly once and parallel
/// completion order never matters. Re-invocation after an interruption
/// skips trial ids already present. Backend failures are persisted and
/// counted; they do not stop the run.
pub fn execute_run(
    store: &RunStore,
    plan: &RunPlan,
    manifest: &RunManifest,
    backend: &dyn AgentBackend,
    concurrency: usize,
) -> Result<RunReport, StoreError> {
    let concurrency = concurrency.max(1);
    let _lock = store.lock_run(&manifest.run_id)?;
    store.init_run(manifest)?;
    store.write_config(&manifest.run_id, &plan.config)?;

    let existing = store.read_trials(&manifest.run_id)?;
    let done: BTreeSet<String> = existing.iter().map(|t| t.trial_id.clone()).collect();
    let pending: Vec<&PlannedTrial> = plan
        .trials
        .iter()
        .filter(|t| !done.contains(&trial_id(t.spec.trial_index)))
        .collect();

    let mut appender = store.open_appender(&manifest.run_id)?;
    let labels = plan.option_label_refs();
    let executed = run_pending(
        &pending,
        plan,
        manifest,
        backend,
        concurrency,
        &labels,
        &mut appender,
    )?;
    drop(appender);

    let all = store.read_trials(&manifest.run_id)?;
    let report = summarize(manifest, &all, executed);
    store.write_report(&manifest.run_id, &report)?;
    Ok(report)
}

fn run_pending(
    pending: &[&PlannedTrial],
    plan: &RunPlan,
    manifest: &RunManifest,
    backend: &dyn AgentBackend,
    concurrency: usize,
    labels: &[&str],
    appender: &mut super::TrialAppender,
) -> Result<usize, StoreError> {
    if pending.is_empty() {
        return Ok(0);
    }
    let cursor = AtomicUsize::new(0);
    let (sender, receiver) = mpsc::channel::<TrialRecord>();

    let mut written = 0;
    std::thread::scope(|scope| -> Result<(), StoreError> {
        for _ in 0..concurrency.min(pending.len()) {
            let sender = sender.clone();
            let cursor = &cursor;
            scope.spawn(move || loop {
                let index = cursor.fetch_add(1, Ordering::Relaxed);
                let Some(trial) = pending.get(index) else {
                    break;
                };
                let record = run_one(trial, plan, manifest, backend, labels);
                if sender.send(record).is_err() {
                    break;
                }
            });
        }
        drop(sender);
        // Single appender: records are serialized through this channel.
        while let Ok(record) = receiver.recv() {
            appender.append(&record)?;
            written += 1;
        }
        Ok(())
    })?;
    Ok(written)
}

fn run_one(
    trial: &PlannedTrial,
    plan: &RunPlan,
    manifest: &RunManifest,
    backend: &dyn AgentBackend,
    labels: &[&str],
) -> TrialRecord {
    let completion = backend.complete(trial, &manifest.model_params);
    let (raw_response, result, latency_ms, cache_hit, attempts) = match completion {
        Ok(completion) => {
            let result = match parse_outcome(plan.outcome_kind, &completion.raw_text, labels) {
                Ok(parsed) => TrialResult::Parsed {
                    outcome_label: plan.option_labels[parsed.outcome.option_index()].clone(),
                    outcome: parsed.outcome,
                    mode_used: parsed.mode_used,
                    matched_start: parsed.matched_span.start,
                    matched_end: parsed.matched_span.end,
                },
                Err(reason) => TrialResult::ParseFailed { reason },
            };
            (
                Some(completion.raw_text),
                result,
                completion.latency_ms,
                completion.cache_hit,
                completion.attempts,
            )
        }
        Err(error) => (
            None,
            TrialResult::BackendFailed {
                error: error.to_string(),
            },
            0,
            false,
            0,
        ),
    };
    TrialRecord {
        run_id: manifest.run_id.clone(),
        trial_id: trial_id(trial.spec.trial_index),
        trial_index: trial.spec.trial_index,
        assignments: trial.spec.cell.key_assignments(),
        persona_id: trial.spec.persona.persona_id.clone(),
        rep_index: trial.spec.rep_index,
        seed: trial.spec.seed,
        prompt: trial.prompt.clone(),
        raw_response,
        result,
        backend_id: backend.backend_id().to_string(),
        latency_ms,
        cache_hit,
        attempts,
        finished_at: Utc::now(),
    }
}

fn summarize(manifest: &RunManifest, all: &[TrialRecord], executed: usize) -> RunReport {
    let mut outcome_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut parse_failures = 0;
    let mut backend_failures = 0;
    let mut cache_hits = 0;
    for record in all {
        match &record.result {
            TrialResult::Parsed { outcome_label, .. } => {
                *outcome_counts.entry(outcome_label.clone()).or_default() += 1;
            }
            TrialResult::ParseFailed { .. } => parse_failures += 1,
            TrialResult::BackendFailed { .. } => backend_failures += 1,
        }
        if record.cache_hit {
            cache_hits += 1;
        }
    }
    RunReport {
        run_id: manifest.run_id.clone(),
        planned_trials: manifest.planned_trials,
        executed_this_invocation: executed,
        total_trials: all.len(),
        complete: all.len() == manifest.planned_trials,
        outcome_counts,
        parse_failures,
        backend_failures,
        cache_hits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{BackendError, CompletionRecord, ScriptedBackend, ScriptedParams};
    use crate::design::ModelParams;
    use crate::experiments::{build_plan, BuiltinExperiment, PlanOptions};

    fn manifest_for(plan: &RunPlan, run_id: &str) -> RunManifest {
        RunManifest {
            run_id: run_id.into(),
            experiment_id: plan.experiment.name().into(),
            backend_id: "scripted".into(),
            model_params: plan.config.model_params.clone(),
            master_seed: 7,
            replication_count: plan.config.reps,
            planned_trials: plan.trials.len(),
            created_at: Utc::now(),
            config_digest: plan.config.digest(),
        }
    }

    #[test]
    fn scripted_run_executes_every_trial_once() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::new(dir.path());
        let options = PlanOptions {
            master_seed: 7,
            ..PlanOptions::default()
        };
        let plan = build_plan(BuiltinExperiment::KktFairness, &options).unwrap();
        let manifest = manifest_for(&plan, "kkt-test");
        let backend = ScriptedBackend::new(ScriptedParams::default());
        let report = execute_run(&store, &plan, &manifest, &backend, 4).unwrap();
        assert_eq!(report.total_trials, 40);
        assert!(report.complete);
        assert_eq!(report.parse_failures, 0);
        assert_eq!(report.backend_failures, 0);

        // Re-invocation is a no-op.
        let again = execute_run(&store, &plan, &manifest, &backend, 4).unwrap();
        assert_eq!(again.executed_this_invocation, 0);
        assert_eq!(again.total_trials, 40);
    }

    /// Backend that fails on a fixed set of trial indexes, once each.
    struct FlakyBackend {
        inner: ScriptedBackend,
        fail_on: BTreeSet<usize>,
    }

    impl AgentBackend for FlakyBackend {
        fn backend_id(&self) -> &str {
            "flaky"
        }

        fn complete(
            &self,
            trial: &PlannedTrial,
            params: &ModelParams,
        ) -> Result<CompletionRecord, BackendError> {
            if self.fail_on.contains(&trial.spec.trial_index) {
                return Err(BackendError::Transport("injected failure".into()));
            }
            self.inner.complete(trial, params)
        }
    }

    #[test]
    fn backend_failures_are_persisted_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::new(dir.path());
        let plan = build_plan(BuiltinExperiment::MinWage, &PlanOptions::default()).unwrap();
        let manifest = manifest_for(&plan, "minwage-flaky");
        let backend = FlakyBackend {
            inner: ScriptedBackend::new(ScriptedParams::default()),
            fail_on: [0usize, 3, 7].into(),
        };
        let report = execute_run(&store, &plan, &manifest, &backend, 2).unwrap();
        assert_eq!(report.total_trials, 14);
        assert_eq!(report.backend_failures, 3);
        assert!(report.complete, "failed trials still count as executed");

        // A later invocation leaves the failed records in place.
        let again = execute_run(&store, &plan, &manifest, &backend, 2).unwrap();
        assert_eq!(again.executed_this_invocation, 0);
    }

    /// Backend that panics partway through, simulating a hard interruption.
    struct CrashingBackend {
        inner: ScriptedBackend,
        crash_after: usize,
        count: AtomicUsize,
    }

    impl AgentBackend for CrashingBackend {
        fn backend_id(&self) -> &str {
            "crashing"
        }

        fn complete(
            &self,
            trial: &PlannedTrial,
            params: &ModelParams,
        ) -> Result<CompletionRecord, BackendError> {
            let n = self.count.fetch_add(1, Ordering::SeqCst);
            if n >= self.crash_after {
                panic!("injected crash");
            }
            self.inner.complete(trial, params)
        }
    }

    #[test]
    fn interrupted_run_resumes_without_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::new(dir.path());
        let plan = build_plan(BuiltinExperiment::KktFairness, &PlanOptions::default()).unwrap();
        let manifest = manifest_for(&plan, "kkt-crash");

        let crashing = CrashingBackend {
            inner: ScriptedBackend::new(ScriptedParams::default()),
            crash_after: 10,
            count: AtomicUsize::new(0),
        };
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            execute_run(&store, &plan, &manifest, &crashing, 1)
        }));
        assert!(result.is_err(), "the injected crash propagates");

        let partial = store.read_trials("kkt-crash").unwrap();
        assert!(partial.len() < 40, "run was interrupted at {}", partial.len());
        let before: Vec<String> = partial.iter().map(|t| t.trial_id.clone()).collect();

        // Resume with a healthy backend; the lock from the crashed attempt
        // was released by unwinding.
        let backend = ScriptedBackend::new(ScriptedParams::default());
        let report = execute_run(&store, &plan, &manifest, &backend, 4).unwrap();
        assert!(report.complete);
        assert_eq!(report.total_trials, 40);

        let all = store.read_trials("kkt-crash").unwrap();
        let ids: BTreeSet<String> = all.iter().map(|t| t.trial_id.clone()).collect();
        assert_eq!(ids.len(), 40, "no duplicate trial ids");
        // Append-only: the records from before the crash are still first.
        let first: Vec<String> = all.iter().take(before.len()).map(|t| t.trial_id.clone()).collect();
        assert_eq!(first, before);
    }

    #[test]
    fn identical_manifests_give_identical_outcome_sets() {
        let options = PlanOptions {
            master_seed: 99,
            n_agents: 20,
            ..PlanOptions::default()
        };
        let plan = build_plan(BuiltinExperiment::StatusQuo, &options).unwrap();
        let backend = ScriptedBackend::new(ScriptedParams::default());

        let mut outcome_sets = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().unwrap();
            let store = RunStore::new(dir.path());
            let manifest = manifest_for(&plan, "sq-determinism");
            execute_run(&store, &plan, &manifest, &backend, 8).unwrap();
            let mut outcomes: Vec<(String, String)> = store
                .read_trials("sq-determinism")
                .unwrap()
                .iter()
                .map(|t| {
                    let label = match &t.result {
                        TrialResult::Parsed { outcome_label, .. } => outcome_label.clone(),
                        other => format!("{other:?}"),
                    };
                    (t.trial_id.clone(), label)
                })
                .collect();
            outcomes.sort();
            outcome_sets.push(outcomes);
        }
        assert_eq!(outcome_sets[0], outcome_sets[1]);
    }
}
