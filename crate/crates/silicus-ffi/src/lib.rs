//! C ABI over the silicus experiment harness.
//!
//! Conventions:
//! - Every fallible function returns a [`SilicusStatus`]; `SILICUS_STATUS_OK`
//!   is zero. On failure, `silicus_last_error()` returns a thread-local
//!   message valid until the next silicus call on the same thread.
//! - Strings returned through `char **` out-params are owned by the caller
//!   and must be released with `silicus_string_free`.
//! - Runs are accessed through the opaque `SilicusRun` handle; release it
//!   with `silicus_run_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use chrono::Utc;

use silicus::agents::{ScriptedBackend, ScriptedParams};
use silicus::analysis::{fit_type_mixture, ols, write_outcomes_csv, TypeVector};
use silicus::config::ExperimentConfig;
use silicus::design::RunManifest;
use silicus::experiments::{build_plan, BuiltinExperiment, PlanOptions};
use silicus::money::Money;
use silicus::parsing::{parse_outcome, OutcomeKind, ParseMode};
use silicus::store::{execute_run, RunStore, TrialRecord};

/// Result codes. Zero is success; anything else is an error and
/// `silicus_last_error` carries the detail.
#[repr(C)]
#[derive(Copy, Clone, PartialEq, Eq)]
pub enum SilicusStatus {
    Ok = 0,
    InvalidArgument = 1,
    Utf8 = 2,
    UnknownExperiment = 3,
    Run = 4,
    Store = 5,
    Analysis = 6,
    Parse = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(status: SilicusStatus, message: impl std::fmt::Display) -> SilicusStatus {
    let text = CString::new(message.to_string().replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
    status
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Last error message on this thread, or NULL. The pointer is valid until
/// the next silicus call on the same thread.
#[no_mangle]
pub extern "C" fn silicus_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(ptr::null())
    })
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn silicus_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Frees a string returned through a `char **` out-param.
#[no_mangle]
pub extern "C" fn silicus_string_free(s: *mut c_char) {
    if !s.is_null() {
        unsafe { drop(CString::from_raw(s)) };
    }
}

unsafe fn required_str<'a>(
    pointer: *const c_char,
    name: &str,
) -> Result<&'a str, SilicusStatus> {
    if pointer.is_null() {
        return Err(set_error(
            SilicusStatus::InvalidArgument,
            format!("{name} must not be NULL"),
        ));
    }
    CStr::from_ptr(pointer)
        .to_str()
        .map_err(|_| set_error(SilicusStatus::Utf8, format!("{name} is not valid UTF-8")))
}

/// The bid-up rule: effective ask under a wage floor, in cents.
#[no_mangle]
pub extern "C" fn silicus_apply_min_wage(ask_cents: i64, min_wage_cents: i64) -> i64 {
    silicus::experiments::hiring::apply_min_wage(
        Money::from_cents(ask_cents),
        Money::from_cents(min_wage_cents),
    )
    .cents()
}

/// Executes a built-in experiment on the scripted backend.
///
/// `agents` is only meaningful for `status_quo`; pass 100 for the standard
/// design. On success `*run_id_out` receives the run id (caller frees).
#[no_mangle]
pub unsafe extern "C" fn silicus_run_scripted(
    experiment: *const c_char,
    store_root: *const c_char,
    seed: u64,
    reps: u32,
    agents: u32,
    run_id_out: *mut *mut c_char,
) -> SilicusStatus {
    clear_error();
    let experiment = match required_str(experiment, "experiment") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let store_root = match required_str(store_root, "store_root") {
        Ok(s) => s,
        Err(status) => return status,
    };
    if reps == 0 || agents == 0 {
        return set_error(
            SilicusStatus::InvalidArgument,
            "reps and agents must be at least 1",
        );
    }

    let experiment: BuiltinExperiment = match experiment.parse() {
        Ok(e) => e,
        Err(error) => return set_error(SilicusStatus::UnknownExperiment, error),
    };
    let options = PlanOptions {
        master_seed: seed,
        reps,
        n_agents: agents as usize,
        ..PlanOptions::default()
    };
    let plan = match build_plan(experiment, &options) {
        Ok(plan) => plan,
        Err(error) => return set_error(SilicusStatus::Run, error),
    };
    let digest = plan.config.digest();
    let run_id = format!("{}-s{}-{}", experiment.name(), seed, &digest[..8]);
    let manifest = RunManifest {
        run_id: run_id.clone(),
        experiment_id: experiment.name().to_string(),
        backend_id: "scripted".to_string(),
        model_params: plan.config.model_params.clone(),
        master_seed: seed,
        replication_count: reps,
        planned_trials: plan.trials.len(),
        created_at: Utc::now(),
        config_digest: digest,
    };
    let store = RunStore::new(PathBuf::from(store_root));
    let backend = ScriptedBackend::new(ScriptedParams::default());
    if let Err(error) = execute_run(&store, &plan, &manifest, &backend, 8) {
        return set_error(SilicusStatus::Run, error);
    }
    if !run_id_out.is_null() {
        match CString::new(run_id) {
            Ok(id) => *run_id_out = id.into_raw(),
            Err(_) => return set_error(SilicusStatus::InvalidArgument, "run id contains NUL"),
        }
    }
    SilicusStatus::Ok
}

/// An open run: its manifest, config, and loaded trial records.
pub struct SilicusRun {
    config: ExperimentConfig,
    planned: usize,
    records: Vec<TrialRecord>,
}

/// Opens a stored run for inspection and export.
#[no_mangle]
pub unsafe extern "C" fn silicus_run_open(
    store_root: *const c_char,
    run_id: *const c_char,
    out: *mut *mut SilicusRun,
) -> SilicusStatus {
    clear_error();
    let store_root = match required_str(store_root, "store_root") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let run_id = match required_str(run_id, "run_id") {
        Ok(s) => s,
        Err(status) => return status,
    };
    if out.is_null() {
        return set_error(SilicusStatus::InvalidArgument, "out must not be NULL");
    }
    let store = RunStore::new(PathBuf::from(store_root));
    let manifest = match store.read_manifest(run_id) {
        Ok(manifest) => manifest,
        Err(error) => return set_error(SilicusStatus::Store, error),
    };
    let config = match store.read_config(run_id) {
        Ok(config) => config,
        Err(error) => return set_error(SilicusStatus::Store, error),
    };
    let records = match store.read_trials(run_id) {
        Ok(records) => records,
        Err(error) => return set_error(SilicusStatus::Store, error),
    };
    let run = Box::new(SilicusRun {
        config,
        planned: manifest.planned_trials,
        records,
    });
    *out = Box::into_raw(run);
    SilicusStatus::Ok
}

/// Number of persisted trials in an open run; -1 on a NULL handle.
#[no_mangle]
pub unsafe extern "C" fn silicus_run_trial_count(run: *const SilicusRun) -> i64 {
    if run.is_null() {
        return -1;
    }
    (*run).records.len() as i64
}

/// Planned trial count from the run's manifest; -1 on a NULL handle.
#[no_mangle]
pub unsafe extern "C" fn silicus_run_planned_count(run: *const SilicusRun) -> i64 {
    if run.is_null() {
        return -1;
    }
    (*run).planned as i64
}

/// Writes the run's outcome CSV (sorted by trial id) to `path`.
#[no_mangle]
pub unsafe extern "C" fn silicus_run_export_csv(
    run: *const SilicusRun,
    path: *const c_char,
) -> SilicusStatus {
    clear_error();
    if run.is_null() {
        return set_error(SilicusStatus::InvalidArgument, "run must not be NULL");
    }
    let path = match required_str(path, "path") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let run = &*run;
    let rows: Vec<_> = run.records.iter().map(TrialRecord::outcome_row).collect();
    let factor_names: Vec<String> = run.config.factors.iter().map(|f| f.name.clone()).collect();
    let file = match std::fs::File::create(path) {
        Ok(file) => file,
        Err(error) => return set_error(SilicusStatus::Store, error),
    };
    if let Err(error) = write_outcomes_csv(&rows, &factor_names, file) {
        return set_error(SilicusStatus::Store, error);
    }
    SilicusStatus::Ok
}

/// Releases a run handle.
#[no_mangle]
pub unsafe extern "C" fn silicus_run_free(run: *mut SilicusRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Fits simplex-constrained type-mixture weights.
///
/// `bits` is row-major `n_types x n_scenarios` with entries 0/1; `observed`
/// has length `n_scenarios`; `weights_out` receives `n_types` weights.
#[no_mangle]
pub unsafe extern "C" fn silicus_fit_type_mixture(
    bits: *const u8,
    n_types: usize,
    n_scenarios: usize,
    observed: *const f64,
    weights_out: *mut f64,
    mse_out: *mut f64,
) -> SilicusStatus {
    clear_error();
    if bits.is_null() || observed.is_null() || weights_out.is_null() {
        return set_error(SilicusStatus::InvalidArgument, "NULL buffer");
    }
    if n_types == 0 || n_scenarios == 0 {
        return set_error(
            SilicusStatus::InvalidArgument,
            "n_types and n_scenarios must be positive",
        );
    }
    let bits = std::slice::from_raw_parts(bits, n_types * n_scenarios);
    let observed = std::slice::from_raw_parts(observed, n_scenarios);
    let types: Vec<TypeVector> = (0..n_types)
        .map(|t| {
            TypeVector::new(
                format!("type{t}"),
                bits[t * n_scenarios..(t + 1) * n_scenarios].to_vec(),
            )
        })
        .collect();
    match fit_type_mixture(&types, observed) {
        Ok(fit) => {
            let weights = std::slice::from_raw_parts_mut(weights_out, n_types);
            for (slot, (_, weight)) in weights.iter_mut().zip(&fit.weights) {
                *slot = *weight;
            }
            if !mse_out.is_null() {
                *mse_out = fit.residual_mse;
            }
            SilicusStatus::Ok
        }
        Err(error) => set_error(SilicusStatus::Analysis, error),
    }
}

/// OLS of `y` on an intercept plus `k` regressors.
///
/// `x` is row-major `n x k`. `coef_out` and `se_out` receive `k + 1` values
/// (intercept first). Either may be NULL to skip.
#[no_mangle]
pub unsafe extern "C" fn silicus_ols(
    y: *const f64,
    n: usize,
    x: *const f64,
    k: usize,
    coef_out: *mut f64,
    se_out: *mut f64,
    r_squared_out: *mut f64,
) -> SilicusStatus {
    clear_error();
    if y.is_null() || (k > 0 && x.is_null()) {
        return set_error(SilicusStatus::InvalidArgument, "NULL buffer");
    }
    let y = std::slice::from_raw_parts(y, n);
    let x = if k > 0 {
        std::slice::from_raw_parts(x, n * k)
    } else {
        &[]
    };
    let regressors: Vec<(String, Vec<f64>)> = (0..k)
        .map(|j| {
            (
                format!("x{j}"),
                (0..n).map(|r| x[r * k + j]).collect(),
            )
        })
        .collect();
    match ols(y, &regressors) {
        Ok(result) => {
            if !coef_out.is_null() {
                std::slice::from_raw_parts_mut(coef_out, k + 1)
                    .copy_from_slice(&result.coefficients);
            }
            if !se_out.is_null() {
                std::slice::from_raw_parts_mut(se_out, k + 1).copy_from_slice(&result.std_errors);
            }
            if !r_squared_out.is_null() {
                *r_squared_out = result.r_squared;
            }
            SilicusStatus::Ok
        }
        Err(error) => set_error(SilicusStatus::Analysis, error),
    }
}

/// Outcome kinds for `silicus_parse_outcome`.
#[repr(C)]
#[derive(Copy, Clone, PartialEq, Eq)]
pub enum SilicusOutcomeKind {
    BinaryChoice = 0,
    Rating = 1,
    BudgetOption = 2,
    Hire = 3,
}

/// Parses a completion against option labels. On success `*index_out` is
/// the zero-based option index and `*mode_out` is 0 for strict, 1 for the
/// lenient fallback.
#[no_mangle]
pub unsafe extern "C" fn silicus_parse_outcome(
    kind: SilicusOutcomeKind,
    text: *const c_char,
    labels: *const *const c_char,
    n_labels: usize,
    index_out: *mut usize,
    mode_out: *mut u32,
) -> SilicusStatus {
    clear_error();
    let text = match required_str(text, "text") {
        Ok(s) => s,
        Err(status) => return status,
    };
    if labels.is_null() || n_labels == 0 {
        return set_error(SilicusStatus::InvalidArgument, "labels must be nonempty");
    }
    let mut owned = Vec::with_capacity(n_labels);
    for i in 0..n_labels {
        let pointer = *labels.add(i);
        match required_str(pointer, "label") {
            Ok(s) => owned.push(s),
            Err(status) => return status,
        }
    }
    let kind = match kind {
        SilicusOutcomeKind::BinaryChoice => OutcomeKind::BinaryChoice,
        SilicusOutcomeKind::Rating => OutcomeKind::Rating,
        SilicusOutcomeKind::BudgetOption => OutcomeKind::BudgetOption,
        SilicusOutcomeKind::Hire => OutcomeKind::Hire,
    };
    match parse_outcome(kind, text, &owned) {
        Ok(parsed) => {
            if !index_out.is_null() {
                *index_out = parsed.outcome.option_index();
            }
            if !mode_out.is_null() {
                *mode_out = match parsed.mode_used {
                    ParseMode::Strict => 0,
                    ParseMode::Lenient => 1,
                };
            }
            SilicusStatus::Ok
        }
        Err(error) => set_error(SilicusStatus::Parse, error),
    }
}
