//! Command-line surface: run, analyze, list, export, validate.

use std::fmt::Display;
use std::io::Write;
use std::path::PathBuf;

use chrono::Utc;
use clap::{Parser, Subcommand, ValueEnum};

use silicus::agents::{
    FileCache, HttpCompletionClient, LlmClientConfig, RatingTable, ScriptedBackend, ScriptedParams,
};
use silicus::analysis::{
    fit_type_mixture, render_regression_table, tabulate, write_frequency_csv, write_outcomes_csv,
    write_regression_csv, MixtureInput, OutcomeRecord,
};
use silicus::config::ExperimentConfig;
use silicus::design::{ModelParams, RunManifest};
use silicus::experiments::{build_plan, dictator, hiring, BuiltinExperiment, PlanOptions};
use silicus::money::Money;
use silicus::store::{execute_run, RunStore, TrialRecord};

#[derive(Parser)]
#[command(name = "silicus", version, about = "Behavioral-economics experiments on simulated agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    Scripted,
    Llm,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum TableKind {
    Fractions,
    Ols,
    Mixture,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ExportFormat {
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one of the built-in experiments.
    Run {
        /// charness_rabin | kkt_fairness | status_quo | min_wage
        experiment: String,
        #[arg(long, value_enum, default_value_t = BackendKind::Scripted)]
        backend: BackendKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        reps: u32,
        /// Agent count for status_quo.
        #[arg(long, default_value_t = 100)]
        agents: usize,
        #[arg(long, default_value = "runs")]
        store: PathBuf,
        /// Config file whose `scenarios` section replaces the shipped
        /// dictator scenario set.
        #[arg(long)]
        scenarios: Option<PathBuf>,
        /// Override the deterministic run id.
        #[arg(long)]
        run_id: Option<String>,
        /// Status-quo bonus for the scripted budget chooser.
        #[arg(long, default_value_t = 0.35)]
        beta: f64,
        /// Dollars per hour one year of experience is worth to the
        /// scripted employer.
        #[arg(long, default_value_t = 3.0)]
        experience_value: f64,
        /// Max total payoff (dollars) the fairness objective will destroy
        /// to equalize players.
        #[arg(long, default_value_t = 500.0)]
        waste_threshold: f64,
        /// JSON file overriding the scripted rating rule table.
        #[arg(long)]
        rating_table: Option<PathBuf>,
        /// Append "Answer with exactly one option." to every prompt.
        #[arg(long)]
        answer_suffix: bool,
        /// Completion endpoint URL (llm backend).
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long, default_value = "text-davinci-003")]
        model: String,
        #[arg(long, default_value_t = 0.0)]
        temperature: f64,
        #[arg(long, default_value_t = 64)]
        max_tokens: u32,
        /// Bounded in-flight trials.
        #[arg(long, default_value_t = 8)]
        concurrency: usize,
        /// Response cache directory (llm backend); defaults to
        /// <store>/cache.
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Request timeout in seconds (llm backend).
        #[arg(long, default_value_t = 30)]
        timeout_secs: u64,
    },
    /// Summarize a stored run.
    Analyze {
        run_id: String,
        #[arg(long, value_enum)]
        table: TableKind,
        #[arg(long, default_value = "runs")]
        store: PathBuf,
        /// Comma-separated factor names (plus the pseudo-factor "persona").
        /// Defaults to the run's factors.
        #[arg(long)]
        group_by: Option<String>,
        /// Analyze a run whose trial count is below the planned count.
        #[arg(long)]
        allow_partial: bool,
        /// JSON file with observed_left_fractions (and optionally types)
        /// for the mixture table.
        #[arg(long)]
        observed: Option<PathBuf>,
        /// Also write the table as CSV to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List stored runs.
    List {
        #[arg(long, default_value = "runs")]
        store: PathBuf,
    },
    /// Export a run's outcomes.
    Export {
        run_id: String,
        #[arg(long, value_enum, default_value_t = ExportFormat::Csv)]
        format: ExportFormat,
        #[arg(long, default_value = "runs")]
        store: PathBuf,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an experiment config file.
    Validate { config: PathBuf },
}

/// One-line machine-parsable failure: `error: <Kind>: <detail>`.
struct CliError {
    kind: &'static str,
    message: String,
}

impl CliError {
    fn new(kind: &'static str, message: impl Display) -> CliError {
        CliError {
            kind,
            message: message.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

impl From<silicus::design::DesignError> for CliError {
    fn from(error: silicus::design::DesignError) -> CliError {
        use silicus::design::DesignError::*;
        let kind = match &error {
            EmptyFactor(_) => "EmptyFactor",
            DuplicateFactor(_) => "DuplicateFactor",
            MissingPlaceholder(_) => "MissingPlaceholder",
            UnknownPlaceholder(_) => "UnknownPlaceholder",
            ZeroReps => "ZeroReps",
        };
        CliError::new(kind, error)
    }
}

impl From<silicus::experiments::ExperimentError> for CliError {
    fn from(error: silicus::experiments::ExperimentError) -> CliError {
        use silicus::experiments::ExperimentError::*;
        match error {
            UnknownExperiment(_) => CliError::new("UnknownExperiment", error),
            EmptyScenarioSet => CliError::new("EmptyScenarioSet", error),
            InvalidScenario(_) => CliError::new("InvalidScenario", error),
            Design(inner) => inner.into(),
        }
    }
}

impl From<silicus::config::ConfigError> for CliError {
    fn from(error: silicus::config::ConfigError) -> CliError {
        use silicus::config::ConfigError::*;
        match error {
            Design(inner) => inner.into(),
            Io { .. } => CliError::new("ConfigIo", error),
            Json(_) => CliError::new("ConfigJson", error),
            Invalid(_) => CliError::new("InvalidConfig", error),
        }
    }
}

impl From<silicus::store::StoreError> for CliError {
    fn from(error: silicus::store::StoreError) -> CliError {
        use silicus::store::StoreError::*;
        let kind = match &error {
            Locked(_) => "StoreLocked",
            RunNotFound(_) => "RunNotFound",
            ManifestMismatch { .. } => "ManifestMismatch",
            Io(_) => "StoreIo",
            Corrupt { .. } => "CorruptStore",
        };
        CliError::new(kind, error)
    }
}

impl From<silicus::analysis::AnalysisError> for CliError {
    fn from(error: silicus::analysis::AnalysisError) -> CliError {
        use silicus::analysis::AnalysisError::*;
        let kind = match &error {
            MixedOutcomeKinds => "MixedOutcomeKinds",
            LengthMismatch(_) => "LengthMismatch",
            RankDeficient => "RankDeficient",
            DegenerateDoF { .. } => "DegenerateDoF",
            DimensionMismatch(_) => "DimensionMismatch",
            InvalidInput(_) => "InvalidAnalysisInput",
        };
        CliError::new(kind, error)
    }
}

impl From<silicus::agents::BackendError> for CliError {
    fn from(error: silicus::agents::BackendError) -> CliError {
        use silicus::agents::BackendError::*;
        let kind = match &error {
            Auth(_) => "AuthError",
            RateLimited { .. } => "RateLimited",
            MalformedResponse(_) => "MalformedResponse",
            Timeout(_) => "Timeout",
            Http { .. } => "HttpError",
            Transport(_) => "TransportError",
            Unsupported(_) => "UnsupportedTrial",
        };
        CliError::new(kind, error)
    }
}

impl From<std::io::Error> for CliError {
    fn from(error: std::io::Error) -> CliError {
        CliError::new("Io", error)
    }
}

impl From<csv::Error> for CliError {
    fn from(error: csv::Error) -> CliError {
        CliError::new("CsvError", error)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(error: serde_json::Error) -> CliError {
        CliError::new("JsonError", error)
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(error) = dispatch(cli.command) {
        eprintln!("error: {}: {}", error.kind, error.message);
        std::process::exit(1);
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Run {
            experiment,
            backend,
            seed,
            reps,
            agents,
            store,
            scenarios,
            run_id,
            beta,
            experience_value,
            waste_threshold,
            rating_table,
            answer_suffix,
            endpoint,
            model,
            temperature,
            max_tokens,
            concurrency,
            cache_dir,
            timeout_secs,
        } => {
            let experiment: BuiltinExperiment = experiment.parse()?;
            let dictator_scenarios = match scenarios {
                Some(path) => {
                    let config = ExperimentConfig::load(&path)?;
                    config.validate()?;
                    if config.scenarios.is_empty() {
                        return Err(CliError::new(
                            "EmptyScenarioSet",
                            format!("config '{}' has no scenarios section", path.display()),
                        ));
                    }
                    Some(config.scenarios)
                }
                None => None,
            };
            let options = PlanOptions {
                master_seed: seed,
                reps,
                n_agents: agents,
                dictator_scenarios,
                waste_threshold: money_from_dollars_f64(waste_threshold),
                bias_strength: beta,
                experience_value: money_from_dollars_f64(experience_value),
                model_params: ModelParams {
                    model_name: model,
                    temperature,
                    max_tokens,
                },
                answer_suffix,
                ..PlanOptions::default()
            };
            if options.model_params.temperature < 0.0 {
                return Err(CliError::new("InvalidConfig", "temperature must be >= 0"));
            }
            let plan = build_plan(experiment, &options)?;
            let digest = plan.config.digest();
            let run_id = run_id.unwrap_or_else(|| {
                format!("{}-s{}-{}", experiment.name(), seed, &digest[..8])
            });
            let backend_id = match backend {
                BackendKind::Scripted => "scripted",
                BackendKind::Llm => "llm",
            };
            let manifest = RunManifest {
                run_id: run_id.clone(),
                experiment_id: experiment.name().to_string(),
                backend_id: backend_id.to_string(),
                model_params: plan.config.model_params.clone(),
                master_seed: seed,
                replication_count: reps,
                planned_trials: plan.trials.len(),
                created_at: Utc::now(),
                config_digest: digest,
            };

            let store = RunStore::new(store);
            let report = match backend {
                BackendKind::Scripted => {
                    let mut params = ScriptedParams {
                        waste_threshold: options.waste_threshold,
                        bias_strength: options.bias_strength,
                        experience_value: options.experience_value,
                        ..ScriptedParams::default()
                    };
                    if let Some(path) = rating_table {
                        let text = std::fs::read_to_string(&path)?;
                        params.rating_table = serde_json::from_str::<RatingTable>(&text)?;
                    }
                    let backend = ScriptedBackend::new(params);
                    execute_run(&store, &plan, &manifest, &backend, concurrency)?
                }
                BackendKind::Llm => {
                    let endpoint = endpoint.ok_or_else(|| {
                        CliError::new("InvalidConfig", "--endpoint is required for the llm backend")
                    })?;
                    let mut config = LlmClientConfig::from_env(endpoint)?;
                    config.timeout = std::time::Duration::from_secs(timeout_secs);
                    let cache_dir = cache_dir.unwrap_or_else(|| store.root().join("cache"));
                    let cache = FileCache::new(cache_dir)?;
                    let backend = HttpCompletionClient::new(config, Some(cache));
                    execute_run(&store, &plan, &manifest, &backend, concurrency)?
                }
            };

            println!(
                "run {}: {}/{} trials, complete={}",
                report.run_id, report.total_trials, report.planned_trials, report.complete
            );
            for (label, count) in &report.outcome_counts {
                println!("  {label}: {count}");
            }
            println!(
                "parse failures: {}, backend failures: {}, cache hits: {}",
                report.parse_failures, report.backend_failures, report.cache_hits
            );
            println!("stored in {}", store.run_dir(&report.run_id).display());
            Ok(())
        }

        Command::Analyze {
            run_id,
            table,
            store,
            group_by,
            allow_partial,
            observed,
            out,
        } => {
            let store = RunStore::new(store);
            let manifest = store.read_manifest(&run_id)?;
            let config = store.read_config(&run_id)?;
            let records = store.read_trials(&run_id)?;
            if records.len() < manifest.planned_trials && !allow_partial {
                return Err(CliError::new(
                    "IncompleteRun",
                    format!(
                        "run '{run_id}' has {}/{} trials; pass --allow-partial to analyze anyway",
                        records.len(),
                        manifest.planned_trials
                    ),
                ));
            }
            let experiment: BuiltinExperiment = manifest.experiment_id.parse()?;
            let outcomes = parsed_outcomes(&records, experiment);
            match table {
                TableKind::Fractions => {
                    analyze_fractions(experiment, &config, &outcomes, group_by, out)
                }
                TableKind::Ols => analyze_ols(experiment, &outcomes, out),
                TableKind::Mixture => analyze_mixture(experiment, &config, &outcomes, observed, out),
            }
        }

        Command::List { store } => {
            let store = RunStore::new(store);
            let manifests = store.list_runs()?;
            if manifests.is_empty() {
                println!("no runs in {}", store.root().display());
                return Ok(());
            }
            println!(
                "{:<40}  {:<16}  {:<8}  {:>12}  {:>12}  complete",
                "run_id", "experiment", "backend", "seed", "trials"
            );
            for manifest in manifests {
                let trials = store.read_trials(&manifest.run_id)?.len();
                println!(
                    "{:<40}  {:<16}  {:<8}  {:>12}  {:>7}/{:<4}  {}",
                    manifest.run_id,
                    manifest.experiment_id,
                    manifest.backend_id,
                    manifest.master_seed,
                    trials,
                    manifest.planned_trials,
                    trials == manifest.planned_trials
                );
            }
            Ok(())
        }

        Command::Export {
            run_id,
            format: ExportFormat::Csv,
            store,
            out,
        } => {
            let store = RunStore::new(store);
            let config = store.read_config(&run_id)?;
            let records = store.read_trials(&run_id)?;
            let rows: Vec<_> = records.iter().map(TrialRecord::outcome_row).collect();
            let factor_names: Vec<String> =
                config.factors.iter().map(|f| f.name.clone()).collect();
            match out {
                Some(path) => {
                    let file = std::fs::File::create(&path)?;
                    write_outcomes_csv(&rows, &factor_names, file)?;
                    println!("wrote {} rows to {}", rows.len(), path.display());
                }
                None => {
                    write_outcomes_csv(&rows, &factor_names, std::io::stdout().lock())?;
                }
            }
            Ok(())
        }

        Command::Validate { config } => {
            let loaded = ExperimentConfig::load(&config)?;
            loaded.validate()?;
            println!("ok: {} (digest {})", loaded.experiment_id, loaded.digest());
            Ok(())
        }
    }
}

fn money_from_dollars_f64(dollars: f64) -> Money {
    Money::from_cents((dollars * 100.0).round() as i64)
}

fn parsed_outcomes(records: &[TrialRecord], experiment: BuiltinExperiment) -> Vec<OutcomeRecord> {
    records
        .iter()
        .filter_map(|r| r.outcome_record(experiment.outcome_kind()))
        .collect()
}

fn option_labels(experiment: BuiltinExperiment) -> Vec<String> {
    // Options are fixed per built-in experiment.
    match experiment {
        BuiltinExperiment::CharnessRabin => {
            dictator::DICTATOR_LABELS.iter().map(|s| s.to_string()).collect()
        }
        BuiltinExperiment::KktFairness => silicus::experiments::gouging::rating_labels()
            .iter()
            .map(|s| s.to_string())
            .collect(),
        BuiltinExperiment::StatusQuo => silicus::experiments::budget::default_options()
            .iter()
            .map(|o| o.label())
            .collect(),
        BuiltinExperiment::MinWage => {
            hiring::HIRING_LABELS.iter().map(|s| s.to_string()).collect()
        }
    }
}

fn analyze_fractions(
    experiment: BuiltinExperiment,
    config: &ExperimentConfig,
    outcomes: &[OutcomeRecord],
    group_by: Option<String>,
    out: Option<PathBuf>,
) -> CliResult<()> {
    let default_keys: Vec<String> = config.factors.iter().map(|f| f.name.clone()).collect();
    let keys: Vec<String> = match group_by {
        Some(spec) => spec.split(',').map(|s| s.trim().to_string()).collect(),
        None => default_keys,
    };
    let key_refs: Vec<&str> = keys.iter().map(String::as_str).collect();
    let labels = option_labels(experiment);
    let table = tabulate(outcomes, &key_refs, &labels)?;

    let mut header = keys.join(" | ");
    header.push_str("  ->  ");
    header.push_str(
        &labels
            .iter()
            .map(|l| format!("{l} (n, frac)"))
            .collect::<Vec<_>>()
            .join(", "),
    );
    println!("{header}");
    for (key, row) in &table.rows {
        let cells: Vec<String> = row
            .counts
            .iter()
            .zip(&row.fractions)
            .map(|(c, f)| format!("{c} ({f:.3})"))
            .collect();
        println!("{}  ->  {}  [n={}]", key.join(" | "), cells.join(", "), row.n);
    }
    if let Some(path) = out {
        let file = std::fs::File::create(&path)?;
        write_frequency_csv(&table, file)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn analyze_ols(
    experiment: BuiltinExperiment,
    outcomes: &[OutcomeRecord],
    out: Option<PathBuf>,
) -> CliResult<()> {
    if experiment != BuiltinExperiment::MinWage {
        return Err(CliError::new(
            "InvalidAnalysisInput",
            format!("--table ols applies to min_wage runs, not {}", experiment.name()),
        ));
    }
    let (wage, experience) = hiring::minwage_regressions(outcomes)?;
    print!(
        "{}",
        render_regression_table(&[("Hired wage", &wage), ("Hired experience", &experience)])
    );
    if let Some(path) = out {
        let mut file = std::fs::File::create(&path)?;
        write_regression_csv(&wage, &mut file)?;
        writeln!(file)?;
        write_regression_csv(&experience, &mut file)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn analyze_mixture(
    experiment: BuiltinExperiment,
    config: &ExperimentConfig,
    outcomes: &[OutcomeRecord],
    observed: Option<PathBuf>,
    out: Option<PathBuf>,
) -> CliResult<()> {
    if experiment != BuiltinExperiment::CharnessRabin {
        return Err(CliError::new(
            "InvalidAnalysisInput",
            format!(
                "--table mixture applies to charness_rabin runs, not {}",
                experiment.name()
            ),
        ));
    }
    let scenarios = &config.scenarios;
    let run_types = dictator::type_vectors(scenarios, silicus::agents::DEFAULT_WASTE_THRESHOLD);

    let (types, observed_fractions) = match observed {
        Some(path) => {
            let text = std::fs::read_to_string(&path)?;
            let input: MixtureInput = serde_json::from_str(&text)?;
            let types = if input.types.is_empty() { run_types } else { input.types };
            (types, input.observed_left_fractions)
        }
        None => {
            // Observed fractions from this run, pooled over personas, in
            // scenario-set order.
            let labels = option_labels(experiment);
            let table = tabulate(outcomes, &["scenario"], &labels)?;
            let fractions: Vec<f64> = scenarios
                .iter()
                .map(|s| table.fraction(&[s.name.as_str()], "Left").unwrap_or(0.0))
                .collect();
            (run_types, fractions)
        }
    };

    let fit = fit_type_mixture(&types, &observed_fractions)?;
    println!("mixture weights (residual mse {:.6}):", fit.residual_mse);
    for (name, weight) in &fit.weights {
        println!("  {name}: {weight:.2}");
    }
    if let Some(path) = out {
        let mut writer = csv::Writer::from_writer(std::fs::File::create(&path)?);
        writer.write_record(["type", "weight"])?;
        for (name, weight) in &fit.weights {
            writer.write_record([name.as_str(), &format!("{weight:.6}")])?;
        }
        writer.flush()?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
