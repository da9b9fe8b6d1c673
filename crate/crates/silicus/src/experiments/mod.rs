//! The four built-in experiments, expressed as data plus plan builders.
//!
//! Each builder produces a [`RunPlan`]: a factor grid crossed with personas
//! and replications, one rendered prompt per trial, the scenario payload a
//! scripted agent needs to decide, and the option labels the parser accepts.

pub mod budget;
pub mod dictator;
pub mod gouging;
pub mod hiring;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::ScriptedObjective;
use crate::config::ExperimentConfig;
use crate::design::{
    plan_run, render_prompt, DesignError, FactorGrid, ModelParams, Persona, PromptTemplate,
    TrialSpec,
};
use crate::money::Money;
use crate::parsing::OutcomeKind;

use budget::{
    default_options, framing_status_quo, options_block, status_quo_design, status_quo_sentence,
    Belief, BudgetScenario, NEUTRAL_FRAMING,
};
use dictator::{charness_rabin_design, DictatorScenario, DICTATOR_LABELS};
use gouging::{kkt_design, FramingVerb, GougingScenario, Politics, GOUGING_BASE_PRICE};
use hiring::{
    build_scenario, minwage_design, HiringScenario, CONDITION_MINWAGE, HIRING_LABELS, MINIMUM_WAGE,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("no built-in experiment named '{0}'")]
    UnknownExperiment(String),
    #[error("scenario set is empty")]
    EmptyScenarioSet,
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Design(#[from] DesignError),
}

/// The experiments this harness ships with.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinExperiment {
    CharnessRabin,
    KktFairness,
    StatusQuo,
    MinWage,
}

impl BuiltinExperiment {
    pub const ALL: [BuiltinExperiment; 4] = [
        BuiltinExperiment::CharnessRabin,
        BuiltinExperiment::KktFairness,
        BuiltinExperiment::StatusQuo,
        BuiltinExperiment::MinWage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinExperiment::CharnessRabin => "charness_rabin",
            BuiltinExperiment::KktFairness => "kkt_fairness",
            BuiltinExperiment::StatusQuo => "status_quo",
            BuiltinExperiment::MinWage => "min_wage",
        }
    }

    pub fn outcome_kind(self) -> OutcomeKind {
        match self {
            BuiltinExperiment::CharnessRabin => OutcomeKind::BinaryChoice,
            BuiltinExperiment::KktFairness => OutcomeKind::Rating,
            BuiltinExperiment::StatusQuo => OutcomeKind::BudgetOption,
            BuiltinExperiment::MinWage => OutcomeKind::Hire,
        }
    }
}

impl fmt::Display for BuiltinExperiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinExperiment {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BuiltinExperiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ExperimentError::UnknownExperiment(s.to_string()))
    }
}

/// The structured scenario behind one trial, as a scripted agent sees it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ScenarioPayload {
    Dictator(DictatorScenario),
    Gouging(GougingScenario),
    Budget {
        scenario: BudgetScenario,
        belief: Belief,
    },
    Hiring(HiringScenario),
}

/// One fully-prepared trial: coordinates, rendered prompt, payload, and the
/// utility rule a scripted agent applies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannedTrial {
    pub spec: TrialSpec,
    pub prompt: String,
    pub payload: ScenarioPayload,
    pub objective: ScriptedObjective,
}

/// A complete executable plan plus the canonical config that describes it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub experiment: BuiltinExperiment,
    pub grid: FactorGrid,
    pub outcome_kind: OutcomeKind,
    pub option_labels: Vec<String>,
    pub trials: Vec<PlannedTrial>,
    pub config: ExperimentConfig,
}

impl RunPlan {
    pub fn option_label_refs(&self) -> Vec<&str> {
        self.option_labels.iter().map(String::as_str).collect()
    }
}

/// Knobs shared by every plan builder. Defaults reproduce the shipped
/// designs at one replication.
#[derive(Clone, Debug)]
pub struct PlanOptions {
    pub master_seed: u64,
    pub reps: u32,
    /// Agent count for the status-quo experiment.
    pub n_agents: usize,
    /// Dictator scenario set; defaults to the shipped config.
    pub dictator_scenarios: Option<Vec<DictatorScenario>>,
    /// Person 1 wage asks for the minimum-wage experiment.
    pub asks: Vec<Money>,
    pub waste_threshold: Money,
    pub bias_strength: f64,
    pub experience_value: Money,
    pub model_params: ModelParams,
    /// Appends "Answer with exactly one option." to every prompt.
    pub answer_suffix: bool,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            master_seed: 0,
            reps: 1,
            n_agents: 100,
            dictator_scenarios: None,
            asks: hiring::default_asks(),
            waste_threshold: crate::agents::DEFAULT_WASTE_THRESHOLD,
            bias_strength: crate::agents::DEFAULT_BIAS_STRENGTH,
            experience_value: crate::agents::DEFAULT_EXPERIENCE_VALUE,
            model_params: ModelParams::default(),
            answer_suffix: false,
        }
    }
}

const ANSWER_SUFFIX: &str = "Answer with exactly one option.";

/// The dictator scenario set shipped with the harness. Only the two fully
/// pinned-down scenarios are included; further entries come from user
/// configs.
pub fn shipped_dictator_scenarios() -> Vec<DictatorScenario> {
    let cfg = shipped_charness_rabin_config();
    cfg.scenarios
}

pub fn shipped_charness_rabin_config() -> ExperimentConfig {
    serde_json::from_str(include_str!("../../configs/charness_rabin.json"))
        .expect("shipped config parses")
}

fn money_amount(m: Money) -> String {
    // Bare amount for templates that carry their own "$".
    let cents = m.cents();
    if cents % 100 == 0 {
        format!("{}", cents / 100)
    } else {
        format!("{}.{:02}", cents / 100, (cents % 100).abs())
    }
}

fn finish_prompt(prompt: String, options: &PlanOptions) -> String {
    if options.answer_suffix {
        format!("{prompt}\n\n{ANSWER_SUFFIX}")
    } else {
        prompt
    }
}

fn base_config(
    experiment: BuiltinExperiment,
    template: &PromptTemplate,
    grid: &FactorGrid,
    personas: &[Persona],
    options: &PlanOptions,
) -> ExperimentConfig {
    ExperimentConfig {
        experiment_id: experiment.name().to_string(),
        template_text: template.template_text.clone(),
        factors: grid.factors().to_vec(),
        personas: personas.to_vec(),
        reps: options.reps,
        model_params: options.model_params.clone(),
        scenarios: Vec::new(),
    }
}

/// Expands a built-in experiment into a full plan.
pub fn build_plan(
    experiment: BuiltinExperiment,
    options: &PlanOptions,
) -> Result<RunPlan, ExperimentError> {
    match experiment {
        BuiltinExperiment::CharnessRabin => build_charness_rabin(options),
        BuiltinExperiment::KktFairness => build_kkt(options),
        BuiltinExperiment::StatusQuo => build_status_quo(options),
        BuiltinExperiment::MinWage => build_min_wage(options),
    }
}

fn build_charness_rabin(options: &PlanOptions) -> Result<RunPlan, ExperimentError> {
    let scenarios = options
        .dictator_scenarios
        .clone()
        .unwrap_or_else(shipped_dictator_scenarios);
    let (grid, personas, template) = charness_rabin_design(&scenarios)?;
    let by_name: BTreeMap<&str, &DictatorScenario> =
        scenarios.iter().map(|s| (s.name.as_str(), s)).collect();

    let specs = plan_run(&grid, &personas, options.reps, options.master_seed)?;
    let mut trials = Vec::with_capacity(specs.len());
    for spec in specs {
        let name = spec.cell.get("scenario").unwrap().key();
        let scenario = by_name[name.as_str()].clone();
        let bindings: BTreeMap<String, String> = [
            ("left_to_a".to_string(), scenario.left.to_a.to_string()),
            ("left_to_b".to_string(), scenario.left.to_b.to_string()),
            ("right_to_a".to_string(), scenario.right.to_a.to_string()),
            ("right_to_b".to_string(), scenario.right.to_b.to_string()),
        ]
        .into();
        let prompt = render_prompt(&template, &bindings, &spec.persona)?;
        let objective = match spec.persona.persona_id.as_str() {
            "fairness" => ScriptedObjective::Fairness {
                waste_threshold: options.waste_threshold,
            },
            "efficiency" => ScriptedObjective::Efficiency,
            "selfish" => ScriptedObjective::Selfish,
            _ => ScriptedObjective::Unendowed,
        };
        trials.push(PlannedTrial {
            spec,
            prompt: finish_prompt(prompt, options),
            payload: ScenarioPayload::Dictator(scenario),
            objective,
        });
    }

    let mut config = base_config(
        BuiltinExperiment::CharnessRabin,
        &template,
        &grid,
        &personas,
        options,
    );
    config.scenarios = scenarios;
    Ok(RunPlan {
        experiment: BuiltinExperiment::CharnessRabin,
        grid,
        outcome_kind: OutcomeKind::BinaryChoice,
        option_labels: DICTATOR_LABELS.iter().map(|s| s.to_string()).collect(),
        trials,
        config,
    })
}

fn build_kkt(options: &PlanOptions) -> Result<RunPlan, ExperimentError> {
    let (grid, personas, template) = kkt_design()?;
    let specs = plan_run(&grid, &personas, options.reps, options.master_seed)?;
    let mut trials = Vec::with_capacity(specs.len());
    for spec in specs {
        let price_key = spec.cell.get("price").unwrap().key();
        let framing_key = spec.cell.get("framing").unwrap().key();
        let politics_key = spec.cell.get("politics").unwrap().key();
        let bindings: BTreeMap<String, String> = [
            ("price".to_string(), price_key.clone()),
            ("framing".to_string(), framing_key.clone()),
            ("politics".to_string(), politics_key.clone()),
        ]
        .into();
        let prompt = render_prompt(&template, &bindings, &spec.persona)?;
        let politics = Politics::parse(&politics_key)
            .ok_or_else(|| ExperimentError::InvalidScenario(format!("politics '{politics_key}'")))?;
        let scenario = GougingScenario {
            base_price: GOUGING_BASE_PRICE,
            new_price: Money::from_dollars(price_key.parse::<i64>().map_err(|_| {
                ExperimentError::InvalidScenario(format!("price '{price_key}'"))
            })?),
            framing_verb: FramingVerb::parse(&framing_key)
                .ok_or_else(|| ExperimentError::InvalidScenario(format!("framing '{framing_key}'")))?,
            politics,
        };
        trials.push(PlannedTrial {
            spec,
            prompt: finish_prompt(prompt, options),
            payload: ScenarioPayload::Gouging(scenario),
            objective: ScriptedObjective::PoliticalRater { politics },
        });
    }
    let config = base_config(BuiltinExperiment::KktFairness, &template, &grid, &personas, options);
    Ok(RunPlan {
        experiment: BuiltinExperiment::KktFairness,
        grid,
        outcome_kind: OutcomeKind::Rating,
        option_labels: gouging::rating_labels().iter().map(|s| s.to_string()).collect(),
        trials,
        config,
    })
}

fn build_status_quo(options: &PlanOptions) -> Result<RunPlan, ExperimentError> {
    let allocation_options = default_options();
    let (grid, agents, template) =
        status_quo_design(options.n_agents, &allocation_options, options.master_seed)?;
    let personas: Vec<Persona> = agents.iter().map(|a| a.persona.clone()).collect();
    let beliefs: BTreeMap<&str, &Belief> = agents
        .iter()
        .map(|a| (a.persona.persona_id.as_str(), &a.belief))
        .collect();

    let specs = plan_run(&grid, &personas, options.reps, options.master_seed)?;
    let mut trials = Vec::with_capacity(specs.len());
    for spec in specs {
        let framing_key = spec.cell.get("framing").unwrap().key();
        let status_quo = framing_status_quo(&framing_key);
        debug_assert!(status_quo.is_some() || framing_key == NEUTRAL_FRAMING);
        let belief = (*beliefs[spec.persona.persona_id.as_str()]).clone();
        let framing_text = match status_quo {
            Some(index) => status_quo_sentence(&allocation_options[index]),
            None => String::new(),
        };
        let bindings: BTreeMap<String, String> = [
            ("beliefs".to_string(), belief.rendered_text.clone()),
            ("framing_text".to_string(), framing_text),
            ("options".to_string(), options_block(&allocation_options)),
        ]
        .into();
        let prompt = render_prompt(&template, &bindings, &spec.persona)?;
        let scenario = BudgetScenario {
            options: allocation_options.clone(),
            status_quo,
        };
        trials.push(PlannedTrial {
            spec,
            prompt: finish_prompt(prompt, options),
            payload: ScenarioPayload::Budget { scenario, belief },
            objective: ScriptedObjective::StatusQuoChooser {
                bias_strength: options.bias_strength,
            },
        });
    }
    let config = base_config(BuiltinExperiment::StatusQuo, &template, &grid, &personas, options);
    Ok(RunPlan {
        experiment: BuiltinExperiment::StatusQuo,
        grid,
        outcome_kind: OutcomeKind::BudgetOption,
        option_labels: allocation_options.iter().map(|o| o.label()).collect(),
        trials,
        config,
    })
}

fn build_min_wage(options: &PlanOptions) -> Result<RunPlan, ExperimentError> {
    let (grid, personas, template) = minwage_design(&options.asks)?;
    let specs = plan_run(&grid, &personas, options.reps, options.master_seed)?;
    let mut trials = Vec::with_capacity(specs.len());
    for spec in specs {
        let ask_key = spec.cell.get("ask").unwrap().key();
        let ask_dollars: f64 = ask_key.parse().map_err(|_| {
            ExperimentError::InvalidScenario(format!("ask '{ask_key}'"))
        })?;
        let ask = Money::from_cents((ask_dollars * 100.0).round() as i64);
        let condition = spec.cell.get("condition").unwrap().key();
        let min_wage = (condition == CONDITION_MINWAGE).then_some(MINIMUM_WAGE);
        let scenario = build_scenario(ask, min_wage);
        let bindings: BTreeMap<String, String> = [
            (
                "p1_years".to_string(),
                scenario.applicants[0].experience_years.to_string(),
            ),
            ("p1_wage".to_string(), money_amount(scenario.applicants[0].wage_ask)),
            (
                "p2_years".to_string(),
                scenario.applicants[1].experience_years.to_string(),
            ),
            ("p2_wage".to_string(), money_amount(scenario.applicants[1].wage_ask)),
        ]
        .into();
        let prompt = render_prompt(&template, &bindings, &spec.persona)?;
        trials.push(PlannedTrial {
            spec,
            prompt: finish_prompt(prompt, options),
            payload: ScenarioPayload::Hiring(scenario),
            objective: ScriptedObjective::Employer {
                experience_value: options.experience_value,
            },
        });
    }
    let config = base_config(BuiltinExperiment::MinWage, &template, &grid, &personas, options);
    Ok(RunPlan {
        experiment: BuiltinExperiment::MinWage,
        grid,
        outcome_kind: OutcomeKind::Hire,
        option_labels: HIRING_LABELS.iter().map(|s| s.to_string()).collect(),
        trials,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_names_round_trip() {
        for experiment in BuiltinExperiment::ALL {
            assert_eq!(experiment.name().parse::<BuiltinExperiment>().unwrap(), experiment);
        }
        assert!(matches!(
            "nope".parse::<BuiltinExperiment>(),
            Err(ExperimentError::UnknownExperiment(_))
        ));
    }

    #[test]
    fn shipped_scenarios_are_berk29_and_berk23() {
        let scenarios = shipped_dictator_scenarios();
        assert_eq!(scenarios.len(), 2);
        assert_eq!(scenarios[0].name, "Berk29");
        assert_eq!(scenarios[0].left, dictator::PayoffPair::new(400, 400));
        assert_eq!(scenarios[0].right, dictator::PayoffPair::new(750, 400));
        assert_eq!(scenarios[1].name, "Berk23");
        assert_eq!(scenarios[1].left, dictator::PayoffPair::new(800, 200));
        assert_eq!(scenarios[1].right, dictator::PayoffPair::new(0, 0));
    }

    #[test]
    fn status_quo_plan_has_500_trials_for_100_agents() {
        let options = PlanOptions {
            master_seed: 7,
            ..PlanOptions::default()
        };
        let plan = build_plan(BuiltinExperiment::StatusQuo, &options).unwrap();
        assert_eq!(plan.trials.len(), 500);
    }

    #[test]
    fn status_quo_emits_five_trials_per_persona_one_neutral() {
        let options = PlanOptions {
            n_agents: 3,
            ..PlanOptions::default()
        };
        let plan = build_plan(BuiltinExperiment::StatusQuo, &options).unwrap();
        let mut per_persona: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        for trial in &plan.trials {
            let entry = per_persona
                .entry(trial.spec.persona.persona_id.clone())
                .or_default();
            entry.0 += 1;
            if matches!(
                trial.payload,
                ScenarioPayload::Budget {
                    scenario: BudgetScenario { status_quo: None, .. },
                    ..
                }
            ) {
                entry.1 += 1;
            }
        }
        assert_eq!(per_persona.len(), 3);
        for (persona, (total, neutral)) in per_persona {
            assert_eq!(total, 5, "{persona}");
            assert_eq!(neutral, 1, "{persona}");
        }
    }

    #[test]
    fn min_wage_plan_size_is_14_times_reps() {
        let options = PlanOptions {
            reps: 30,
            ..PlanOptions::default()
        };
        let plan = build_plan(BuiltinExperiment::MinWage, &options).unwrap();
        assert_eq!(plan.trials.len(), 420);
    }

    #[test]
    fn min_wage_condition_never_shows_an_ask_below_the_floor() {
        let plan = build_plan(BuiltinExperiment::MinWage, &PlanOptions::default()).unwrap();
        for trial in &plan.trials {
            let ScenarioPayload::Hiring(scenario) = &trial.payload else {
                panic!("wrong payload")
            };
            if scenario.minimum_wage.is_some() {
                for applicant in &scenario.applicants {
                    assert!(applicant.wage_ask >= MINIMUM_WAGE);
                }
            }
        }
    }

    #[test]
    fn hiring_prompt_matches_the_survey_wording() {
        let plan = build_plan(BuiltinExperiment::MinWage, &PlanOptions::default()).unwrap();
        let trial = plan
            .trials
            .iter()
            .find(|t| {
                t.spec.cell.get("ask").unwrap().key() == "17"
                    && t.spec.cell.get("condition").unwrap().key() == "control"
            })
            .unwrap();
        assert!(trial.prompt.contains("You are hiring for the role of \"Dishwasher.\""));
        assert!(trial.prompt.contains("The typical hourly rate is $12/hour."));
        assert!(trial
            .prompt
            .contains("Person 1: Has 1 year(s) of experience in this role. Requests $17/hour."));
        assert!(trial
            .prompt
            .contains("Person 2: Has 0 year(s) of experience in this role. Requests $13/hour."));
        assert!(trial.prompt.contains("Who would you hire? You have to pick one."));
    }

    #[test]
    fn dictator_prompt_uses_the_left_right_block() {
        let plan = build_plan(BuiltinExperiment::CharnessRabin, &PlanOptions::default()).unwrap();
        let trial = plan
            .trials
            .iter()
            .find(|t| {
                t.spec.cell.get("scenario").unwrap().key() == "Berk29"
                    && t.spec.persona.persona_id == "selfish"
            })
            .unwrap();
        assert!(trial.prompt.starts_with("You only care about your own payoff\n\n"));
        assert!(trial.prompt.contains("Left: Person B gets $400 and Person A gets $400"));
        assert!(trial.prompt.contains("Right: Person B gets $400 and Person A gets $750."));
    }

    #[test]
    fn same_options_build_identical_plans() {
        let options = PlanOptions {
            master_seed: 13,
            n_agents: 5,
            ..PlanOptions::default()
        };
        let a = build_plan(BuiltinExperiment::StatusQuo, &options).unwrap();
        let b = build_plan(BuiltinExperiment::StatusQuo, &options).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn answer_suffix_is_off_by_default_and_appended_when_asked() {
        let plain = build_plan(BuiltinExperiment::KktFairness, &PlanOptions::default()).unwrap();
        assert!(!plain.trials[0].prompt.contains(ANSWER_SUFFIX));
        let options = PlanOptions {
            answer_suffix: true,
            ..PlanOptions::default()
        };
        let suffixed = build_plan(BuiltinExperiment::KktFairness, &options).unwrap();
        assert!(suffixed.trials[0].prompt.ends_with(ANSWER_SUFFIX));
    }
}
