//! The dishwasher hiring scenario with an optional minimum wage.
//!
//! Person 1 has one year of experience and a varying wage ask; Person 2 has
//! none and always asks $13/hour. Under the $15/hour minimum-wage condition
//! every ask below the floor is bid up to it.

use serde::{Deserialize, Serialize};

use crate::analysis::{ols, AnalysisError, OutcomeRecord, RegressionResult};
use crate::design::{Factor, FactorGrid, Level, Persona, PromptTemplate};
use crate::money::Money;

use super::ExperimentError;

pub const HIRING_LABELS: [&str; 2] = ["Person 1", "Person 2"];
pub const TYPICAL_RATE: Money = Money::from_cents(12_00);
pub const CONTROL_ASK_PERSON_2: Money = Money::from_cents(13_00);
pub const MINIMUM_WAGE: Money = Money::from_cents(15_00);
pub const DEFAULT_ASKS: [i64; 7] = [13, 14, 15, 16, 17, 18, 19];

pub const CONDITION_CONTROL: &str = "control";
pub const CONDITION_MINWAGE: &str = "minwage_15";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Applicant {
    pub label: String,
    pub experience_years: u32,
    pub wage_ask: Money,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiringScenario {
    pub role_name: String,
    pub typical_rate: Money,
    pub applicants: Vec<Applicant>,
    pub minimum_wage: Option<Money>,
}

impl HiringScenario {
    pub fn validate(&self) -> Result<(), String> {
        if self.applicants.len() < 2 {
            return Err("hiring scenario needs at least 2 applicants".into());
        }
        for applicant in &self.applicants {
            if applicant.wage_ask <= Money::ZERO {
                return Err(format!("{} has a non-positive wage ask", applicant.label));
            }
            if let Some(floor) = self.minimum_wage {
                if applicant.wage_ask < floor {
                    return Err(format!(
                        "{} asks {} below the minimum wage {}",
                        applicant.label, applicant.wage_ask, floor
                    ));
                }
            }
        }
        Ok(())
    }
}

/// The bid-up rule: under a wage floor an applicant's effective ask becomes
/// the larger of the ask and the floor.
pub fn apply_min_wage(ask: Money, min_wage: Money) -> Money {
    ask.max(min_wage)
}

/// Builds the two-applicant scenario for one (ask, condition) cell, with the
/// bid-up rule already applied in the minimum-wage condition.
pub fn build_scenario(person_1_ask: Money, min_wage: Option<Money>) -> HiringScenario {
    let effective = |ask: Money| match min_wage {
        Some(floor) => apply_min_wage(ask, floor),
        None => ask,
    };
    HiringScenario {
        role_name: "Dishwasher".into(),
        typical_rate: TYPICAL_RATE,
        applicants: vec![
            Applicant {
                label: "Person 1".into(),
                experience_years: 1,
                wage_ask: effective(person_1_ask),
            },
            Applicant {
                label: "Person 2".into(),
                experience_years: 0,
                wage_ask: effective(CONTROL_ASK_PERSON_2),
            },
        ],
        minimum_wage: min_wage,
    }
}

pub fn hiring_template() -> PromptTemplate {
    PromptTemplate::new(
        "You are hiring for the role of \"Dishwasher.\"\n\
         The typical hourly rate is $12/hour.\n\
         You have 2 candidates.\n\
         \n\
         Person 1: Has {p1_years} year(s) of experience in this role. Requests ${p1_wage}/hour.\n\
         Person 2: Has {p2_years} year(s) of experience in this role. Requests ${p2_wage}/hour.\n\
         \n\
         Who would you hire? You have to pick one.",
    )
}

/// The ask-by-condition grid. One cell per (Person 1 ask, condition); the
/// employer persona carries no endowment.
pub fn minwage_design(
    asks: &[Money],
) -> Result<(FactorGrid, Vec<Persona>, PromptTemplate), ExperimentError> {
    if asks.is_empty() {
        return Err(ExperimentError::InvalidScenario("ask list must be nonempty".into()));
    }
    for ask in asks {
        if *ask <= Money::ZERO {
            return Err(ExperimentError::InvalidScenario(format!(
                "wage ask {ask} must be positive"
            )));
        }
    }
    let grid = FactorGrid::new(vec![
        Factor::new(
            "ask",
            asks.iter().map(|a| Level::Number(a.dollars_f64())).collect(),
        ),
        Factor::text_levels("condition", [CONDITION_CONTROL, CONDITION_MINWAGE]),
    ])?;
    Ok((grid, vec![Persona::unendowed("employer")], hiring_template()))
}

pub fn default_asks() -> Vec<Money> {
    DEFAULT_ASKS.iter().map(|d| Money::from_dollars(*d)).collect()
}

/// Rebuilds hired wage and experience from a trial's cell and outcome.
pub fn hired_attributes(
    ask_key: &str,
    condition_key: &str,
    outcome_label: &str,
) -> Result<(Money, u32), AnalysisError> {
    let ask_dollars: f64 = ask_key
        .parse()
        .map_err(|_| AnalysisError::InvalidInput(format!("bad ask level '{ask_key}'")))?;
    let ask = Money::from_cents((ask_dollars * 100.0).round() as i64);
    let min_wage = (condition_key == CONDITION_MINWAGE).then_some(MINIMUM_WAGE);
    let scenario = build_scenario(ask, min_wage);
    let index = scenario
        .applicants
        .iter()
        .position(|a| a.label == outcome_label)
        .ok_or_else(|| {
            AnalysisError::InvalidInput(format!("outcome '{outcome_label}' names no applicant"))
        })?;
    let hired = &scenario.applicants[index];
    Ok((hired.wage_ask, hired.experience_years))
}

/// Regresses hired wage and hired experience on the minimum-wage indicator,
/// from a run's parsed outcome records.
pub fn minwage_regressions(
    records: &[OutcomeRecord],
) -> Result<(RegressionResult, RegressionResult), AnalysisError> {
    let mut wages = Vec::with_capacity(records.len());
    let mut experience = Vec::with_capacity(records.len());
    let mut indicator = Vec::with_capacity(records.len());
    for record in records {
        let find = |key: &str| {
            record
                .assignments
                .iter()
                .find(|(name, _)| name == key)
                .map(|(_, value)| value.as_str())
                .ok_or_else(|| AnalysisError::InvalidInput(format!("missing factor '{key}'")))
        };
        let ask_key = find("ask")?;
        let condition_key = find("condition")?;
        let (wage, years) = hired_attributes(ask_key, condition_key, &record.outcome_label)?;
        wages.push(wage.dollars_f64());
        experience.push(years as f64);
        indicator.push(if condition_key == CONDITION_MINWAGE { 1.0 } else { 0.0 });
    }
    let term = "minwage_15".to_string();
    let wage_fit = ols(&wages, &[(term.clone(), indicator.clone())])?;
    let experience_fit = ols(&experience, &[(term, indicator)])?;
    Ok((wage_fit, experience_fit))
}
