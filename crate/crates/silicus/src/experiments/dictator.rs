//! Unilateral dictator-game scenarios and the endowed-persona design.
//!
//! Person B chooses between two allocations, "Left" or "Right". The design
//! crosses a scenario factor with four personas: no endowment plus the three
//! point-of-view endowments (fairness, efficiency, self-interest).

use serde::{Deserialize, Serialize};

use crate::analysis::TypeVector;
use crate::design::{Factor, FactorGrid, Level, Persona, PromptTemplate};
use crate::money::Money;
use crate::parsing::Choice;

use super::ExperimentError;

/// The exact endowment strings used for the three endowed personas.
pub const FAIRNESS_ENDOWMENT: &str = "You only care about fairness between players.";
pub const EFFICIENCY_ENDOWMENT: &str = "You only care about the total payoff of both players";
pub const SELFISH_ENDOWMENT: &str = "You only care about your own payoff";

pub const DICTATOR_LABELS: [&str; 2] = ["Left", "Right"];

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayoffPair {
    pub to_a: Money,
    pub to_b: Money,
}

impl PayoffPair {
    pub fn new(to_a: i64, to_b: i64) -> PayoffPair {
        PayoffPair {
            to_a: Money::from_dollars(to_a),
            to_b: Money::from_dollars(to_b),
        }
    }

    pub fn total(&self) -> Money {
        self.to_a + self.to_b
    }

    pub fn disparity(&self) -> Money {
        Money::from_cents((self.to_a.cents() - self.to_b.cents()).abs())
    }
}

/// Which player makes the choice. Every scenario here is decided by Person B.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    PersonA,
    #[default]
    PersonB,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DictatorScenario {
    pub name: String,
    pub left: PayoffPair,
    pub right: PayoffPair,
    #[serde(default)]
    pub chooser: Role,
}

impl DictatorScenario {
    pub fn new(name: impl Into<String>, left: PayoffPair, right: PayoffPair) -> DictatorScenario {
        DictatorScenario {
            name: name.into(),
            left,
            right,
            chooser: Role::PersonB,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (side, pair) in [("left", &self.left), ("right", &self.right)] {
            if pair.to_a < Money::ZERO || pair.to_b < Money::ZERO {
                return Err(format!("scenario '{}' has negative {side} payoff", self.name));
            }
        }
        Ok(())
    }

    /// Payoff to the choosing player for one side.
    pub fn chooser_payoff(&self, pair: &PayoffPair) -> Money {
        match self.chooser {
            Role::PersonA => pair.to_a,
            Role::PersonB => pair.to_b,
        }
    }
}

/// The four personas of the dictator design, in fixed order.
pub fn dictator_personas() -> Vec<Persona> {
    vec![
        Persona::unendowed("unendowed"),
        Persona::new("fairness", FAIRNESS_ENDOWMENT),
        Persona::new("efficiency", EFFICIENCY_ENDOWMENT),
        Persona::new("selfish", SELFISH_ENDOWMENT),
    ]
}

/// The Left/Right block prompt. Payoff placeholders are bound per scenario.
pub fn dictator_template() -> PromptTemplate {
    PromptTemplate::new(
        "You are Person B.\n\
         \n\
         Left: Person B gets {left_to_b} and Person A gets {left_to_a}\n\
         or\n\
         Right: Person B gets {right_to_b} and Person A gets {right_to_a}.\n\
         \n\
         Do you choose Left or Right?",
    )
}

/// Per-scenario "plays Left" bit vectors for the fair, efficient, and
/// selfish types, derived from the scripted decision rules.
pub fn type_vectors(scenarios: &[DictatorScenario], waste_threshold: Money) -> Vec<TypeVector> {
    use crate::agents::{scripted_dictator_choice, ScriptedObjective};
    let objectives = [
        ("fair", ScriptedObjective::Fairness { waste_threshold }),
        ("efficient", ScriptedObjective::Efficiency),
        ("selfish", ScriptedObjective::Selfish),
    ];
    objectives
        .into_iter()
        .map(|(name, objective)| {
            let bits = scenarios
                .iter()
                .map(|s| (scripted_dictator_choice(s, &objective) == Choice::Left) as u8)
                .collect();
            TypeVector::new(name, bits)
        })
        .collect()
}

/// Builds the scenario-by-persona grid for a dictator scenario set.
pub fn charness_rabin_design(
    scenarios: &[DictatorScenario],
) -> Result<(FactorGrid, Vec<Persona>, PromptTemplate), ExperimentError> {
    if scenarios.is_empty() {
        return Err(ExperimentError::EmptyScenarioSet);
    }
    for scenario in scenarios {
        scenario.validate().map_err(ExperimentError::InvalidScenario)?;
    }
    let grid = FactorGrid::new(vec![Factor::new(
        "scenario",
        scenarios
            .iter()
            .map(|s| Level::Text(s.name.clone()))
            .collect(),
    )])?;
    Ok((grid, dictator_personas(), dictator_template()))
}
