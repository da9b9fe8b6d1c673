//! The safety-budget allocation experiment with status-quo framing.
//!
//! Each simulated agent holds a sampled baseline belief and sees five
//! framings of the same option list: one neutral, plus each option
//! presented as the status quo. Every trial is an independent call; no
//! state passes between an agent's five scenarios.
//!
//! The canonical option list is (70, 30), (40, 60), (30, 70), (50, 50)
//! in (cars %, highways %) order. The second entry is sometimes quoted
//! transposed as (60, 40); the list here is authoritative for this harness.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::design::{derive_seed, Factor, FactorGrid, Level, Persona, PromptTemplate};

use super::ExperimentError;

pub const NEUTRAL_FRAMING: &str = "neutral";

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationOption {
    pub car_pct: u8,
    pub highway_pct: u8,
}

impl AllocationOption {
    pub const fn new(car_pct: u8, highway_pct: u8) -> AllocationOption {
        AllocationOption {
            car_pct,
            highway_pct,
        }
    }

    pub fn label(&self) -> String {
        format!("{}% cars, {}% highways", self.car_pct, self.highway_pct)
    }
}

impl fmt::Display for AllocationOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

pub fn default_options() -> Vec<AllocationOption> {
    vec![
        AllocationOption::new(70, 30),
        AllocationOption::new(40, 60),
        AllocationOption::new(30, 70),
        AllocationOption::new(50, 50),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetScenario {
    pub options: Vec<AllocationOption>,
    /// Index of the option framed as the status quo; absent means neutral.
    pub status_quo: Option<usize>,
}

impl BudgetScenario {
    pub fn validate(&self) -> Result<(), String> {
        for option in &self.options {
            if option.car_pct as u16 + option.highway_pct as u16 != 100 {
                return Err(format!("option {option} does not sum to 100"));
            }
        }
        if let Some(index) = self.status_quo {
            if index >= self.options.len() {
                return Err(format!("status quo index {index} out of range"));
            }
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intensity {
    Weak,
    Moderate,
    Strong,
}

impl Intensity {
    pub const ALL: [Intensity; 3] = [Intensity::Weak, Intensity::Moderate, Intensity::Strong];

    pub fn adverb(self) -> &'static str {
        match self {
            Intensity::Weak => "weakly",
            Intensity::Moderate => "moderately",
            Intensity::Strong => "strongly",
        }
    }
}

/// A sampled baseline opinion, rendered into the prompt after
/// "Your own beliefs are:".
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Belief {
    pub preferred_option: usize,
    pub intensity: Intensity,
    pub rendered_text: String,
}

fn render_belief(option: &AllocationOption, intensity: Intensity) -> String {
    format!(
        "You {} believe the best allocation is {}% to automobile safety and {}% to highway safety.",
        intensity.adverb(),
        option.car_pct,
        option.highway_pct
    )
}

/// Draws `n` i.i.d. beliefs: uniform over option indices and uniform over
/// intensity levels, deterministically from the seed.
pub fn sample_beliefs(n: usize, options: &[AllocationOption], seed: u64) -> Vec<Belief> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let preferred_option = rng.random_range(0..options.len());
            let intensity = Intensity::ALL[rng.random_range(0..Intensity::ALL.len())];
            Belief {
                preferred_option,
                intensity,
                rendered_text: render_belief(&options[preferred_option], intensity),
            }
        })
        .collect()
}

pub fn budget_template() -> PromptTemplate {
    PromptTemplate::new(
        "The National Highway Safety Commission is deciding how to allocate its budget \
         between two safety research programs: i) improving automobile safety (bumpers, \
         body, gas tank configurations, seatbelts) and ii) improving the safety of \
         interstate highways (guard rails, grading, highway interchanges, and implementing \
         selectively reduced speed limits).\n\
         \n\
         Your own beliefs are: {beliefs}\n\
         \n\
         {framing_text}The options are:\n\
         {options}\n\
         Which option do you choose?",
    )
}

/// Sentence inserted above the option list when one option is the status quo.
pub fn status_quo_sentence(option: &AllocationOption) -> String {
    format!("The current budget allocation is {}.\n\n", option.label())
}

pub fn options_block(options: &[AllocationOption]) -> String {
    options
        .iter()
        .enumerate()
        .map(|(i, o)| format!("{}) {}\n", i + 1, o.label()))
        .collect()
}

/// One agent of the status-quo design: an un-endowed persona paired with a
/// sampled belief that is bound into each of its five prompts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetAgent {
    pub persona: Persona,
    pub belief: Belief,
}

/// The framing grid (neutral plus one status-quo level per option) and the
/// sampled agent pool.
pub fn status_quo_design(
    n_agents: usize,
    options: &[AllocationOption],
    seed: u64,
) -> Result<(FactorGrid, Vec<BudgetAgent>, PromptTemplate), ExperimentError> {
    if n_agents == 0 {
        return Err(ExperimentError::InvalidScenario("n_agents must be at least 1".into()));
    }
    let scenario = BudgetScenario {
        options: options.to_vec(),
        status_quo: None,
    };
    scenario.validate().map_err(ExperimentError::InvalidScenario)?;

    let mut levels = vec![Level::Text(NEUTRAL_FRAMING.into())];
    levels.extend(
        (0..options.len()).map(|i| Level::Text(format!("status_quo_{}", i + 1))),
    );
    let grid = FactorGrid::new(vec![Factor::new("framing", levels)])?;

    let belief_seed = derive_seed(seed, &[b"beliefs"]);
    let beliefs = sample_beliefs(n_agents, options, belief_seed);
    let agents = beliefs
        .into_iter()
        .enumerate()
        .map(|(i, belief)| BudgetAgent {
            persona: Persona::unendowed(format!("agent-{i:03}")),
            belief,
        })
        .collect();
    Ok((grid, agents, budget_template()))
}

/// Parses a framing level key back into a status-quo index.
pub fn framing_status_quo(key: &str) -> Option<usize> {
    key.strip_prefix("status_quo_")
        .and_then(|n| n.parse::<usize>().ok())
        .map(|n| n - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::expand_design;

    #[test]
    fn hundred_agents_times_five_framings_is_500_trials() {
        let (grid, agents, _) = status_quo_design(100, &default_options(), 7).unwrap();
        let cells = expand_design(&grid).unwrap();
        assert_eq!(cells.len(), 5);
        assert_eq!(agents.len(), 100);
        assert_eq!(cells.len() * agents.len(), 500);
    }

    #[test]
    fn exactly_one_framing_is_neutral() {
        let (grid, _, _) = status_quo_design(1, &default_options(), 7).unwrap();
        let cells = expand_design(&grid).unwrap();
        let neutral = cells
            .iter()
            .filter(|c| c.get("framing").unwrap().key() == NEUTRAL_FRAMING)
            .count();
        assert_eq!(neutral, 1);
        assert_eq!(cells.len(), 5);
    }

    #[test]
    fn belief_sampling_is_deterministic_in_the_seed() {
        let options = default_options();
        let a = sample_beliefs(50, &options, 11);
        let b = sample_beliefs(50, &options, 11);
        assert_eq!(a, b);
        let c = sample_beliefs(50, &options, 12);
        assert_ne!(a, c);
    }

    #[test]
    fn single_option_list_makes_every_belief_prefer_it() {
        let options = vec![AllocationOption::new(50, 50)];
        for belief in sample_beliefs(20, &options, 3) {
            assert_eq!(belief.preferred_option, 0);
            assert!(!belief.rendered_text.is_empty());
        }
    }

    #[test]
    fn preferred_options_are_roughly_uniform() {
        let options = default_options();
        let beliefs = sample_beliefs(4000, &options, 5);
        for index in 0..options.len() {
            let count = beliefs.iter().filter(|b| b.preferred_option == index).count();
            let fraction = count as f64 / beliefs.len() as f64;
            assert!((fraction - 0.25).abs() < 0.05, "option {index}: {fraction}");
        }
    }

    #[test]
    fn options_must_sum_to_100() {
        let bad = BudgetScenario {
            options: vec![AllocationOption::new(70, 40)],
            status_quo: None,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn framing_keys_round_trip() {
        assert_eq!(framing_status_quo("status_quo_1"), Some(0));
        assert_eq!(framing_status_quo("status_quo_4"), Some(3));
        assert_eq!(framing_status_quo(NEUTRAL_FRAMING), None);
    }
}
