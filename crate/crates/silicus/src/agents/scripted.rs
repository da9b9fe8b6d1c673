//! Deterministic scripted agents.
//!
//! Each objective is a utility rule reproducing the qualitative behavior of
//! the corresponding endowed agent: dictator choosers that care about
//! fairness, efficiency, or self-interest; a political fairness rater; a
//! status-quo-biased budget chooser; and an employer trading off experience
//! against wage. All rules are pure functions, so a scripted run is
//! reproducible bit-for-bit from its manifest.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::design::ModelParams;
use crate::experiments::budget::{Belief, BudgetScenario};
use crate::experiments::dictator::DictatorScenario;
use crate::experiments::gouging::{FramingVerb, GougingScenario, Politics};
use crate::experiments::hiring::HiringScenario;
use crate::experiments::{PlannedTrial, ScenarioPayload};
use crate::money::Money;
use crate::parsing::{Choice, Rating};

use super::{AgentBackend, BackendError, CompletionRecord};

/// Default cap on how much total payoff the fairness objective will destroy
/// to equalize the players.
pub const DEFAULT_WASTE_THRESHOLD: Money = Money::from_cents(500_00);
/// Default status-quo bonus in the budget chooser's score.
pub const DEFAULT_BIAS_STRENGTH: f64 = 0.35;
/// Default value of one year of experience, per hour, to the employer.
pub const DEFAULT_EXPERIENCE_VALUE: Money = Money::from_cents(3_00);

/// A deterministic utility rule standing in for an endowed persona.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScriptedObjective {
    Fairness { waste_threshold: Money },
    Efficiency,
    Selfish,
    Unendowed,
    PoliticalRater { politics: Politics },
    StatusQuoChooser { bias_strength: f64 },
    Employer { experience_value: Money },
}

impl ScriptedObjective {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            ScriptedObjective::Fairness { waste_threshold } if *waste_threshold < Money::ZERO => {
                Err("waste_threshold must be >= 0".into())
            }
            ScriptedObjective::StatusQuoChooser { bias_strength } if *bias_strength < 0.0 => {
                Err("bias_strength must be >= 0".into())
            }
            ScriptedObjective::Employer { experience_value } if *experience_value < Money::ZERO => {
                Err("experience_value must be >= 0".into())
            }
            _ => Ok(()),
        }
    }
}

/// Chooses Left or Right in a dictator scenario.
///
/// - selfish: maximize own payoff; ties broken by total payoff, then Left.
/// - efficiency and unendowed: maximize total payoff; ties go Left.
/// - fairness: minimize |to_A - to_B|, unless doing so destroys more than
///   `waste_threshold` of total payoff relative to the alternative.
pub fn scripted_dictator_choice(s: &DictatorScenario, obj: &ScriptedObjective) -> Choice {
    match obj {
        ScriptedObjective::Selfish => {
            let own_left = s.chooser_payoff(&s.left);
            let own_right = s.chooser_payoff(&s.right);
            if own_left != own_right {
                if own_left > own_right {
                    Choice::Left
                } else {
                    Choice::Right
                }
            } else if s.right.total() > s.left.total() {
                Choice::Right
            } else {
                Choice::Left
            }
        }
        ScriptedObjective::Efficiency | ScriptedObjective::Unendowed => {
            if s.right.total() > s.left.total() {
                Choice::Right
            } else {
                Choice::Left
            }
        }
        ScriptedObjective::Fairness { waste_threshold } => {
            let (fair, alternative) = if s.right.disparity() < s.left.disparity() {
                (Choice::Right, Choice::Left)
            } else {
                (Choice::Left, Choice::Right)
            };
            let total_of = |c: Choice| match c {
                Choice::Left => s.left.total(),
                Choice::Right => s.right.total(),
            };
            let wasted = total_of(alternative) - total_of(fair);
            if wasted > *waste_threshold {
                alternative
            } else {
                fair
            }
        }
        other => unreachable_objective(other, "dictator"),
    }
}

fn unreachable_objective(obj: &ScriptedObjective, experiment: &str) -> ! {
    panic!("objective {obj:?} cannot decide a {experiment} scenario")
}

/// Rule table mapping (politics, price, framing) to a severity score.
/// Scores 1-2 map to Acceptable, 3 to Unfair, 4 and above to Very Unfair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingTable {
    /// (upper price bound inclusive, tier) pairs in ascending order; prices
    /// above every bound take `top_tier`.
    pub price_tiers: Vec<(Money, i32)>,
    pub top_tier: i32,
    pub politics_offsets: Vec<(Politics, i32)>,
    /// Extra severity for specific (politics, framing, price) combinations.
    pub framing_bumps: Vec<(Politics, FramingVerb, Money, i32)>,
}

impl Default for RatingTable {
    fn default() -> Self {
        RatingTable {
            price_tiers: vec![
                (Money::from_dollars(16), 1),
                (Money::from_dollars(20), 2),
                (Money::from_dollars(40), 3),
            ],
            top_tier: 4,
            politics_offsets: vec![
                (Politics::Socialist, 1),
                (Politics::Liberal, 1),
                (Politics::Moderate, 0),
                (Politics::Conservative, 1),
                (Politics::Libertarian, 0),
            ],
            framing_bumps: vec![(
                Politics::Socialist,
                FramingVerb::Raises,
                Money::from_dollars(20),
                1,
            )],
        }
    }
}

impl RatingTable {
    pub fn severity(&self, s: &GougingScenario) -> i32 {
        let tier = self
            .price_tiers
            .iter()
            .find(|(bound, _)| s.new_price <= *bound)
            .map(|(_, tier)| *tier)
            .unwrap_or(self.top_tier);
        let offset = self
            .politics_offsets
            .iter()
            .find(|(p, _)| *p == s.politics)
            .map(|(_, o)| *o)
            .unwrap_or(0);
        let bump = self
            .framing_bumps
            .iter()
            .find(|(p, f, price, _)| {
                *p == s.politics && *f == s.framing_verb && *price == s.new_price
            })
            .map(|(_, _, _, b)| *b)
            .unwrap_or(0);
        tier + offset + bump
    }

    pub fn rating(&self, s: &GougingScenario) -> Rating {
        match self.severity(s) {
            i32::MIN..=2 => Rating::Acceptable,
            3 => Rating::Unfair,
            _ => Rating::VeryUnfair,
        }
    }
}

/// Rates a price-gouging scenario using the default rule table.
pub fn scripted_fairness_rating(s: &GougingScenario) -> Rating {
    RatingTable::default().rating(s)
}

/// Picks a budget option: closeness to the believed-best allocation, plus a
/// status-quo bonus of `bias_strength`. Ties go to the lower index.
pub fn scripted_budget_choice(s: &BudgetScenario, belief: &Belief, bias_strength: f64) -> usize {
    let preferred = s.options[belief.preferred_option].car_pct as f64;
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (index, option) in s.options.iter().enumerate() {
        let mut score = -(option.car_pct as f64 - preferred).abs() / 100.0;
        if s.status_quo == Some(index) {
            score += bias_strength;
        }
        if score > best_score {
            best = index;
            best_score = score;
        }
    }
    best
}

/// Picks an applicant: each year of experience is worth `experience_value`
/// per hour, offset by the ask's premium over the typical rate. Ties break
/// to the lowest wage ask, then the lowest index.
pub fn scripted_hiring_choice(s: &HiringScenario, experience_value: Money) -> usize {
    let mut best = 0;
    let mut best_score = i64::MIN;
    for (index, applicant) in s.applicants.iter().enumerate() {
        let score = experience_value.cents() * applicant.experience_years as i64
            - (applicant.wage_ask.cents() - s.typical_rate.cents());
        let better = score > best_score
            || (score == best_score && applicant.wage_ask < s.applicants[best].wage_ask);
        if better {
            best = index;
            best_score = score;
        }
    }
    best
}

/// Tunable parameters for the scripted agent population.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptedParams {
    pub waste_threshold: Money,
    pub bias_strength: f64,
    pub experience_value: Money,
    pub rating_table: RatingTable,
}

impl Default for ScriptedParams {
    fn default() -> Self {
        ScriptedParams {
            waste_threshold: DEFAULT_WASTE_THRESHOLD,
            bias_strength: DEFAULT_BIAS_STRENGTH,
            experience_value: DEFAULT_EXPERIENCE_VALUE,
            rating_table: RatingTable::default(),
        }
    }
}

/// The deterministic backend: answers every trial with the option label its
/// objective selects, so responses round-trip through the strict parser.
pub struct ScriptedBackend {
    params: ScriptedParams,
}

impl ScriptedBackend {
    pub fn new(params: ScriptedParams) -> ScriptedBackend {
        ScriptedBackend { params }
    }

    pub fn params(&self) -> &ScriptedParams {
        &self.params
    }

    fn answer(&self, trial: &PlannedTrial) -> Result<String, BackendError> {
        match &trial.payload {
            ScenarioPayload::Dictator(s) => {
                let choice = scripted_dictator_choice(s, &trial.objective);
                Ok(format!("{choice:?}"))
            }
            ScenarioPayload::Gouging(s) => {
                Ok(self.params.rating_table.rating(s).label().to_string())
            }
            ScenarioPayload::Budget { scenario, belief } => {
                let beta = match trial.objective {
                    ScriptedObjective::StatusQuoChooser { bias_strength } => bias_strength,
                    _ => self.params.bias_strength,
                };
                let index = scripted_budget_choice(scenario, belief, beta);
                Ok(scenario.options[index].label())
            }
            ScenarioPayload::Hiring(s) => {
                let value = match trial.objective {
                    ScriptedObjective::Employer { experience_value } => experience_value,
                    _ => self.params.experience_value,
                };
                let index = scripted_hiring_choice(s, value);
                Ok(s.applicants[index].label.clone())
            }
        }
    }
}

impl AgentBackend for ScriptedBackend {
    fn backend_id(&self) -> &str {
        "scripted"
    }

    fn complete(
        &self,
        trial: &PlannedTrial,
        _params: &ModelParams,
    ) -> Result<CompletionRecord, BackendError> {
        let started = Instant::now();
        let raw_text = self.answer(trial)?;
        Ok(CompletionRecord {
            raw_text,
            backend_id: self.backend_id().to_string(),
            latency_ms: started.elapsed().as_millis() as u64,
            token_counts: None,
            cache_hit: false,
            attempts: 1,
        })
    }
}
