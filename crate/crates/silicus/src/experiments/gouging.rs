//! The snow-shovel price-gouging survey: price x framing x politics.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::design::{Factor, FactorGrid, Level, Persona, PromptTemplate};
use crate::money::Money;
use crate::parsing::Rating;

use super::ExperimentError;

pub const GOUGING_BASE_PRICE: Money = Money::from_cents(15_00);
pub const GOUGING_PRICES: [i64; 4] = [16, 20, 40, 100];

pub fn rating_labels() -> Vec<&'static str> {
    Rating::ALL.iter().map(|r| r.label()).collect()
}

/// The two framings of the price change; `Raises` is the original wording.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FramingVerb {
    Changes,
    Raises,
}

impl FramingVerb {
    pub fn phrase(self) -> &'static str {
        match self {
            FramingVerb::Changes => "changes the price to",
            FramingVerb::Raises => "raises the price to",
        }
    }

    pub const ALL: [FramingVerb; 2] = [FramingVerb::Changes, FramingVerb::Raises];

    pub fn parse(text: &str) -> Option<FramingVerb> {
        FramingVerb::ALL.into_iter().find(|v| v.phrase() == text)
    }
}

impl fmt::Display for FramingVerb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.phrase())
    }
}

/// Endowed political leaning, ordered left to right.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Politics {
    Socialist,
    Liberal,
    Moderate,
    Conservative,
    Libertarian,
}

impl Politics {
    pub const ALL: [Politics; 5] = [
        Politics::Socialist,
        Politics::Liberal,
        Politics::Moderate,
        Politics::Conservative,
        Politics::Libertarian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Politics::Socialist => "socialist",
            Politics::Liberal => "liberal",
            Politics::Moderate => "moderate",
            Politics::Conservative => "conservative",
            Politics::Libertarian => "libertarian",
        }
    }

    pub fn parse(text: &str) -> Option<Politics> {
        Politics::ALL.into_iter().find(|p| p.name() == text)
    }
}

impl fmt::Display for Politics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GougingScenario {
    pub base_price: Money,
    pub new_price: Money,
    pub framing_verb: FramingVerb,
    pub politics: Politics,
}

impl GougingScenario {
    pub fn validate(&self) -> Result<(), String> {
        if self.new_price <= self.base_price {
            return Err(format!(
                "new price {} must exceed base price {}",
                self.new_price, self.base_price
            ));
        }
        Ok(())
    }
}

pub fn gouging_template() -> PromptTemplate {
    PromptTemplate::new(
        "You are a {politics}.\n\
         \n\
         A hardware store has been selling snow shovels for $15. \
         The morning after a large snowstorm, the store {framing} ${price}.\n\
         \n\
         Please rate this action as:\n\
         1) Completely Fair  2) Acceptable 3) Unfair  4) Very Unfair",
    )
}

/// The full 4 x 2 x 5 factorial: price, framing, politics. Politics enters
/// the prompt as a factor binding, so the persona set is the single
/// un-endowed agent.
pub fn kkt_design() -> Result<(FactorGrid, Vec<Persona>, PromptTemplate), ExperimentError> {
    let grid = FactorGrid::new(vec![
        Factor::new(
            "price",
            GOUGING_PRICES.iter().map(|p| Level::Number(*p as f64)).collect(),
        ),
        Factor::new(
            "framing",
            FramingVerb::ALL
                .iter()
                .map(|v| Level::Text(v.phrase().into()))
                .collect(),
        ),
        Factor::new(
            "politics",
            Politics::ALL.iter().map(|p| Level::Text(p.name().into())).collect(),
        ),
    ])?;
    Ok((grid, vec![Persona::unendowed("respondent")], gouging_template()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{expand_design, render_prompt};
    use std::collections::BTreeMap;

    #[test]
    fn design_expands_to_40_cells() {
        let (grid, personas, _) = kkt_design().unwrap();
        assert_eq!(expand_design(&grid).unwrap().len(), 40);
        assert_eq!(personas.len(), 1);
    }

    #[test]
    fn every_prompt_has_base_price_and_exactly_one_framing_verb() {
        let (grid, personas, template) = kkt_design().unwrap();
        for cell in expand_design(&grid).unwrap() {
            let bindings: BTreeMap<String, String> = [
                ("price".to_string(), cell.get("price").unwrap().key()),
                ("framing".to_string(), cell.get("framing").unwrap().key()),
                ("politics".to_string(), cell.get("politics").unwrap().key()),
            ]
            .into();
            let prompt = render_prompt(&template, &bindings, &personas[0]).unwrap();
            assert!(prompt.contains("$15"));
            let verbs = FramingVerb::ALL
                .iter()
                .filter(|v| prompt.contains(v.phrase()))
                .count();
            assert_eq!(verbs, 1, "prompt: {prompt}");
        }
    }

    #[test]
    fn original_condition_is_price_20_with_raises_framing() {
        let (grid, personas, template) = kkt_design().unwrap();
        let cell = expand_design(&grid)
            .unwrap()
            .into_iter()
            .find(|c| {
                c.get("price").unwrap().key() == "20"
                    && c.get("framing").unwrap().key() == FramingVerb::Raises.phrase()
            })
            .unwrap();
        let bindings: BTreeMap<String, String> = cell
            .key_assignments()
            .into_iter()
            .map(|(k, v)| (k, v))
            .collect();
        let prompt = render_prompt(&template, &bindings, &personas[0]).unwrap();
        assert!(prompt.contains("the store raises the price to $20."));
    }

    #[test]
    fn neutral_framing_text_is_changes_the_price_to() {
        assert_eq!(FramingVerb::Changes.phrase(), "changes the price to");
    }

    #[test]
    fn scenario_requires_price_increase() {
        let bad = GougingScenario {
            base_price: GOUGING_BASE_PRICE,
            new_price: Money::from_dollars(15),
            framing_verb: FramingVerb::Raises,
            politics: Politics::Moderate,
        };
        assert!(bad.validate().is_err());
    }
}
