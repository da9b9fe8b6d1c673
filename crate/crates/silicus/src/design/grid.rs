//! Factor grids and their cartesian expansion.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DesignError {
    #[error("factor '{0}' has zero levels")]
    EmptyFactor(String),
    #[error("duplicate factor name '{0}'")]
    DuplicateFactor(String),
    #[error("missing binding for placeholder '{0}'")]
    MissingPlaceholder(String),
    #[error("binding '{0}' does not match any placeholder in the template")]
    UnknownPlaceholder(String),
    #[error("replication count must be at least 1")]
    ZeroReps,
}

/// One level of a factor: free text, a bare number, or a number with units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Level {
    Number(f64),
    Quantity { value: f64, units: String },
    Text(String),
}

impl Level {
    pub fn text(s: impl Into<String>) -> Level {
        Level::Text(s.into())
    }

    pub fn number(v: f64) -> Level {
        Level::Number(v)
    }

    /// Stable string form used for prompt bindings, grouping keys, and exports.
    pub fn key(&self) -> String {
        self.to_string()
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Level::Number(v) | Level::Quantity { value: v, .. } => Some(*v),
            Level::Text(_) => None,
        }
    }
}

fn fmt_number(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        write!(f, "{}", v as i64)
    } else {
        write!(f, "{v}")
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Number(v) => fmt_number(*v, f),
            Level::Quantity { value, units } => {
                fmt_number(*value, f)?;
                write!(f, " {units}")
            }
            Level::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub levels: Vec<Level>,
}

impl Factor {
    pub fn new(name: impl Into<String>, levels: Vec<Level>) -> Factor {
        Factor {
            name: name.into(),
            levels,
        }
    }

    pub fn text_levels<S: Into<String>>(
        name: impl Into<String>,
        levels: impl IntoIterator<Item = S>,
    ) -> Factor {
        Factor::new(
            name,
            levels.into_iter().map(|s| Level::Text(s.into())).collect(),
        )
    }
}

/// An ordered factorial design. Factor names are unique and every factor
/// has at least one level; expansion size is the product of level counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorGrid {
    factors: Vec<Factor>,
}

impl FactorGrid {
    pub fn new(factors: Vec<Factor>) -> Result<FactorGrid, DesignError> {
        let mut seen = std::collections::BTreeSet::new();
        for factor in &factors {
            if factor.levels.is_empty() {
                return Err(DesignError::EmptyFactor(factor.name.clone()));
            }
            if !seen.insert(factor.name.as_str()) {
                return Err(DesignError::DuplicateFactor(factor.name.clone()));
            }
        }
        Ok(FactorGrid { factors })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor_names(&self) -> Vec<String> {
        self.factors.iter().map(|f| f.name.clone()).collect()
    }

    pub fn expansion_size(&self) -> usize {
        self.factors.iter().map(|f| f.levels.len()).product()
    }
}

/// One fully-assigned treatment cell of a grid.
///
/// `assignments` pairs every factor name with its chosen level, in the
/// grid's factor order. `cell_index` is the position in row-major
/// expansion order (last factor varies fastest).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub assignments: Vec<(String, Level)>,
    pub cell_index: usize,
}

impl Cell {
    pub fn get(&self, factor: &str) -> Option<&Level> {
        self.assignments
            .iter()
            .find(|(name, _)| name == factor)
            .map(|(_, level)| level)
    }

    /// Assignment map rendered as stable strings, for grouping and export.
    pub fn key_assignments(&self) -> Vec<(String, String)> {
        self.assignments
            .iter()
            .map(|(name, level)| (name.clone(), level.key()))
            .collect()
    }
}

/// Expands a grid into the full cartesian product, row-major with the last
/// factor varying fastest.
pub fn expand_design(grid: &FactorGrid) -> Result<Vec<Cell>, DesignError> {
    for factor in grid.factors() {
        if factor.levels.is_empty() {
            return Err(DesignError::EmptyFactor(factor.name.clone()));
        }
    }
    let size = grid.expansion_size();
    let mut cells = Vec::with_capacity(size);
    for index in 0..size {
        let mut remainder = index;
        let mut assignments = vec![None; grid.factors().len()];
        for (pos, factor) in grid.factors().iter().enumerate().rev() {
            let count = factor.levels.len();
            let level = &factor.levels[remainder % count];
            assignments[pos] = Some((factor.name.clone(), level.clone()));
            remainder /= count;
        }
        cells.push(Cell {
            assignments: assignments.into_iter().map(Option::unwrap).collect(),
            cell_index: index,
        });
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(factors: Vec<Factor>) -> FactorGrid {
        FactorGrid::new(factors).unwrap()
    }

    #[test]
    fn expansion_matches_product_of_level_counts() {
        // 4 prices x 2 framings x 5 politics = 40 cells.
        let g = grid(vec![
            Factor::new(
                "price",
                vec![16.0, 20.0, 40.0, 100.0].into_iter().map(Level::Number).collect(),
            ),
            Factor::text_levels("framing", ["changes", "raises"]),
            Factor::text_levels(
                "politics",
                ["socialist", "liberal", "moderate", "conservative", "libertarian"],
            ),
        ]);
        assert_eq!(expand_design(&g).unwrap().len(), 40);
    }

    #[test]
    fn singleton_grid_expands_to_one_cell() {
        let g = grid(vec![Factor::text_levels("a", ["x"])]);
        let cells = expand_design(&g).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].get("a"), Some(&Level::text("x")));
        assert_eq!(cells[0].cell_index, 0);
    }

    #[test]
    fn row_major_order_last_factor_fastest() {
        let g = grid(vec![
            Factor::new("a", vec![Level::Number(1.0), Level::Number(2.0)]),
            Factor::text_levels("b", ["u", "v"]),
        ]);
        let cells = expand_design(&g).unwrap();
        let keys: Vec<(String, String)> = cells
            .iter()
            .map(|c| (c.get("a").unwrap().key(), c.get("b").unwrap().key()))
            .collect();
        assert_eq!(
            keys,
            vec![
                ("1".into(), "u".into()),
                ("1".into(), "v".into()),
                ("2".into(), "u".into()),
                ("2".into(), "v".into()),
            ]
        );
    }

    #[test]
    fn empty_factor_is_rejected() {
        let err = FactorGrid::new(vec![Factor::new("a", vec![])]).unwrap_err();
        assert_eq!(err, DesignError::EmptyFactor("a".into()));
    }

    #[test]
    fn duplicate_factor_names_are_rejected() {
        let err = FactorGrid::new(vec![
            Factor::text_levels("a", ["x"]),
            Factor::text_levels("a", ["y"]),
        ])
        .unwrap_err();
        assert_eq!(err, DesignError::DuplicateFactor("a".into()));
    }

    #[test]
    fn level_keys_render_integers_without_decimal_point() {
        assert_eq!(Level::Number(20.0).key(), "20");
        assert_eq!(Level::Number(2.5).key(), "2.5");
        assert_eq!(
            Level::Quantity {
                value: 15.0,
                units: "USD".into()
            }
            .key(),
            "15 USD"
        );
    }
}
