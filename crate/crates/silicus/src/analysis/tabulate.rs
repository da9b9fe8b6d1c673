//! Frequency tabulation of parsed outcomes by treatment cell.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::parsing::OutcomeKind;

use super::AnalysisError;

/// One successfully parsed trial, reduced to what tabulation needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    /// Factor name -> level key, in grid order.
    pub assignments: Vec<(String, String)>,
    pub persona_id: String,
    pub outcome_kind: OutcomeKind,
    pub outcome_label: String,
}

impl OutcomeRecord {
    fn group_value(&self, key: &str) -> String {
        if key == "persona" {
            return self.persona_id.clone();
        }
        self.assignments
            .iter()
            .find(|(name, _)| name == key)
            .map(|(_, value)| value.clone())
            .unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    /// Count per outcome label, aligned with the table's `outcome_labels`.
    pub counts: Vec<usize>,
    pub fractions: Vec<f64>,
    pub n: usize,
}

/// Counts and fractions of each outcome, per group key tuple. Rows are kept
/// in sorted key order, so output is deterministic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub group_keys: Vec<String>,
    pub outcome_labels: Vec<String>,
    pub rows: BTreeMap<Vec<String>, FrequencyRow>,
}

impl FrequencyTable {
    pub fn fraction(&self, group: &[&str], outcome_label: &str) -> Option<f64> {
        let key: Vec<String> = group.iter().map(|s| s.to_string()).collect();
        let row = self.rows.get(&key)?;
        let index = self.outcome_labels.iter().position(|l| l == outcome_label)?;
        Some(row.fractions[index])
    }

    pub fn count(&self, group: &[&str], outcome_label: &str) -> Option<usize> {
        let key: Vec<String> = group.iter().map(|s| s.to_string()).collect();
        let row = self.rows.get(&key)?;
        let index = self.outcome_labels.iter().position(|l| l == outcome_label)?;
        Some(row.counts[index])
    }
}

/// Tabulates outcomes grouped by the given keys. Keys are factor names; the
/// pseudo-key "persona" groups by persona id. All records must share one
/// outcome kind.
pub fn tabulate(
    records: &[OutcomeRecord],
    group_by: &[&str],
    outcome_labels: &[String],
) -> Result<FrequencyTable, AnalysisError> {
    if let Some(first) = records.first() {
        if records.iter().any(|r| r.outcome_kind != first.outcome_kind) {
            return Err(AnalysisError::MixedOutcomeKinds);
        }
    }
    let label_index: BTreeMap<&str, usize> = outcome_labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();

    let mut rows: BTreeMap<Vec<String>, Vec<usize>> = BTreeMap::new();
    for record in records {
        let key: Vec<String> = group_by.iter().map(|k| record.group_value(k)).collect();
        let counts = rows.entry(key).or_insert_with(|| vec![0; outcome_labels.len()]);
        let index = label_index.get(record.outcome_label.as_str()).ok_or_else(|| {
            AnalysisError::InvalidInput(format!("unknown outcome label '{}'", record.outcome_label))
        })?;
        counts[*index] += 1;
    }

    let rows = rows
        .into_iter()
        .map(|(key, counts)| {
            let n: usize = counts.iter().sum();
            let fractions = counts.iter().map(|c| *c as f64 / n as f64).collect();
            (key, FrequencyRow { counts, fractions, n })
        })
        .collect();

    Ok(FrequencyTable {
        group_keys: group_by.iter().map(|s| s.to_string()).collect(),
        outcome_labels: outcome_labels.to_vec(),
        rows,
    })
}
