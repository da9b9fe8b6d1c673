//! CSV export and the plain-text regression table.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ols::RegressionResult;
use super::tabulate::FrequencyTable;

/// One exported trial outcome. Rows are written sorted by `trial_id`, and
/// contain no timestamps, so identical runs export byte-identical files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub trial_id: String,
    pub assignments: Vec<(String, String)>,
    pub persona_id: String,
    pub outcome_label: Option<String>,
    pub parse_mode: Option<String>,
    pub error: Option<String>,
}

/// Writes outcome rows as CSV: trial_id, one column per factor, persona,
/// outcome, parse_mode, error.
pub fn write_outcomes_csv(
    rows: &[OutcomeRow],
    factor_names: &[String],
    writer: impl Write,
) -> csv::Result<()> {
    let mut rows: Vec<&OutcomeRow> = rows.iter().collect();
    rows.sort_by(|a, b| a.trial_id.cmp(&b.trial_id));

    let mut csv_writer = csv::Writer::from_writer(writer);
    let mut header = vec!["trial_id".to_string()];
    header.extend(factor_names.iter().cloned());
    header.extend(["persona".into(), "outcome".into(), "parse_mode".into(), "error".into()]);
    csv_writer.write_record(&header)?;

    for row in rows {
        let mut record = vec![row.trial_id.clone()];
        for factor in factor_names {
            let value = row
                .assignments
                .iter()
                .find(|(name, _)| name == factor)
                .map(|(_, v)| v.clone())
                .unwrap_or_default();
            record.push(value);
        }
        record.push(row.persona_id.clone());
        record.push(row.outcome_label.clone().unwrap_or_default());
        record.push(row.parse_mode.clone().unwrap_or_default());
        record.push(row.error.clone().unwrap_or_default());
        csv_writer.write_record(&record)?;
    }
    csv_writer.flush()?;
    Ok(())
}

/// Reads back a CSV produced by [`write_outcomes_csv`].
pub fn read_outcomes_csv(
    reader: impl std::io::Read,
    factor_names: &[String],
) -> csv::Result<Vec<OutcomeRow>> {
    let mut csv_reader = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for record in csv_reader.records() {
        let record = record?;
        let mut fields = record.iter();
        let trial_id = fields.next().unwrap_or_default().to_string();
        let assignments: Vec<(String, String)> = factor_names
            .iter()
            .map(|name| (name.clone(), fields.next().unwrap_or_default().to_string()))
            .collect();
        let persona_id = fields.next().unwrap_or_default().to_string();
        let outcome = fields.next().unwrap_or_default().to_string();
        let parse_mode = fields.next().unwrap_or_default().to_string();
        let error = fields.next().unwrap_or_default().to_string();
        rows.push(OutcomeRow {
            trial_id,
            assignments,
            persona_id,
            outcome_label: (!outcome.is_empty()).then_some(outcome),
            parse_mode: (!parse_mode.is_empty()).then_some(parse_mode),
            error: (!error.is_empty()).then_some(error),
        });
    }
    Ok(rows)
}

/// Writes a frequency table as CSV: group columns, then one count and one
/// fraction column per outcome, then n.
pub fn write_frequency_csv(table: &FrequencyTable, writer: impl Write) -> csv::Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = table.group_keys.clone();
    for label in &table.outcome_labels {
        header.push(format!("count[{label}]"));
    }
    for label in &table.outcome_labels {
        header.push(format!("fraction[{label}]"));
    }
    header.push("n".into());
    csv_writer.write_record(&header)?;

    for (key, row) in &table.rows {
        let mut record: Vec<String> = key.clone();
        record.extend(row.counts.iter().map(|c| c.to_string()));
        record.extend(row.fractions.iter().map(|f| format!("{f:.6}")));
        record.push(row.n.to_string());
        csv_writer.write_record(&record)?;
    }
    csv_writer.flush()?;
    Ok(())
}

/// Writes regression results as CSV: term, coefficient, std_error per row,
/// then summary rows for n and R^2.
pub fn write_regression_csv(result: &RegressionResult, writer: impl Write) -> csv::Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    csv_writer.write_record(["term", "coefficient", "std_error"])?;
    for (i, term) in result.terms.iter().enumerate() {
        csv_writer.write_record([
            term.as_str(),
            &format!("{:.6}", result.coefficients[i]),
            &format!("{:.6}", result.std_errors[i]),
        ])?;
    }
    csv_writer.write_record(["n", &result.n.to_string(), ""])?;
    csv_writer.write_record(["r_squared", &format!("{:.6}", result.r_squared), ""])?;
    csv_writer.flush()?;
    Ok(())
}

/// Renders one or more regressions side by side in the usual journal layout:
/// coefficient rows with standard errors in parentheses beneath, then
/// observation counts and R^2. Three decimal places throughout.
pub fn render_regression_table(columns: &[(&str, &RegressionResult)]) -> String {
    let mut terms: Vec<String> = Vec::new();
    for (_, result) in columns {
        for term in &result.terms {
            if !terms.contains(term) {
                terms.push(term.clone());
            }
        }
    }
    // Intercept conventionally prints last.
    if let Some(pos) = terms.iter().position(|t| t == "const") {
        let constant = terms.remove(pos);
        terms.push(constant);
    }

    let label_width = terms
        .iter()
        .map(|t| display_term(t).len())
        .max()
        .unwrap_or(8)
        .max("Observations".len());
    let column_width = columns
        .iter()
        .map(|(name, _)| name.len())
        .max()
        .unwrap_or(10)
        .max(10);

    let mut out = String::new();
    let rule = "-".repeat(label_width + columns.len() * (column_width + 2));
    out.push_str(&format!("{:label_width$}", ""));
    for (name, _) in columns {
        out.push_str(&format!("  {name:>column_width$}"));
    }
    out.push('\n');
    out.push_str(&rule);
    out.push('\n');

    for term in &terms {
        out.push_str(&format!("{:<label_width$}", display_term(term)));
        for (_, result) in columns {
            match result.coefficient(term) {
                Some(coefficient) => {
                    out.push_str(&format!("  {:>column_width$}", format!("{coefficient:.3}")))
                }
                None => out.push_str(&format!("  {:>column_width$}", "")),
            }
        }
        out.push('\n');
        out.push_str(&format!("{:<label_width$}", ""));
        for (_, result) in columns {
            match result.std_error(term) {
                Some(se) => {
                    out.push_str(&format!("  {:>column_width$}", format!("({se:.3})")))
                }
                None => out.push_str(&format!("  {:>column_width$}", "")),
            }
        }
        out.push('\n');
    }

    out.push_str(&rule);
    out.push('\n');
    out.push_str(&format!("{:<label_width$}", "Observations"));
    for (_, result) in columns {
        out.push_str(&format!("  {:>column_width$}", result.n));
    }
    out.push('\n');
    out.push_str(&format!("{:<label_width$}", "R-squared"));
    for (_, result) in columns {
        out.push_str(&format!("  {:>column_width$}", format!("{:.3}", result.r_squared)));
    }
    out.push('\n');
    out
}

fn display_term(term: &str) -> &str {
    if term == "const" {
        "Constant"
    } else {
        term
    }
}
