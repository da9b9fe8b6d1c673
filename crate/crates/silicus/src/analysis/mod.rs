//! Quantitative outputs: frequency tables, OLS, and the type-mixture fit.

mod export;
mod mixture;
mod ols;
mod tabulate;

pub use export::{
    read_outcomes_csv, render_regression_table, write_frequency_csv, write_outcomes_csv,
    write_regression_csv, OutcomeRow,
};
pub use mixture::{fit_type_mixture, project_to_simplex, MixtureInput, MixtureWeights, TypeVector};
pub use ols::{ols, RegressionResult};
pub use tabulate::{tabulate, FrequencyRow, FrequencyTable, OutcomeRecord};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("trials mix different outcome kinds")]
    MixedOutcomeKinds,
    #[error("regressor '{0}' has a different length than y")]
    LengthMismatch(String),
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("not enough observations: n={n} <= k={k}")]
    DegenerateDoF { n: usize, k: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{0}")]
    InvalidInput(String),
}
