//! Factorial designs, prompt templates, trial plans, and run manifests.
//!
//! A design is a [`FactorGrid`]; expanding it yields one [`Cell`] per
//! treatment combination in row-major order. Crossing cells with personas
//! and replications produces a deterministic list of [`TrialSpec`]s, each
//! carrying its own derived seed so trials can execute in any parallel
//! order without changing outcomes.

mod grid;
mod manifest;
mod plan;
mod template;

pub use grid::{expand_design, Cell, DesignError, Factor, FactorGrid, Level};
pub use manifest::{ModelParams, RunManifest};
pub use plan::{derive_seed, plan_run, TrialSpec};
pub use template::{render_prompt, render_prompt_lenient, Persona, PromptTemplate};
