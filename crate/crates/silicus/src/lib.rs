//! Harness for running behavioral-economics experiments on simulated agents.
//!
//! The library turns an experiment description into a factorial trial plan,
//! renders one prompt per trial, obtains a completion from a pluggable agent
//! backend (a deterministic scripted agent or a remote LLM endpoint), parses
//! the completion into a structured outcome, and persists everything to an
//! append-only run store. Analysis routines reproduce the standard outputs:
//! frequency tables by cell, OLS with classical standard errors, and a
//! simplex-constrained mixture fit of agent types.
//!
//! Entry points:
//! - [`experiments::build_plan`] expands one of the four built-in experiments
//!   into a [`experiments::RunPlan`].
//! - [`store::execute_run`] runs a plan against a backend with bounded
//!   parallelism and trial-level resume.
//! - [`analysis`] consumes persisted outcomes.

pub mod agents;
pub mod analysis;
pub mod config;
pub mod design;
pub mod experiments;
pub mod money;
pub mod parsing;
pub mod store;

pub use money::Money;
