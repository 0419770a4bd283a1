//! Scenario-driven front end for the wbl experiments.
//!
//! A scenario is a small JSON document; [`run::run`] turns it into a
//! [`report::Report`] with the echoed scenario, the results, and provenance.

pub mod report;
pub mod run;
pub mod scenario;

pub use report::Report;
pub use run::{run, RunError, EXIT_INTERNAL, EXIT_OK, EXIT_VALIDATION};
pub use scenario::{parse_scenario, Experiment, OutputFormat, Scenario, ScenarioError};
