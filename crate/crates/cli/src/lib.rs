//! Scenario runner for the `pcflow` simulator: configuration parsing, the
//! bundled scenario catalog, and run execution with CSV, JSON and snapshot
//! output.

pub mod config;
pub mod error;
pub mod run;
pub mod scenarios;

pub use config::{parse_config, Analyses, OutputSpec, Scenario};
pub use error::CliError;
pub use run::{run_scenario, RunOutcome, Summary};
pub use scenarios::{describe, list_scenarios};
