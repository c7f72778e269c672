//! Scenario-driven front end for the `smasim-core` simulator: parses
//! scenario files, runs evolutions and audits, and writes traces, VTK files
//! and JSON reports.

pub mod commands;
pub mod output;
pub mod scenario;

pub use commands::{CliError, Options, Verdict};
pub use scenario::{Scenario, ScenarioError};
