//! Scenario files, run artifacts and the `rf` commands.

pub mod commands;
pub mod plot;
pub mod scenario;

pub use commands::{cmd_certify, cmd_check, cmd_plot, cmd_simulate, CertifyOpts, Outcome, SimulateOpts};
pub use scenario::{Scenario, ScenarioError, ScenarioSpec};
