//! Scenario files, orchestration and report output for the `cargohitch` binary.

pub mod commands;
pub mod config;

pub use commands::{compare, gen_demand, load_inputs, simulate, validate, Inputs, RunOptions};
pub use config::{ConfigError, DemandSource, ScenarioConfig};
