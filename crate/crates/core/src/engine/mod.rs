//! Discrete-event day simulation, within-day learning and replications.

mod day;
mod log;
mod run;

pub use day::{run_day, DayRun};
pub use log::{decisions_to_csv, events_to_csv, outcomes_to_csv, DecisionRecord, EventKind, EventRecord};
pub use run::{run_scenario, run_with_learning, ReplicationResult, RunConfig, Scenario, ScenarioResult};
