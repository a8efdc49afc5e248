//! Scenario runner behind the `envlab` command: configuration and
//! validation, the experiment pipelines, and report formatting.

pub mod amplitude;
pub mod config;
pub mod error;
pub mod report;
pub mod scenarios;

pub use config::{RawConfig, ScenarioConfig, ScenarioKind};
pub use error::CliError;
pub use report::{emit_report, RunResult};
pub use scenarios::run_scenario;
