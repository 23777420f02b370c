//! Experiment runner for the `memsteer` library: TOML scenarios, one
//! subcommand per library operation, CSV/JSON reports.

pub mod config;
pub mod report;
pub mod scenario;

pub use config::{parse_config, parse_config_str, ConfigError, ScenarioConfig};
pub use report::{emit_report, rows_from_csv, rows_to_csv, Artifact, ReportRow, Summary};
pub use scenario::{config_hash, run_scenario, Command, RunError, ScenarioOutput};
