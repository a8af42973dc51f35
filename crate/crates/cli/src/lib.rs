//! Configuration, benchmark presets and run orchestration for the `mlplast`
//! command-line tool.

pub mod config;
pub mod run;

pub use config::{parse_config, Case, ConfigError, Overrides, RunConfig};
pub use run::{run_case, solve, sweep, Outcome, RunError, Summary, SweepSpec};
