//! Batch front-end for the monotone SPDE solver: configuration, orchestration
//! of studies and artifact output.

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigError, RunConfig};
pub use run::{combine, resolve_output, run, Command, RunError, OUTPUT_ROOT_VAR};
