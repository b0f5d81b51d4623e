//! Config loading and command implementations behind the `graphevolve` binary.

pub mod commands;
pub mod config;

pub use commands::{cmd_check, cmd_nonlocal_check, cmd_simulate, cmd_transform, load, RunContext, Outcome};
pub use config::{parse_config, ConfigError, ConfigErrors, RunConfig};
