//! Configuration files, CSV and snapshot persistence, the parallel γ sweep,
//! the invariant suites and the command-line front end for `doifbp-core`.

pub mod app;
pub mod checks;
pub mod config;
pub mod error;
pub mod output;
pub mod snapshot;
pub mod sweep;

pub use config::{parse_config, ConfigError, RunConfig};
pub use error::LabError;
