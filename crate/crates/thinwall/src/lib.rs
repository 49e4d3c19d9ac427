//! Batch driver for `thinwall-core`: run configuration, parallel sweeps
//! and CSV output.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{CommandError, Report};
pub use config::{ConfigError, RunConfig};
pub use output::{Cell, Table};
