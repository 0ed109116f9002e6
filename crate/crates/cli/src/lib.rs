//! Config-driven runner for the `mather-lp` library: parses a JSON run
//! config, executes one command, and writes JSON/CSV artifacts plus a manifest.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{parse_config, Command, Overrides, RunConfig, WORKERS_ENV};
pub use error::CliError;
pub use report::{write_report, Manifest, Report};
pub use run::{run, run_config, RunSummary};
