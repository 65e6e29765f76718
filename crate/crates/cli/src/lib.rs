//! Config-driven runner behind the `lieflow` binary.

pub mod config;
pub mod run;

pub use config::{Mode, RunConfig};
pub use run::{blob_hash, run_config, run_file, InputError, Outcome, Overrides, Status, OUTPUT_ROOT_VAR};
