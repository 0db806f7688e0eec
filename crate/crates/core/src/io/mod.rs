//! Configuration, artifacts and command orchestration.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{parse_config, RunConfig};
pub use runner::{execute, Command, RunOptions, RunOutcome, VerifyTarget};
