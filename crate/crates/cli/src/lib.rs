//! Library side of the `dect` binary: configuration, artifact store and the
//! pipeline commands, exposed so integration tests can drive the pipeline
//! in-process.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod store;

pub use config::ExperimentConfig;
pub use error::CliError;
