//! File formats, configuration and commands for the `gridiron` binary.

pub mod commands;
pub mod config;
pub mod io;
pub mod parallel;

pub use commands::ModelFile;
pub use config::{load_run_config, RunConfig};
