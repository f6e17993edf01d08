//! Library side of the `jscc` command-line tool.

pub mod config;
pub mod experiments;

pub use config::ExperimentConfig;
pub use experiments::Preset;
