//! Offline densification runner around `densify-core`: the dataset format,
//! PLY and depth-map output, configuration files, the three-thread runner,
//! synthetic dataset generation, evaluation and the `densify` command line.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod formats;
pub mod run;
pub mod synth;

pub use config::{load_config, EngineConfig, Overrides};
pub use dataset::Dataset;
pub use error::{Error, Result};
pub use run::{run_offline, write_outputs, RunOptions, RunOutput};
