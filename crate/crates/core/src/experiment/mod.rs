//! Experiment configuration, end-to-end pipeline stages and the command
//! implementations behind the `event-tsr` binary.

pub mod commands;
mod config;
pub mod manifest;
pub mod pipeline;
pub mod presets;

pub use commands::{main_with, RunReport};
pub use config::{DataConfig, DecomposeConfig, ExperimentConfig, ReadoutConfig, SweepConfig};
pub use manifest::{Manifest, ManifestEntry, SplitFilter};
