//! Configured experiments: closed form, Volterra and simulation runs with
//! CSV outputs.

pub mod config;
pub mod run;

pub use config::{BoundaryConfig, ExperimentConfig, Method, Overrides, ProcessConfig};
pub use run::{run, run_file, MetricRow, RunReport, StatisticsRow};

use crate::error::{Error, Result};

/// Names of the bundled presets.
pub const PRESETS: [&str; 3] = ["figure-1", "figure-2", "figure-3"];

/// JSON text of a bundled preset.
pub fn preset_json(name: &str) -> Result<&'static str> {
    match name {
        "figure-1" => Ok(include_str!("../../presets/figure-1.json")),
        "figure-2" => Ok(include_str!("../../presets/figure-2.json")),
        "figure-3" => Ok(include_str!("../../presets/figure-3.json")),
        _ => Err(Error::Config(format!(
            "unknown preset '{name}' (expected one of {})",
            PRESETS.join(", ")
        ))),
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::from_json(preset_json(name)?)
}
