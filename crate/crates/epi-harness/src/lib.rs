//! Configuration, verification campaigns and persistence for `metapop` experiments.
//!
//! A TOML file describes the model, laws, initial condition and run; [`parse_config`]
//! validates it into an [`ExperimentSpec`] and [`execute`] runs the selected mode,
//! writing CSV artifacts and a JSON report to the output directory.

pub mod campaign;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod stats;

pub use campaign::{execute, Outcome};
pub use config::{parse_config, parse_config_str, parse_config_str_with, parse_config_with, ExperimentSpec, Mode, Overrides};
pub use error::{HarnessError, Result};
