//! Configuration, subcommand dispatch and artifact emission for the `tic` binary.

pub mod config;
mod output;
mod run;

pub use config::{parse_override, parse_text, Assignment, Command, ConfigError, Preset, RunConfig, SolverMode};
pub use output::{write_manifest, write_summary, Check, Outputs};
pub use run::{exp_spec, growth_functions, norm_row, power_spec, run, RunError, RunReport};
