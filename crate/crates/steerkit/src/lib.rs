//! Scenario-driven front end for `steerkit-core`: JSON scenarios, built-in
//! presets, parallel sweeps and CSV/JSON/SVG output.

pub mod error;
pub mod output;
pub mod presets;
pub mod runner;
pub mod scenario;
pub mod units;

pub use error::{CliError, CliResult};
pub use runner::{run, RunOptions, RunRecord};
pub use scenario::Scenario;
