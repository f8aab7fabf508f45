//! Command-line front end, CSV output, config files and the parallel
//! experiment runner around `insensitive-core`.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod params;
pub mod table;

pub use error::{CliError, CliResult};
pub use experiment::{run_experiment, snapshot_replications, RunLength};
pub use table::{fmt_f64, Table};
