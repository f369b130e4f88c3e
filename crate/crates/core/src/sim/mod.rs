//! Monte Carlo BER harness: configuration, deterministic parallel sweeps and
//! CSV persistence.

mod config;
mod results;
mod stats;
mod sweep;

pub use config::{Parallelism, SimConfig, PARALLELISM_ENV};
pub use results::{read_results, write_results, BerRecord, CSV_HEADER};
pub use stats::clopper_pearson;
pub use sweep::{run_sweep, run_sweep_with, run_trial, Progress, TrialOutcome};
