//! Ground truth, scan simulation and the Monte Carlo runner.

mod output;
mod runner;
mod truth;

pub use output::{write_mean_csv, write_series_csv, write_summary_csv, SummaryRow};
pub use runner::{
    mean_series, run_experiment, run_rng, run_single, summarize, time_average, ExperimentResult,
    FilterKind, FilterSelection, RunResult,
};
pub use truth::{generate_truth, simulate_scan, Truth};
