//! Experiment runner for the covspec estimators: Monte Carlo comparisons of the
//! random-matrix and plug-in Wasserstein estimators, covariance fitting against
//! shrinkage and the sample covariance, and one-shot estimation on CSV files.

pub mod config;
pub mod error;
pub mod experiments;
pub mod files;
pub mod report;
pub mod seeds;

pub use config::{Experiment, ExperimentConfig};
pub use error::{HarnessError, HarnessResult};
pub use experiments::{run, run_figure2, run_oracle_check, run_table1, run_trials};
pub use report::{ExperimentOutput, ResultRow};
