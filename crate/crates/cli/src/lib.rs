//! Experiment harness for the praguedim toolkit. A single JSON config
//! names a mode (partition, color, audit, prague, lowerbound) and a
//! parameter grid; the harness runs every (grid point, replicate) trial
//! on a thread pool, streams one record per trial to records.jsonl in a
//! fixed order, and writes per-grid-point statistics to summary.csv.
//! Identical configs produce byte-identical records up to wall-time
//! fields, whatever the thread count.

pub mod config;
pub mod record;
pub mod run;
pub mod single;
pub mod summary;

pub use config::{trial_seed, ConfigError, ExperimentConfig, GridPoint, Mode, SeedSpec};
pub use record::{strip_timing, TrialRecord, TrialStatus, METRIC_NAMES, TIMING_FIELDS};
pub use run::{execute_trial, plan_trials, run_experiment, run_experiment_with, HarnessError, RunOutput, Trial};
pub use summary::{summarize_scaling, write_scaling_csv, Normalizer, ScalingRow, SummarizeError};
