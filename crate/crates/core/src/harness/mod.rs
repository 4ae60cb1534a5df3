//! Seeded Monte Carlo experiments over the optimizers and validators.
//!
//! An experiment is described by an [`ExperimentConfig`] (TOML on disk).
//! Trial `i` draws from `RngStream::derive(master_seed, i)` and results are
//! gathered in trial order, so outputs do not depend on the thread count.
//! Records are written as JSON lines by a single writer.

mod config;
mod experiment;
mod lemma;
mod records;
mod stats;
mod sweep;
mod table;

pub use config::{
    CliOverrides, ExperimentConfig, Kind, LemmaConfig, OverrideConfig, ProblemConfig, StartMode, TargetConfig, SEED_ENV,
};
pub use experiment::{
    build_problem, execute, persist, plan, run_experiment, run_experiment_with, trial_seed, ExperimentOutput, Problem,
    RunPlan, INSTANCE_STREAM,
};
pub use lemma::{run_lemma, validate_lemma, LEMMA_NAMES};
pub use records::{
    csv_path_for, median, quantile_sorted, write_summary_csv, CheckpointSummary, JsonlSink, LemmaRecord, Quantiles,
    TheoryRecord, TrialRecord, TrialSummary, SCHEMA_VERSION,
};
pub use stats::{linear_fit, loglog_slope, LinearFit};
pub use sweep::{sweep, SweepAxis, SweepResult};
pub use table::{complexity_table, ComplexityRow};
