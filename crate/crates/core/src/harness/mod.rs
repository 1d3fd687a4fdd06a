//! Experiment orchestration: scenario configs, Monte-Carlo loops, CSV.

mod config;
mod csv;
mod experiment;

pub use config::{Estimator, Precoder, Profile, ScenarioConfig};
pub use csv::{emit_csv, write_csv, write_traces};
pub use experiment::{
    estimate, pattern_grid_nmse, run_grid_fidelity, run_nmse_experiment, run_rate_experiment, sound_users,
    trial_scene, RunContext, RunResult, TraceRecord, TrialMetric, NMSE_TEST, NMSE_TRAIN, RATE,
};
