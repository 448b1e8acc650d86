//! Experiment configuration, the run loop, rate studies and report files.
//!
//! The config schema is documented in `configs/README.md`.

mod config;
mod enumerate;
mod lemma;
mod output;
mod rate;
mod run;

pub use config::{
    auto_epsilon, auto_logistic_delta, auto_logistic_eta, auto_snap_delta, auto_tau, derive_seed, AdversaryName,
    AdversarySpec, AgentSpec, AutoTag, Caps, ExperimentConfig, FamilySpec, Format, ModeName, OutputSpec, Param,
    RandomTag, Seeds, VectorSource, LOGISTIC_DELTA_RANGE,
};
pub use enumerate::{count_polygons, enumerate_events, EnumerateRequest, FamilyKind};
pub use lemma::{lemma_config, reproduce_lemma, LemmaReport, LEMMA_PAYOFF_SAMPLES};
pub use output::{emit_lemma, emit_rate_study, emit_report, write_atomic};
pub use rate::{log_log_slope, rate_study, RateRow, RateStudy};
pub use run::{
    metrics_report, prepare, run_experiment, run_experiment_with, run_replications, AgentReport, Calibration,
    ExperimentReport, ProtocolStep, ResolvedParams, RunOptions, RunOutcome, RunTiming, Setup,
};
