//! Simulation harness: synthetic data, sign-recovery metrics, replicated
//! experiments, CSV output and the empirical privacy audit.

mod audit;
mod config;
mod data;
mod metrics;
mod runner;
mod truth;

pub use audit::{audit_pair, boundary_pair, dp_audit, dp_audit_with, AuditReport, PairReport, PatternCheck};
pub use config::{ExperimentConfig, Method, Preset, Problem, Scale, Sweep, SweepAxis};
pub use data::{
    gen_mean_data, gen_mean_shard, gen_regression_data, gen_regression_shard, gen_toeplitz_gaussian, DataSpec,
};
pub use metrics::{fdr, power};
pub use runner::{
    run_comparison, run_comparison_with, run_experiment, write_csv, ExperimentOutput, MetricRecord, ReplicationFailure,
    RunOptions, CSV_HEADER,
};
pub use truth::TruthSpec;
