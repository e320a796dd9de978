//! Experiment configuration, runs, metrics files, the centralized oracle and
//! run comparison.

mod compare;
mod config;
mod metrics;
mod oracle;
mod run;
mod sweep;

pub use compare::{compare_runs, CompareEntry, CompareReport, PairGap};
pub use config::{DataSource, ExperimentConfig, PartitionSpec, CONFIG_KEYS};
pub use metrics::{
    payload_digest, read_metrics, read_records, sidecar_path, MetricsFile, MetricsFormat,
    MetricsRecord, MetricsWriter, RunMeta, RunOutcome, CSV_HEADER,
};
pub use oracle::{cached_oracle, centralized_oracle, CachedOracle, OracleSolution};
pub use run::{build_state, client_datasets, load_pool, run_experiment, run_from_state};
pub use sweep::{sweep, sweep_points, SweepRun};
