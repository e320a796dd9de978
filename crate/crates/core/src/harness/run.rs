use std::time::Instant;

use log::{debug, info, warn};

use super::config::{DataSource, ExperimentConfig, PartitionSpec};
use super::metrics::{write_meta, MetricsFile, MetricsRecord, MetricsWriter, RunMeta, RunOutcome};
use crate::data::{
    load_adult_csv, partition_iid, partition_single_class, synthesize_dataset, FeatureSpec,
};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::topology::{build_topology, CloudState};
use crate::trainers::{initial_trace, run_global_round};

/// Loads or synthesizes the data pool described by `cfg`.
pub fn load_pool(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.data {
        DataSource::Synthetic {
            samples_per_client,
            features,
            separation,
        } => Ok(synthesize_dataset(
            cfg.hier.seed,
            samples_per_client * cfg.hier.total_clients(),
            *features,
            *separation,
        )),
        DataSource::AdultCsv { path } => load_adult_csv(path, &FeatureSpec::uci_adult()),
    }
}

/// Per-client datasets in client-id order.
pub fn client_datasets(cfg: &ExperimentConfig, pool: &Dataset) -> Result<Vec<Dataset>> {
    let clients = cfg.hier.total_clients();
    let plan = match cfg.partition {
        PartitionSpec::Iid => partition_iid(pool, clients, cfg.hier.seed)?,
        PartitionSpec::SingleClass { min, max } => {
            partition_single_class(pool, clients, cfg.hier.seed, (min, max))?
        }
    };
    Ok(plan.shards(pool))
}

/// Builds the initial state (`w⁰ = 0`, all multipliers 0).
pub fn build_state(cfg: &ExperimentConfig) -> Result<CloudState> {
    cfg.validate()?;
    let pool = load_pool(cfg)?;
    let shards = client_datasets(cfg, &pool)?;
    build_topology(
        shards,
        &cfg.hier.set_sizes(),
        &cfg.hier.sigma_c,
        &cfg.hier.sigma_kc,
    )
}

/// Runs `cfg.hier.rounds` global rounds and returns the `T + 1` records.
///
/// With `cfg.output` set the records are streamed to disk as they are
/// produced and the sidecar is rewritten with the final outcome. A detected
/// divergence ends the run normally with a `Diverged` outcome; every other
/// error is returned after the sidecar has been left in the `Running` state.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsFile> {
    let state = build_state(cfg)?;
    run_from_state(cfg, state)
}

/// Same as [`run_experiment`] on an already built state.
pub fn run_from_state(cfg: &ExperimentConfig, mut state: CloudState) -> Result<MetricsFile> {
    cfg.validate()?;
    let hier = &cfg.hier;
    let mut meta = RunMeta {
        config: cfg.clone(),
        fingerprint: state.fingerprint(),
        outcome: RunOutcome::Running,
    };
    info!(
        "{} on {} sets / {} clients, {}",
        hier.algorithm,
        state.groups.len(),
        state.num_clients(),
        meta.fingerprint
    );
    let mut writer = match &cfg.output {
        Some(path) => {
            let w = MetricsWriter::create(path, cfg.metrics_format)?;
            write_meta(path, &meta)?;
            Some(w)
        }
        None => None,
    };
    let mut records = Vec::with_capacity(hier.rounds + 1);
    let mut emit = |record: MetricsRecord| -> Result<()> {
        if let Some(w) = writer.as_mut() {
            w.write(&record)?;
        }
        records.push(record);
        Ok(())
    };

    let start = Instant::now();
    emit(MetricsRecord::from_trace(
        &initial_trace(&state, hier)?,
        0.0,
    ))?;
    for t in 0..hier.rounds {
        let round_start = Instant::now();
        match run_global_round(state, hier, t) {
            Ok((next, trace)) => {
                state = next;
                debug!("round {} objective {:e}", trace.t, trace.objective);
                emit(MetricsRecord::from_trace(
                    &trace,
                    round_start.elapsed().as_secs_f64() * 1e3,
                ))?;
            }
            Err(Error::DivergenceDetected {
                round,
                quantity,
                value,
            }) => {
                warn!("diverged in round {round}: {quantity} = {value:e}");
                meta.outcome = RunOutcome::Diverged {
                    round,
                    quantity: quantity.to_string(),
                    value,
                };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if !meta.outcome.diverged() {
        meta.outcome = RunOutcome::Completed {
            rounds: hier.rounds,
        };
    }
    if let Some(path) = &cfg.output {
        write_meta(path, &meta)?;
    }
    debug!(
        "run finished in {:.1} ms",
        start.elapsed().as_secs_f64() * 1e3
    );
    Ok(MetricsFile { records, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::metrics::read_metrics;
    use crate::trainers::Algorithm;

    fn small() -> ExperimentConfig {
        ExperimentConfig::from_kv_str(
            "sets = 2\nclients_per_set = 3\nrounds = 5\nsamples_per_client = 10\nfeatures = 4",
        )
        .unwrap()
    }

    #[test]
    fn records_start_at_ln2_and_count_rounds() {
        let file = run_experiment(&small()).unwrap();
        assert_eq!(file.records.len(), 6);
        assert!((file.records[0].objective - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(file.meta.outcome, RunOutcome::Completed { rounds: 5 });
    }

    #[test]
    fn zero_rounds_emit_only_initial_record() {
        let mut cfg = small();
        cfg.hier.rounds = 0;
        let file = run_experiment(&cfg).unwrap();
        assert_eq!(file.records.len(), 1);
        assert_eq!(file.records[0].t, 0);
    }

    #[test]
    fn written_file_matches_returned_records() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small();
        cfg.output = Some(dir.path().join("run.csv"));
        let file = run_experiment(&cfg).unwrap();
        let back = read_metrics(dir.path().join("run.csv")).unwrap();
        assert_eq!(back.payload_digest(), file.payload_digest());
        assert_eq!(back.meta, file.meta);
    }

    #[test]
    fn divergence_is_recorded_not_raised() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small();
        cfg.hier.algorithm = Algorithm::HierFed;
        cfg.hier.mu = 1e9;
        cfg.hier.rounds = 40;
        cfg.output = Some(dir.path().join("div.csv"));
        let file = run_experiment(&cfg).unwrap();
        assert!(file.meta.outcome.diverged());
        assert!(file.records.len() < 41);
        assert!(read_metrics(dir.path().join("div.csv"))
            .unwrap()
            .meta
            .outcome
            .diverged());
    }

    #[test]
    fn missing_adult_file_is_reported() {
        let mut cfg = small();
        cfg.set("data", "adult:/nonexistent/adult.data").unwrap();
        assert!(matches!(run_experiment(&cfg), Err(Error::FileNotFound(_))));
    }
}
