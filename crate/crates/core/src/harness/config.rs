//! Experiment description and its flat `key = value` text form.
//!
//! ```text
//! # default topology on synthetic data
//! algorithm = hierf2admm
//! sets = 5
//! clients_per_set = 30
//! tau = 6
//! data = synthetic
//! partition = iid
//! ```
//!
//! Every key is optional; unknown keys are rejected with their line number.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::MetricsFormat;
use crate::error::{Error, Result};
use crate::trainers::{HierConfig, TauSchedule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataSource {
    /// Seeded logistic-model data; the pool holds `samples_per_client` times the
    /// number of clients and is then partitioned.
    Synthetic {
        samples_per_client: usize,
        features: usize,
        separation: f64,
    },
    AdultCsv {
        path: PathBuf,
    },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic {
            samples_per_client: 40,
            features: 14,
            separation: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "kebab-case")]
pub enum PartitionSpec {
    #[default]
    Iid,
    SingleClass {
        min: usize,
        max: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub hier: HierConfig,
    pub data: DataSource,
    pub partition: PartitionSpec,
    pub output: Option<PathBuf>,
    pub metrics_format: MetricsFormat,
}

/// Keys accepted by [`ExperimentConfig::set`].
pub const CONFIG_KEYS: &[&str] = &[
    "algorithm",
    "sets",
    "clients_per_set",
    "local_steps",
    "tau",
    "tau_growing",
    "mu",
    "sigma_c",
    "sigma_kc",
    "lambda",
    "rounds",
    "seed",
    "reset_client_multipliers",
    "data",
    "samples_per_client",
    "features",
    "separation",
    "partition",
    "partition_min",
    "partition_max",
    "out",
    "format",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| Error::InvalidConfig(format!("{key} = {value:?}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

impl ExperimentConfig {
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_kv_str(text)?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        Self::from_kv_str(&std::fs::read_to_string(path)?)
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply_kv_str(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "line {}: expected `key = value`, got {raw:?}",
                    i + 1
                ))
            })?;
            self.set_at(key.trim(), value.trim(), i + 1)?;
        }
        Ok(())
    }

    /// Sets one key; used for command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.set_at(key, value, 0)
    }

    fn set_at(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let h = &mut self.hier;
        match key {
            "algorithm" => h.algorithm = value.parse()?,
            "sets" => h.sets = parse(key, value)?,
            "clients_per_set" => h.clients_per_set = parse_list(key, value)?,
            "local_steps" => h.local_steps = parse(key, value)?,
            "tau" => {
                let tau0 = parse(key, value)?;
                h.tau = match h.tau {
                    TauSchedule::Growing { rate, .. } => TauSchedule::Growing { tau0, rate },
                    TauSchedule::Fixed { .. } => TauSchedule::Fixed { tau0 },
                }
            }
            "tau_growing" => {
                h.tau = TauSchedule::Growing {
                    tau0: h.tau.tau0(),
                    rate: parse(key, value)?,
                }
            }
            "mu" => h.mu = parse(key, value)?,
            "sigma_c" => h.sigma_c = parse_list(key, value)?,
            "sigma_kc" => h.sigma_kc = parse_list(key, value)?,
            "lambda" => h.lambda = parse(key, value)?,
            "rounds" => h.rounds = parse(key, value)?,
            "seed" => h.seed = parse(key, value)?,
            "reset_client_multipliers" => h.reset_client_multipliers = parse(key, value)?,
            "data" => {
                self.data = match value.split_once(':') {
                    Some(("adult", path)) => DataSource::AdultCsv {
                        path: PathBuf::from(path),
                    },
                    None if value == "synthetic" => match self.data {
                        DataSource::Synthetic { .. } => self.data.clone(),
                        DataSource::AdultCsv { .. } => DataSource::default(),
                    },
                    _ => {
                        return Err(Error::InvalidConfig(format!(
                            "data = {value:?}: expected `synthetic` or `adult:PATH`"
                        )))
                    }
                }
            }
            "samples_per_client" | "features" | "separation" => {
                let DataSource::Synthetic {
                    samples_per_client,
                    features,
                    separation,
                } = &mut self.data
                else {
                    return Err(Error::InvalidConfig(format!(
                        "{key} only applies to synthetic data"
                    )));
                };
                match key {
                    "samples_per_client" => *samples_per_client = parse(key, value)?,
                    "features" => *features = parse(key, value)?,
                    _ => *separation = parse(key, value)?,
                }
            }
            "partition" => {
                self.partition = match value {
                    "iid" => PartitionSpec::Iid,
                    "single-class" => match self.partition {
                        p @ PartitionSpec::SingleClass { .. } => p,
                        PartitionSpec::Iid => PartitionSpec::SingleClass { min: 50, max: 200 },
                    },
                    _ => {
                        return Err(Error::InvalidConfig(format!(
                            "partition = {value:?}: expected `iid` or `single-class`"
                        )))
                    }
                }
            }
            "partition_min" | "partition_max" => {
                let PartitionSpec::SingleClass { min, max } = &mut self.partition else {
                    return Err(Error::InvalidConfig(format!(
                        "{key} requires partition = single-class"
                    )));
                };
                let v = parse(key, value)?;
                if key == "partition_min" {
                    *min = v
                } else {
                    *max = v
                }
            }
            "out" => self.output = Some(PathBuf::from(value)),
            "format" => self.metrics_format = value.parse()?,
            _ => {
                return Err(Error::UnknownConfigKey {
                    key: key.to_string(),
                    line,
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.hier.validate()?;
        if let DataSource::Synthetic {
            samples_per_client,
            features,
            separation,
        } = self.data
        {
            if samples_per_client == 0 || features == 0 || !separation.is_finite() {
                return Err(Error::InvalidConfig(
                    "synthetic data needs samples_per_client >= 1, features >= 1 and a finite separation".into(),
                ));
            }
        }
        if let PartitionSpec::SingleClass { min, max } = self.partition {
            if min == 0 || min > max {
                return Err(Error::InvalidConfig(format!(
                    "partition size range ({min}, {max}) is empty"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainers::Algorithm;

    #[test]
    fn parses_full_config() {
        let cfg = ExperimentConfig::from_kv_str(
            "# comment\nalgorithm = hierf2admm\nsets = 3\nclients_per_set = 4, 5, 6\n\
             tau = 2\ntau_growing = 0.25   # grows by one every 4 rounds\nsigma_kc = 0.2\n\
             data = adult:/tmp/adult.data\npartition = single-class\npartition_max = 90\n\
             format = jsonl\nout = run.jsonl\n",
        )
        .unwrap();
        assert_eq!(cfg.hier.algorithm, Algorithm::HierF2ADMM);
        assert_eq!(cfg.hier.clients_per_set, vec![4, 5, 6]);
        assert_eq!(
            cfg.hier.tau,
            TauSchedule::Growing {
                tau0: 2,
                rate: 0.25
            }
        );
        assert_eq!(
            cfg.data,
            DataSource::AdultCsv {
                path: "/tmp/adult.data".into()
            }
        );
        assert_eq!(
            cfg.partition,
            PartitionSpec::SingleClass { min: 50, max: 90 }
        );
        assert_eq!(cfg.metrics_format, MetricsFormat::Jsonl);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = ExperimentConfig::from_kv_str("mu = 0.1\nsigmac = 0.1\n").unwrap_err();
        assert!(matches!(err, Error::UnknownConfigKey { ref key, line: 2 } if key == "sigmac"));
    }

    #[test]
    fn typed_values_are_checked() {
        assert!(ExperimentConfig::from_kv_str("mu = fast").is_err());
        assert!(ExperimentConfig::from_kv_str("rounds = -1").is_err());
        assert!(ExperimentConfig::from_kv_str("no equals sign").is_err());
        assert!(ExperimentConfig::from_kv_str("partition_min = 3").is_err());
    }

    #[test]
    fn all_listed_keys_are_accepted() {
        let values = [
            "hierfed",
            "2",
            "3",
            "1",
            "2",
            "0.5",
            "0.1",
            "0.1",
            "0.1",
            "0.01",
            "5",
            "9",
            "true",
            "synthetic",
            "20",
            "4",
            "2.0",
            "single-class",
            "10",
            "20",
            "x.csv",
            "csv",
        ];
        let mut cfg = ExperimentConfig::default();
        for (k, v) in CONFIG_KEYS.iter().zip(values) {
            cfg.set(k, v).unwrap_or_else(|e| panic!("{k}: {e}"));
        }
    }

    #[test]
    fn json_round_trip() {
        let cfg =
            ExperimentConfig::from_kv_str("tau_growing = 0.5\npartition = single-class").unwrap();
        let back: ExperimentConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
