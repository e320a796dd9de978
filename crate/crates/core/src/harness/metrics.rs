//! Per-round metrics files.
//!
//! A run writes `<out>` (CSV or JSON lines, one record per round, flushed as it
//! goes) and `<out>.meta.json` with the experiment config, the data
//! fingerprint and the outcome. The CSV header is fixed:
//! `t,objective,consensus_residual,stationarity_residual,tau_used,wall_ms`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::dataset::Fingerprint;
use crate::error::{Error, Result};
use crate::trainers::RoundTrace;

pub const CSV_HEADER: &str =
    "t,objective,consensus_residual,stationarity_residual,tau_used,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricsFormat {
    #[default]
    Csv,
    Jsonl,
}

impl FromStr for MetricsFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(MetricsFormat::Csv),
            "jsonl" => Ok(MetricsFormat::Jsonl),
            other => Err(Error::InvalidConfig(format!(
                "unknown metrics format `{other}` (csv|jsonl)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub t: usize,
    pub objective: f64,
    pub consensus_residual: f64,
    pub stationarity_residual: f64,
    pub tau_used: usize,
    pub wall_ms: f64,
}

impl MetricsRecord {
    pub fn from_trace(trace: &RoundTrace, wall_ms: f64) -> Self {
        MetricsRecord {
            t: trace.t,
            objective: trace.objective,
            consensus_residual: trace.consensus_residual,
            stationarity_residual: trace.stationarity_residual,
            tau_used: trace.tau_used,
            wall_ms,
        }
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:.3}",
            self.t,
            self.objective,
            self.consensus_residual,
            self.stationarity_residual,
            self.tau_used,
            self.wall_ms
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum RunOutcome {
    Running,
    Completed {
        rounds: usize,
    },
    Diverged {
        round: usize,
        quantity: String,
        value: f64,
    },
}

impl RunOutcome {
    pub fn diverged(&self) -> bool {
        matches!(self, RunOutcome::Diverged { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub config: ExperimentConfig,
    pub fingerprint: Fingerprint,
    pub outcome: RunOutcome,
}

/// Records of one run plus its sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsFile {
    pub records: Vec<MetricsRecord>,
    pub meta: RunMeta,
}

impl MetricsFile {
    /// Hex SHA-256 over every column except `wall_ms`.
    pub fn payload_digest(&self) -> String {
        payload_digest(&self.records)
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.records.last().map(|r| r.objective)
    }

    pub fn objective_at(&self, t: usize) -> Option<f64> {
        self.records.iter().find(|r| r.t == t).map(|r| r.objective)
    }
}

pub fn payload_digest(records: &[MetricsRecord]) -> String {
    let mut h = Sha256::new();
    for r in records {
        h.update((r.t as u64).to_le_bytes());
        h.update(r.objective.to_bits().to_le_bytes());
        h.update(r.consensus_residual.to_bits().to_le_bytes());
        h.update(r.stationarity_residual.to_bits().to_le_bytes());
        h.update((r.tau_used as u64).to_le_bytes());
    }
    hex::encode(h.finalize())
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn write_meta(out: &Path, meta: &RunMeta) -> Result<()> {
    let mut text = serde_json::to_string_pretty(meta)?;
    text.push('\n');
    std::fs::write(sidecar_path(out), text)?;
    Ok(())
}

/// Single-owner incremental writer; every record is flushed before returning.
pub struct MetricsWriter {
    out: BufWriter<File>,
    format: MetricsFormat,
}

impl MetricsWriter {
    pub fn create(path: &Path, format: MetricsFormat) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut out = BufWriter::new(File::create(path)?);
        if format == MetricsFormat::Csv {
            writeln!(out, "{CSV_HEADER}")?;
            out.flush()?;
        }
        Ok(MetricsWriter { out, format })
    }

    pub fn write(&mut self, record: &MetricsRecord) -> Result<()> {
        match self.format {
            MetricsFormat::Csv => writeln!(self.out, "{}", record.csv_line())?,
            MetricsFormat::Jsonl => writeln!(self.out, "{}", serde_json::to_string(record)?)?,
        }
        self.out.flush()?;
        Ok(())
    }
}

/// Reads records in either format; the format is detected from the first line.
pub fn read_records(path: &Path) -> Result<Vec<MetricsRecord>> {
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let malformed = |reason: String| Error::MalformedMetrics {
        path: path.to_path_buf(),
        reason,
    };
    let mut lines = BufReader::new(File::open(path)?).lines();
    let first = match lines.next() {
        Some(line) => line?,
        None => return Err(malformed("file is empty".into())),
    };
    let mut records = Vec::new();
    if first.trim_start().starts_with('{') {
        for (i, line) in std::iter::once(Ok(first)).chain(lines).enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(
                serde_json::from_str(&line)
                    .map_err(|e| malformed(format!("line {}: {e}", i + 1)))?,
            );
        }
    } else {
        if first != CSV_HEADER {
            return Err(malformed(format!("unexpected header {first:?}")));
        }
        let mut reader = csv::Reader::from_path(path)?;
        for (i, row) in reader.deserialize().enumerate() {
            records.push(row.map_err(|e| malformed(format!("record {}: {e}", i + 1)))?);
        }
    }
    check_sequence(&records).map_err(malformed)?;
    Ok(records)
}

fn check_sequence(records: &[MetricsRecord]) -> std::result::Result<(), String> {
    match records.first() {
        Some(r) if r.t != 0 => return Err(format!("first record has t = {}", r.t)),
        None => return Err("no records".into()),
        _ => {}
    }
    if let Some(w) = records.windows(2).find(|w| w[1].t != w[0].t + 1) {
        return Err(format!("t jumps from {} to {}", w[0].t, w[1].t));
    }
    Ok(())
}

/// Reads a metrics file together with its sidecar.
pub fn read_metrics(path: impl AsRef<Path>) -> Result<MetricsFile> {
    let path = path.as_ref();
    let records = read_records(path)?;
    let meta_path = sidecar_path(path);
    if !meta_path.is_file() {
        return Err(Error::MalformedMetrics {
            path: path.to_path_buf(),
            reason: format!("missing sidecar {}", meta_path.display()),
        });
    }
    let meta = serde_json::from_str(&std::fs::read_to_string(meta_path)?)?;
    Ok(MetricsFile { records, meta })
}
