use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::metrics::{MetricsFile, MetricsFormat};
use super::run::run_experiment;
use crate::error::Result;
use crate::exec::map_ordered;

/// One point of a sweep.
#[derive(Debug)]
pub struct SweepRun {
    pub overrides: Vec<(String, String)>,
    pub output: PathBuf,
    pub result: Result<MetricsFile>,
}

/// Cartesian product of `axes`, first axis varying slowest.
pub fn sweep_points(axes: &[(String, Vec<String>)]) -> Vec<Vec<(String, String)>> {
    axes.iter().fold(vec![Vec::new()], |points, (key, values)| {
        points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut next = p.clone();
                    next.push((key.clone(), v.clone()));
                    next
                })
            })
            .collect()
    })
}

fn file_name(index: usize, overrides: &[(String, String)], format: MetricsFormat) -> String {
    let mut name = format!("run-{index:03}");
    for (k, v) in overrides {
        name.push('_');
        name.push_str(k);
        name.push('=');
        name.extend(v.chars().map(|c| {
            if c.is_ascii_alphanumeric() || ".-".contains(c) {
                c
            } else {
                '-'
            }
        }));
    }
    name.push_str(match format {
        MetricsFormat::Csv => ".csv",
        MetricsFormat::Jsonl => ".jsonl",
    });
    name
}

/// Runs every point of the product on top of `base`, one metrics file each in
/// `out_dir`. Points run concurrently, each with its own state; a failing point
/// does not stop the others. Invalid overrides fail before anything runs.
pub fn sweep(
    base: &ExperimentConfig,
    axes: &[(String, Vec<String>)],
    out_dir: &Path,
) -> Result<Vec<SweepRun>> {
    let mut jobs = Vec::new();
    for (i, overrides) in sweep_points(axes).into_iter().enumerate() {
        let mut cfg = base.clone();
        for (k, v) in &overrides {
            cfg.set(k, v)?;
        }
        let output = out_dir.join(file_name(i, &overrides, cfg.metrics_format));
        cfg.output = Some(output.clone());
        jobs.push((overrides, output, cfg));
    }
    std::fs::create_dir_all(out_dir)?;
    Ok(map_ordered(
        base.hier.execution,
        jobs,
        |(overrides, output, cfg)| SweepRun {
            result: run_experiment(&cfg),
            overrides,
            output,
        },
    ))
}
