use std::fmt;

use serde::Serialize;

use super::metrics::MetricsFile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareEntry {
    pub label: String,
    /// `None` when the run diverged before `at_round`.
    pub objective: Option<f64>,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairGap {
    pub a: usize,
    pub b: usize,
    /// `objective(b) − objective(a)`
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub at_round: usize,
    pub entries: Vec<CompareEntry>,
    /// Entry indices from lowest to highest objective; runs without a value last.
    pub ordering: Vec<usize>,
    pub gaps: Vec<PairGap>,
}

impl CompareReport {
    /// Whether the ordering lists the given labels in this order, lowest first.
    pub fn ordered_as(&self, labels: &[&str]) -> bool {
        let ranked: Vec<&str> = self
            .ordering
            .iter()
            .filter(|&&i| self.entries[i].objective.is_some())
            .map(|&i| self.entries[i].label.as_str())
            .filter(|l| labels.contains(l))
            .collect();
        ranked == labels
    }
}

/// Objective of each run at `at_round`, sorted, with all pairwise gaps.
///
/// All runs must share one data fingerprint, and every run that did not
/// diverge must have reached `at_round`.
pub fn compare_runs(runs: &[(String, MetricsFile)], at_round: usize) -> Result<CompareReport> {
    let Some((_, first)) = runs.first() else {
        return Err(Error::EmptyInput);
    };
    for (label, run) in runs {
        if run.meta.fingerprint != first.meta.fingerprint {
            return Err(Error::IncomparableRuns(format!(
                "`{label}` was run on different data ({} vs {})",
                run.meta.fingerprint, first.meta.fingerprint
            )));
        }
    }
    let mut entries = Vec::with_capacity(runs.len());
    for (label, run) in runs {
        let diverged = run.meta.outcome.diverged();
        let objective = run.objective_at(at_round);
        if objective.is_none() && !diverged {
            return Err(Error::IncomparableRuns(format!(
                "`{label}` has no record for round {at_round}"
            )));
        }
        entries.push(CompareEntry {
            label: label.clone(),
            objective,
            diverged,
        });
    }
    let mut ordering: Vec<usize> = (0..entries.len()).collect();
    ordering.sort_by(
        |&i, &j| match (entries[i].objective, entries[j].objective) {
            (Some(a), Some(b)) => a.total_cmp(&b),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        },
    );
    let mut gaps = Vec::new();
    for a in 0..entries.len() {
        for b in a + 1..entries.len() {
            let gap = entries[a]
                .objective
                .zip(entries[b].objective)
                .map(|(x, y)| y - x);
            gaps.push(PairGap { a, b, gap });
        }
    }
    Ok(CompareReport {
        at_round,
        entries,
        ordering,
        gaps,
    })
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "objective at round {}:", self.at_round)?;
        for (rank, &i) in self.ordering.iter().enumerate() {
            let e = &self.entries[i];
            let value = e.objective.map_or("-".to_string(), |v| format!("{v:.12e}"));
            let flag = if e.diverged { "  (diverged)" } else { "" };
            writeln!(f, "  {}. {:<24} {value}{flag}", rank + 1, e.label)?;
        }
        for g in &self.gaps {
            if let Some(gap) = g.gap {
                writeln!(
                    f,
                    "  {} - {} = {gap:+.3e}",
                    self.entries[g.b].label, self.entries[g.a].label
                )?;
            }
        }
        Ok(())
    }
}
