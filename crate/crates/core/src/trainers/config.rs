use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::objective::RegParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Gradient descent at both layers with plain averaging.
    HierFed,
    /// ADMM between cloud and sets, gradient descent inside sets.
    HierFADMM,
    /// ADMM at both layers.
    HierF2ADMM,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [
        Algorithm::HierFed,
        Algorithm::HierFADMM,
        Algorithm::HierF2ADMM,
    ];

    pub fn uses_cloud_admm(self) -> bool {
        !matches!(self, Algorithm::HierFed)
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::HierFed => "hierfed",
            Algorithm::HierFADMM => "hierfadmm",
            Algorithm::HierF2ADMM => "hierf2admm",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hierfed" => Ok(Algorithm::HierFed),
            "hierfadmm" => Ok(Algorithm::HierFADMM),
            "hierf2admm" => Ok(Algorithm::HierF2ADMM),
            other => Err(Error::InvalidConfig(format!(
                "unknown algorithm `{other}` (expected hierfed|hierfadmm|hierf2admm)"
            ))),
        }
    }
}

/// Number of intra-set iterations per global round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum TauSchedule {
    Fixed {
        tau0: usize,
    },
    /// `τᵗ = tau0 + ⌊rate·t⌋`
    Growing {
        tau0: usize,
        rate: f64,
    },
}

impl TauSchedule {
    pub fn tau0(&self) -> usize {
        match *self {
            TauSchedule::Fixed { tau0 } | TauSchedule::Growing { tau0, .. } => tau0,
        }
    }
}

pub fn tau_for_round(sched: &TauSchedule, t: usize) -> usize {
    match *sched {
        TauSchedule::Fixed { tau0 } => tau0,
        TauSchedule::Growing { tau0, rate } => tau0 + (rate * t as f64).floor() as usize,
    }
}

/// Hyperparameters of one hierarchical training run. Defaults follow the
/// reference parameter table: C = 5, N_c = 30, μ = 0.01, σ_c = σ_kc = 0.1, τ = 6,
/// λ = 0.001.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierConfig {
    pub algorithm: Algorithm,
    pub sets: usize,
    /// One value per set, or a single value for all sets.
    pub clients_per_set: Vec<usize>,
    /// `L`
    pub local_steps: usize,
    pub tau: TauSchedule,
    pub mu: f64,
    /// One value per set, or a single value.
    pub sigma_c: Vec<f64>,
    /// One value per client, or a single value.
    pub sigma_kc: Vec<f64>,
    pub lambda: f64,
    /// `T`
    pub rounds: usize,
    pub seed: u64,
    /// Zero every `π_kc` at the start of each global round instead of carrying it over.
    pub reset_client_multipliers: bool,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for HierConfig {
    fn default() -> Self {
        HierConfig {
            algorithm: Algorithm::HierFADMM,
            sets: 5,
            clients_per_set: vec![30],
            local_steps: 4,
            tau: TauSchedule::Fixed { tau0: 6 },
            mu: 0.01,
            sigma_c: vec![0.1],
            sigma_kc: vec![0.1],
            lambda: 0.001,
            rounds: 100,
            seed: 0,
            reset_client_multipliers: false,
            execution: Execution::default(),
        }
    }
}

impl HierConfig {
    pub fn reg(&self) -> RegParams {
        RegParams {
            lambda: self.lambda,
        }
    }

    /// Per-set client counts with a single value broadcast over `sets`.
    pub fn set_sizes(&self) -> Vec<usize> {
        if self.clients_per_set.len() == 1 {
            vec![self.clients_per_set[0]; self.sets]
        } else {
            self.clients_per_set.clone()
        }
    }

    pub fn total_clients(&self) -> usize {
        self.set_sizes().iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.sets == 0 {
            return bad("sets must be >= 1".into());
        }
        if self.clients_per_set.len() != 1 && self.clients_per_set.len() != self.sets {
            return bad(format!(
                "clients_per_set has {} values for {} sets",
                self.clients_per_set.len(),
                self.sets
            ));
        }
        if self.clients_per_set.contains(&0) {
            return bad("clients_per_set must be >= 1".into());
        }
        if self.local_steps == 0 {
            return bad("local_steps (L) must be >= 1".into());
        }
        if self.tau.tau0() == 0 {
            return bad("intra-set iterations (tau) must be >= 1".into());
        }
        if let TauSchedule::Growing { rate, .. } = self.tau {
            if !(rate >= 0.0 && rate.is_finite()) {
                return bad(format!("tau growth rate must be >= 0, got {rate}"));
            }
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be > 0, got {}", self.mu));
        }
        RegParams::new(self.lambda)?;
        if self.algorithm.uses_cloud_admm() {
            positive("sigma_c", &self.sigma_c)?;
        }
        if self.algorithm == Algorithm::HierF2ADMM {
            positive("sigma_kc", &self.sigma_kc)?;
        }
        Ok(())
    }
}

fn positive(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        Err(Error::InvalidConfig(format!(
            "{name} must be > 0, got {values:?}"
        )))
    } else {
        Ok(())
    }
}
