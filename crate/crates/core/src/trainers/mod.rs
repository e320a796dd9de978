//! HierFed, HierFADMM and HierF2ADMM as step operations plus round drivers.

mod config;
mod round;
mod steps;

pub use config::{tau_for_round, Algorithm, HierConfig, TauSchedule};
pub use round::{
    initial_trace, run_global_round, run_intra_set_round, RoundTrace, DIVERGENCE_LIMIT,
};
pub use steps::*;
