//! Deterministic simulator for two-layer (cloud / edge / client) federated
//! learning on ℓ²-regularized logistic regression.
//!
//! Three trainers share one state layout ([`CloudState`] → [`EdgeGroup`] →
//! [`ClientShard`]): plain hierarchical gradient descent ([`Algorithm::HierFed`]),
//! ADMM between cloud and sets ([`Algorithm::HierFADMM`]), and ADMM at both
//! layers ([`Algorithm::HierF2ADMM`]).
//!
//! ```
//! use hieradmm::{build_topology, run_global_round, synthesize_dataset, partition_iid, HierConfig};
//!
//! let data = synthesize_dataset(0, 120, 4, 1.0);
//! let plan = partition_iid(&data, 6, 0).unwrap();
//! let state = build_topology(plan.shards(&data), &[3, 3], &[0.1], &[0.1]).unwrap();
//! let cfg = HierConfig { sets: 2, clients_per_set: vec![3], ..HierConfig::default() };
//! let (_state, trace) = run_global_round(state, &cfg, 0).unwrap();
//! assert!(trace.objective < std::f64::consts::LN_2);
//! ```

pub mod data;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod harness;
pub mod objective;
pub mod topology;
pub mod trainers;
pub mod vector;

pub use data::{
    load_adult_csv, partition_iid, partition_single_class, synthesize_dataset, FeatureSpec,
    PartitionPlan, PartitionRegime,
};
pub use dataset::{Dataset, Fingerprint, Sample};
pub use error::{Error, Result};
pub use exec::Execution;
pub use objective::{client_grad, client_loss, global_objective, set_objective, RegParams};
pub use topology::{build_topology, ClientShard, CloudState, EdgeGroup};
pub use trainers::{
    run_global_round, run_intra_set_round, Algorithm, HierConfig, RoundTrace, TauSchedule,
};
pub use vector::{linear_combine, weighted_average, Multiplier, Weights};
