//! Dataset sources and client partitioning.

mod adult;
mod partition;
mod synth;

pub use adult::{load_adult_csv, CategoricalColumn, FeatureSpec};
pub use partition::{partition_iid, partition_single_class, PartitionPlan, PartitionRegime};
pub use synth::synthesize_dataset;
