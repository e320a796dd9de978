use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionRegime {
    Iid,
    SingleClass,
}

/// Sample indices held by each client, in client-id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub assignments: Vec<Vec<usize>>,
    pub regime: PartitionRegime,
    pub seed: u64,
}

impl PartitionPlan {
    pub fn sizes(&self) -> Vec<usize> {
        self.assignments.iter().map(Vec::len).collect()
    }

    /// Materializes one dataset per client.
    pub fn shards(&self, data: &Dataset) -> Vec<Dataset> {
        self.assignments
            .iter()
            .map(|idx| data.select(idx))
            .collect()
    }
}

/// Seeded shuffle followed by a contiguous split; the first `n % k` clients get
/// one extra sample.
pub fn partition_iid(data: &Dataset, num_clients: usize, seed: u64) -> Result<PartitionPlan> {
    if num_clients == 0 || data.len() < num_clients {
        return Err(Error::TooFewSamples {
            samples: data.len(),
            clients: num_clients,
        });
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let (base, extra) = (data.len() / num_clients, data.len() % num_clients);
    let mut assignments = Vec::with_capacity(num_clients);
    let mut start = 0;
    for k in 0..num_clients {
        let size = base + usize::from(k < extra);
        assignments.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(PartitionPlan {
        assignments,
        regime: PartitionRegime::Iid,
        seed,
    })
}

/// Label-pure shards: client `k` holds only label `k % 2`, with a size drawn
/// uniformly from the inclusive `size_range`, sampled without replacement.
pub fn partition_single_class(
    data: &Dataset,
    num_clients: usize,
    seed: u64,
    size_range: (usize, usize),
) -> Result<PartitionPlan> {
    let (lo, hi) = size_range;
    if lo == 0 || lo > hi {
        return Err(Error::InvalidConfig(format!(
            "size range ({lo}, {hi}) must satisfy 1 <= min <= max"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pools: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &b) in data.labels().iter().enumerate() {
        pools[b as usize].push(i);
    }
    for pool in &mut pools {
        pool.shuffle(&mut rng);
    }

    let mut taken = [0usize; 2];
    let mut assignments = Vec::with_capacity(num_clients);
    for k in 0..num_clients {
        let label = k % 2;
        let size = rng.random_range(lo..=hi);
        let available = pools[label].len() - taken[label];
        if available < size {
            return Err(Error::InsufficientClassSamples {
                label: label as u8,
                client: k,
                needed: size,
                available,
            });
        }
        assignments.push(pools[label][taken[label]..taken[label] + size].to_vec());
        taken[label] += size;
    }
    Ok(PartitionPlan {
        assignments,
        regime: PartitionRegime::SingleClass,
        seed,
    })
}
