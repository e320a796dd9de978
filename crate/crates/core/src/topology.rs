//! Cloud / edge / client state containers.

use sha2::{Digest, Sha256};

use crate::dataset::{Dataset, Fingerprint};
use crate::error::{Error, Result};
use crate::vector::{Multiplier, Weights};

/// A client's local dataset plus its running local state.
#[derive(Debug, Clone)]
pub struct ClientShard {
    pub client_id: usize,
    pub set_id: usize,
    pub data: Dataset,
    pub w_local: Weights,
    /// Only touched by HierF2ADMM.
    pub pi_local: Multiplier,
    pub sigma_kc: f64,
}

impl ClientShard {
    pub fn new(client_id: usize, set_id: usize, data: Dataset, sigma_kc: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let dim = data.dim();
        Ok(ClientShard {
            client_id,
            set_id,
            data,
            w_local: Weights::zeros(dim),
            pi_local: Multiplier::zeros(dim),
            sigma_kc,
        })
    }

    /// `D_kc`
    pub fn samples(&self) -> usize {
        self.data.len()
    }
}

/// One edge server with its client set.
#[derive(Debug, Clone)]
pub struct EdgeGroup {
    pub set_id: usize,
    pub clients: Vec<ClientShard>,
    pub w_set: Weights,
    pub pi_set: Multiplier,
    pub sigma_c: f64,
    samples: usize,
}

impl EdgeGroup {
    pub fn new(set_id: usize, clients: Vec<ClientShard>, sigma_c: f64) -> Result<Self> {
        let first = clients.first().ok_or(Error::EmptyInput)?;
        let dim = first.data.dim();
        for c in &clients {
            if c.data.dim() != dim {
                return Err(Error::dim(dim, c.data.dim()));
            }
        }
        let samples = clients.iter().map(ClientShard::samples).sum();
        Ok(EdgeGroup {
            set_id,
            clients,
            w_set: Weights::zeros(dim),
            pi_set: Multiplier::zeros(dim),
            sigma_c,
            samples,
        })
    }

    /// `D_c`
    pub fn samples(&self) -> usize {
        self.samples
    }

    /// `N_c`
    pub fn num_clients(&self) -> usize {
        self.clients.len()
    }

    pub fn dim(&self) -> usize {
        self.w_set.len()
    }
}

#[derive(Debug, Clone)]
pub struct CloudState {
    pub w_global: Weights,
    pub groups: Vec<EdgeGroup>,
    samples: usize,
}

impl CloudState {
    /// Starts from `w⁰ = 0`, with every set and client model equal to it and all
    /// multipliers zero.
    pub fn new(groups: Vec<EdgeGroup>) -> Result<Self> {
        let first = groups.first().ok_or(Error::EmptyInput)?;
        let dim = first.dim();
        for g in &groups {
            if g.dim() != dim {
                return Err(Error::dim(dim, g.dim()));
            }
        }
        let samples = groups.iter().map(EdgeGroup::samples).sum();
        Ok(CloudState {
            w_global: Weights::zeros(dim),
            groups,
            samples,
        })
    }

    /// `D`
    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn dim(&self) -> usize {
        self.w_global.len()
    }

    pub fn num_clients(&self) -> usize {
        self.groups.iter().map(EdgeGroup::num_clients).sum()
    }

    pub fn clients(&self) -> impl Iterator<Item = &ClientShard> {
        self.groups.iter().flat_map(|g| g.clients.iter())
    }

    /// All client data concatenated in (set, client) order.
    pub fn pooled_data(&self) -> Dataset {
        let mut pooled = Dataset::new(self.dim());
        for c in self.clients() {
            pooled
                .extend(&c.data)
                .expect("dimensions checked at construction");
        }
        pooled
    }

    /// Hash over the partitioned data, so two runs compare equal only if every
    /// client saw the same samples.
    pub fn fingerprint(&self) -> Fingerprint {
        let mut hasher = Sha256::new();
        for g in &self.groups {
            hasher.update((g.num_clients() as u64).to_le_bytes());
            for c in &g.clients {
                c.data.hash_into(&mut hasher);
            }
        }
        Fingerprint {
            samples: self.samples,
            dim: self.dim(),
            hash: hex::encode(hasher.finalize()),
        }
    }
}

/// Groups per-client datasets into sets: the first `clients_per_set[0]` client
/// ids form set 0, the next block set 1, and so on.
///
/// `sigma_c` and `sigma_kc` are broadcast when they hold a single value.
pub fn build_topology(
    client_data: Vec<Dataset>,
    clients_per_set: &[usize],
    sigma_c: &[f64],
    sigma_kc: &[f64],
) -> Result<CloudState> {
    let total: usize = clients_per_set.iter().sum();
    if clients_per_set.is_empty() || clients_per_set.contains(&0) {
        return Err(Error::InvalidConfig(
            "every set needs at least one client".into(),
        ));
    }
    if client_data.len() != total {
        return Err(Error::InvalidConfig(format!(
            "{} client datasets for {} clients",
            client_data.len(),
            total
        )));
    }
    let sigma_c = broadcast(sigma_c, clients_per_set.len(), "sigma_c")?;
    let sigma_kc = broadcast(sigma_kc, total, "sigma_kc")?;

    let mut data = client_data.into_iter();
    let mut groups = Vec::with_capacity(clients_per_set.len());
    let mut client_id = 0;
    for (set_id, &n) in clients_per_set.iter().enumerate() {
        let mut clients = Vec::with_capacity(n);
        for _ in 0..n {
            let d = data.next().expect("length checked");
            clients.push(ClientShard::new(client_id, set_id, d, sigma_kc[client_id])?);
            client_id += 1;
        }
        groups.push(EdgeGroup::new(set_id, clients, sigma_c[set_id])?);
    }
    CloudState::new(groups)
}

fn broadcast(values: &[f64], n: usize, name: &str) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; n]),
        len if len == n => Ok(values.to_vec()),
        len => Err(Error::InvalidConfig(format!(
            "{name} has {len} values, expected 1 or {n}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shard(n: usize) -> Dataset {
        let mut d = Dataset::new(2);
        for i in 0..n {
            d.push(&[i as f64, 1.0], (i % 2) as u8).unwrap();
        }
        d
    }

    #[test]
    fn counts_are_consistent() {
        let state =
            build_topology(vec![shard(1), shard(3), shard(2)], &[2, 1], &[0.1], &[0.2]).unwrap();
        assert_eq!(state.groups[0].samples(), 4);
        assert_eq!(state.groups[1].samples(), 2);
        assert_eq!(state.samples(), 6);
        assert_eq!(state.groups[1].clients[0].client_id, 2);
        assert_eq!(state.groups[1].clients[0].set_id, 1);
        assert_eq!(state.pooled_data().len(), 6);
        assert!(state.w_global.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_bad_layouts() {
        assert!(build_topology(vec![shard(1)], &[2], &[0.1], &[0.1]).is_err());
        assert!(build_topology(vec![shard(1)], &[1, 0], &[0.1], &[0.1]).is_err());
        assert!(
            build_topology(vec![shard(1), shard(1)], &[1, 1], &[0.1, 0.2, 0.3], &[0.1]).is_err()
        );
        assert!(matches!(
            ClientShard::new(0, 0, Dataset::new(2), 0.1),
            Err(Error::EmptyDataset)
        ));
    }
}
