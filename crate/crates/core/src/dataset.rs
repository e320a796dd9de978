use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One labelled example. `features` already carries the trailing bias coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: u8,
}

/// Row-major sample matrix with binary labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<u8>,
}

/// Borrowed view of one row.
#[derive(Debug, Clone, Copy)]
pub struct SampleRef<'a> {
    pub features: &'a [f64],
    pub label: u8,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        Dataset {
            dim,
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn from_samples(samples: Vec<Sample>) -> Result<Self> {
        let dim = samples.first().map(|s| s.features.len()).unwrap_or(0);
        let mut data = Dataset::new(dim);
        for s in samples {
            data.push(&s.features, s.label)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, features: &[f64], label: u8) -> Result<()> {
        if features.len() != self.dim {
            return Err(Error::dim(self.dim, features.len()));
        }
        if label > 1 {
            return Err(Error::InvalidConfig(format!("label {label} is not binary")));
        }
        if features.iter().any(|f| !f.is_finite()) {
            return Err(Error::InvalidConfig("non-finite feature value".into()));
        }
        self.features.extend_from_slice(features);
        self.labels.push(label);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> SampleRef<'_> {
        SampleRef {
            features: &self.features[i * self.dim..(i + 1) * self.dim],
            label: self.labels[i],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = SampleRef<'_>> + '_ {
        self.features
            .chunks_exact(self.dim.max(1))
            .zip(&self.labels)
            .map(|(features, &label)| SampleRef { features, label })
    }

    pub fn to_samples(&self) -> Vec<Sample> {
        self.iter()
            .map(|s| Sample {
                features: s.features.to_vec(),
                label: s.label,
            })
            .collect()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut out = Dataset::new(self.dim);
        out.features.reserve(indices.len() * self.dim);
        for &i in indices {
            let row = self.row(i);
            out.features.extend_from_slice(row.features);
            out.labels.push(row.label);
        }
        out
    }

    /// Appends all rows of `other`.
    pub fn extend(&mut self, other: &Dataset) -> Result<()> {
        if other.is_empty() {
            return Ok(());
        }
        if self.is_empty() && self.dim == 0 {
            self.dim = other.dim;
        }
        if other.dim != self.dim {
            return Err(Error::dim(self.dim, other.dim));
        }
        self.features.extend_from_slice(&other.features);
        self.labels.extend_from_slice(&other.labels);
        Ok(())
    }

    pub(crate) fn hash_into(&self, hasher: &mut Sha256) {
        hasher.update((self.dim as u64).to_le_bytes());
        hasher.update((self.len() as u64).to_le_bytes());
        for f in &self.features {
            hasher.update(f.to_le_bytes());
        }
        hasher.update(&self.labels);
    }

    pub fn fingerprint(&self) -> Fingerprint {
        let mut hasher = Sha256::new();
        self.hash_into(&mut hasher);
        Fingerprint {
            samples: self.len(),
            dim: self.dim,
            hash: hex::encode(hasher.finalize()),
        }
    }
}

/// Sample count, dimension and content hash of the data an experiment sees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub samples: usize,
    pub dim: usize,
    pub hash: String,
}

impl std::fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "samples={} d={} sha256={}",
            self.samples, self.dim, self.hash
        )
    }
}
