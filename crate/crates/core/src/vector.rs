//! Dense model vectors and the two reduction kernels every aggregation is built on.
//!
//! All reductions walk their inputs front to back, so a fixed input order gives
//! bit-identical output across runs and thread schedules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! dense_vector {
    ($name:ident) => {
        impl $name {
            pub fn zeros(dim: usize) -> Self {
                Self(vec![0.0; dim])
            }

            pub fn from_vec(values: Vec<f64>) -> Self {
                Self(values)
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn as_mut_slice(&mut self) -> &mut [f64] {
                &mut self.0
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.0
            }

            pub fn norm(&self) -> f64 {
                norm(&self.0)
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }

            /// Largest absolute coordinate difference.
            pub fn max_abs_diff(&self, other: &Self) -> f64 {
                self.0
                    .iter()
                    .zip(&other.0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(values: Vec<f64>) -> Self {
                Self(values)
            }
        }

        impl std::ops::Index<usize> for $name {
            type Output = f64;

            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }
    };
}

/// Model parameters: `w`, `w_c` and `w_kc` at every layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights(Vec<f64>);

/// Lagrange multiplier living in the same coordinate space as [`Weights`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multiplier(Vec<f64>);

dense_vector!(Weights);
dense_vector!(Multiplier);

impl Weights {
    /// `‖self − other‖₂`
    pub fn distance(&self, other: &Weights) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl Multiplier {
    /// Dual ascent step `π + σ·(x − anchor)`.
    pub fn ascend(&self, sigma: f64, x: &Weights, anchor: &Weights) -> Result<Multiplier> {
        check_len(self.len(), x.len())?;
        check_len(self.len(), anchor.len())?;
        Ok(Multiplier(
            self.0
                .iter()
                .zip(x.as_slice())
                .zip(anchor.as_slice())
                .map(|((p, a), b)| p + sigma * (a - b))
                .collect(),
        ))
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::dim(expected, found))
    }
}

/// `(Σ wᵢ·vᵢ) / (Σ wᵢ)`, summed in list order.
pub fn weighted_average(terms: &[(f64, &Weights)]) -> Result<Weights> {
    let (_, first) = terms.first().ok_or(Error::EmptyInput)?;
    let dim = first.len();
    let mut acc = vec![0.0; dim];
    let mut total = 0.0;
    for (weight, vec) in terms {
        check_len(dim, vec.len())?;
        total += weight;
        for (a, v) in acc.iter_mut().zip(vec.as_slice()) {
            *a += weight * v;
        }
    }
    if total == 0.0 {
        return Err(Error::DegenerateWeights);
    }
    acc.iter_mut().for_each(|a| *a /= total);
    Ok(Weights(acc))
}

/// `a·x + b·y`, elementwise.
pub fn linear_combine(a: f64, x: &Weights, b: f64, y: &Weights) -> Result<Weights> {
    check_len(x.len(), y.len())?;
    Ok(Weights(
        x.0.iter()
            .zip(&y.0)
            .map(|(xi, yi)| a * xi + b * yi)
            .collect(),
    ))
}

/// Masked aggregation `(1/Σσᵢ)·Σ(σᵢ·wᵢ + πᵢ)`, summed in list order.
///
/// Each term is formed into its masked message `σᵢ·wᵢ + πᵢ` before it is added,
/// so only masked values enter the reduction.
pub fn masked_average(terms: &[(f64, &Weights, &Multiplier)]) -> Result<Weights> {
    let (_, first, _) = terms.first().ok_or(Error::EmptyInput)?;
    let dim = first.len();
    let mut acc = vec![0.0; dim];
    let mut total = 0.0;
    for (sigma, w, pi) in terms {
        check_len(dim, w.len())?;
        check_len(dim, pi.len())?;
        total += sigma;
        for ((a, wi), pii) in acc.iter_mut().zip(w.as_slice()).zip(pi.as_slice()) {
            *a += sigma * wi + pii;
        }
    }
    if total == 0.0 {
        return Err(Error::DegenerateWeights);
    }
    acc.iter_mut().for_each(|a| *a /= total);
    Ok(Weights(acc))
}
