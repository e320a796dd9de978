//! Centralized reference solver for the pooled objective.
//!
//! Gradient descent with Armijo backtracking. The first trial step of each
//! iteration is the Barzilai-Borwein step from the previous pair of iterates,
//! which keeps the iteration count practical on ill-conditioned data.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Fingerprint};
use crate::error::{Error, Result};
use crate::objective::{client_grad, client_loss, RegParams};
use crate::vector::Weights;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub w: Weights,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const FLAT: f64 = 16.0 * f64::EPSILON;

/// Minimizes the flat objective over `data` from `w = 0` until `‖∇F‖ < tol`.
///
/// Returns [`Error::NoConvergence`] carrying the best iterate when
/// `max_iters` is exhausted first.
pub fn centralized_oracle(
    data: &Dataset,
    reg: RegParams,
    max_iters: usize,
    tol: f64,
) -> Result<OracleSolution> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let f = |w: &Weights| client_loss(w, data, reg);
    let grad = |w: &Weights| client_grad(w, data, reg);

    let mut w = Weights::zeros(data.dim());
    let mut value = f(&w)?;
    let mut g = grad(&w)?;
    let mut step = 1.0;
    let mut prev: Option<(Weights, Weights)> = None;
    let mut iterations = 0;

    while g.norm() >= tol && iterations < max_iters {
        if let Some((w_old, g_old)) = &prev {
            let (mut ss, mut sy) = (0.0, 0.0);
            for i in 0..w.len() {
                let (s, y) = (w[i] - w_old[i], g[i] - g_old[i]);
                ss += s * s;
                sy += s * y;
            }
            if sy > 0.0 && ss > 0.0 {
                step = ss / sy;
            }
        }
        let g2 = g.norm().powi(2);
        let (next, next_value, g_next) = loop {
            let trial = Weights::from_vec(
                w.as_slice()
                    .iter()
                    .zip(g.as_slice())
                    .map(|(x, d)| x - step * d)
                    .collect(),
            );
            let v = f(&trial)?;
            if v <= value - ARMIJO * step * g2 {
                let g_trial = grad(&trial)?;
                break (trial, v, g_trial);
            }
            // Close to the minimizer the required decrease is below the
            // resolution of F; fall back to progress in the gradient norm.
            if v - value <= FLAT * value.abs() {
                let g_trial = grad(&trial)?;
                if g_trial.norm() < g.norm() {
                    break (trial, v, g_trial);
                }
            }
            step *= 0.5;
            if step < 1e-20 {
                // No representable decrease left along −∇F.
                let sol = OracleSolution {
                    grad_norm: g.norm(),
                    w,
                    value,
                    iterations,
                    converged: false,
                };
                return Err(Error::NoConvergence(Box::new(sol)));
            }
        };
        prev = Some((
            std::mem::replace(&mut w, next),
            std::mem::replace(&mut g, g_next),
        ));
        value = next_value;
        iterations += 1;
    }

    let sol = OracleSolution {
        grad_norm: g.norm(),
        converged: g.norm() < tol,
        w,
        value,
        iterations,
    };
    if sol.converged {
        Ok(sol)
    } else {
        Err(Error::NoConvergence(Box::new(sol)))
    }
}

/// Oracle result stored on disk next to the data it was computed for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedOracle {
    pub fingerprint: Fingerprint,
    pub lambda: f64,
    pub tol: f64,
    pub solution: OracleSolution,
}

/// Reuses `cache` when it matches the data fingerprint, `λ` and a tolerance at
/// least as tight; otherwise solves and rewrites it.
pub fn cached_oracle(
    cache: &Path,
    data: &Dataset,
    reg: RegParams,
    max_iters: usize,
    tol: f64,
) -> Result<(CachedOracle, bool)> {
    let fingerprint = data.fingerprint();
    if cache.is_file() {
        if let Ok(hit) = serde_json::from_str::<CachedOracle>(&std::fs::read_to_string(cache)?) {
            if hit.fingerprint == fingerprint && hit.lambda == reg.lambda && hit.tol <= tol {
                return Ok((hit, true));
            }
        }
    }
    let solution = centralized_oracle(data, reg, max_iters, tol)?;
    let entry = CachedOracle {
        fingerprint,
        lambda: reg.lambda,
        tol,
        solution,
    };
    if let Some(dir) = cache.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(cache, serde_json::to_string_pretty(&entry)? + "\n")?;
    Ok((entry, false))
}
