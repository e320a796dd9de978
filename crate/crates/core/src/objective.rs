//! ℓ²-regularized logistic loss and the objective hierarchy built on it.
//!
//! ```text
//! f_kc(w) = (1/D_kc) Σ_j [ln(1 + e^{⟨a_j,w⟩}) − b_j⟨a_j,w⟩] + (λ/2)‖w‖²
//! F_c(w)  = Σ_k (D_kc/D_c) f_kc(w)
//! F(w)    = Σ_c (D_c/D) F_c(w)
//! ```
//!
//! The ADMM trainers descend on augmented client objectives. With
//! `r = D/(D_kc·N_c)` (cloud coupling) and `q = D_c/D_kc` (edge coupling):
//!
//! ```text
//! f̃_kc(x)  = f_kc(x) + r⟨x − w, π_c⟩ + (σ_c/2)·r‖x − w‖²
//! ĝ_kc(x)  = f̃_kc(x) + q⟨x − w_c, π_kc⟩ + (σ_kc/2)·q‖x − w_c‖²
//! ```

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::topology::{CloudState, EdgeGroup};
use crate::vector::{check_len, Multiplier, Weights};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegParams {
    pub lambda: f64,
}

impl RegParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda >= 0.0 && lambda.is_finite() {
            Ok(RegParams { lambda })
        } else {
            Err(Error::InvalidConfig(format!(
                "lambda must be >= 0, got {lambda}"
            )))
        }
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_data(w: &[f64], data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_len(data.dim(), w.len())
}

pub(crate) fn loss_slice(w: &[f64], data: &Dataset, lambda: f64) -> f64 {
    let mut total = 0.0;
    for s in data.iter() {
        let z = dot(s.features, w);
        total += softplus(z) - f64::from(s.label) * z;
    }
    total / data.len() as f64 + 0.5 * lambda * dot(w, w)
}

/// Overwrites `out` with `∇f_kc(w)`.
pub(crate) fn grad_into(w: &[f64], data: &Dataset, lambda: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for s in data.iter() {
        let residual = sigmoid(dot(s.features, w)) - f64::from(s.label);
        for (o, a) in out.iter_mut().zip(s.features) {
            *o += residual * a;
        }
    }
    let inv = 1.0 / data.len() as f64;
    for (o, wi) in out.iter_mut().zip(w) {
        *o = *o * inv + lambda * wi;
    }
}

pub fn client_loss(w: &Weights, data: &Dataset, reg: RegParams) -> Result<f64> {
    check_data(w.as_slice(), data)?;
    Ok(loss_slice(w.as_slice(), data, reg.lambda))
}

pub fn client_grad(w: &Weights, data: &Dataset, reg: RegParams) -> Result<Weights> {
    check_data(w.as_slice(), data)?;
    let mut out = vec![0.0; w.len()];
    grad_into(w.as_slice(), data, reg.lambda, &mut out);
    Ok(Weights::from_vec(out))
}

/// `F_c(w)`: data-size-weighted mean of member client losses.
pub fn set_objective(w: &Weights, group: &EdgeGroup, reg: RegParams) -> Result<f64> {
    let dc = group.samples() as f64;
    let mut total = 0.0;
    for c in &group.clients {
        total += c.samples() as f64 / dc * client_loss(w, &c.data, reg)?;
    }
    Ok(total)
}

/// `∇F_c(w)`
pub fn set_grad(w: &Weights, group: &EdgeGroup, reg: RegParams) -> Result<Weights> {
    let dc = group.samples() as f64;
    let mut acc = vec![0.0; w.len()];
    let mut buf = vec![0.0; w.len()];
    for c in &group.clients {
        check_data(w.as_slice(), &c.data)?;
        grad_into(w.as_slice(), &c.data, reg.lambda, &mut buf);
        let share = c.samples() as f64 / dc;
        for (a, g) in acc.iter_mut().zip(&buf) {
            *a += share * g;
        }
    }
    Ok(Weights::from_vec(acc))
}

/// `F(w)` evaluated at an arbitrary point over the state's topology.
pub fn objective_at(w: &Weights, state: &CloudState, reg: RegParams) -> Result<f64> {
    let d = state.samples() as f64;
    let mut total = 0.0;
    for g in &state.groups {
        total += g.samples() as f64 / d * set_objective(w, g, reg)?;
    }
    Ok(total)
}

/// `F(w)` at the current global model.
pub fn global_objective(state: &CloudState, reg: RegParams) -> Result<f64> {
    objective_at(&state.w_global, state, reg)
}

/// Cloud-level coupling seen by a client of set `c`: the broadcast global model,
/// the set multiplier `π_c`, the penalty `σ_c`, and the raw counts `D` and `N_c`.
#[derive(Debug, Clone, Copy)]
pub struct GlobalCoupling<'a> {
    pub w_global: &'a Weights,
    pub pi_c: &'a Multiplier,
    pub sigma_c: f64,
    pub total_samples: usize,
    pub set_clients: usize,
}

impl GlobalCoupling<'_> {
    /// `D / (D_kc · N_c)`
    pub fn scale(&self, client_samples: usize) -> f64 {
        self.total_samples as f64 / (client_samples as f64 * self.set_clients as f64)
    }

    fn check(&self, dim: usize) -> Result<()> {
        check_len(dim, self.w_global.len())?;
        check_len(dim, self.pi_c.len())
    }
}

/// Edge-level coupling used by HierF2ADMM clients: the current set model, the
/// client multiplier `π_kc`, the penalty `σ_kc`, and the set size `D_c`.
#[derive(Debug, Clone, Copy)]
pub struct SetCoupling<'a> {
    pub w_set: &'a Weights,
    pub pi_kc: &'a Multiplier,
    pub sigma_kc: f64,
    pub set_samples: usize,
}

impl SetCoupling<'_> {
    /// `D_c / D_kc`
    pub fn scale(&self, client_samples: usize) -> f64 {
        self.set_samples as f64 / client_samples as f64
    }

    fn check(&self, dim: usize) -> Result<()> {
        check_len(dim, self.w_set.len())?;
        check_len(dim, self.pi_kc.len())
    }
}

/// Adds `scale·π + σ·scale·(x − anchor)` to `dir`.
pub(crate) fn add_proximal(
    dir: &mut [f64],
    x: &[f64],
    anchor: &[f64],
    pi: &[f64],
    sigma: f64,
    scale: f64,
) {
    let pull = sigma * scale;
    for (((d, xi), ai), pii) in dir.iter_mut().zip(x).zip(anchor).zip(pi) {
        *d += scale * pii + pull * (xi - ai);
    }
}

fn proximal_value(x: &[f64], anchor: &[f64], pi: &[f64], sigma: f64, scale: f64) -> f64 {
    let mut lin = 0.0;
    let mut sq = 0.0;
    for ((xi, ai), pii) in x.iter().zip(anchor).zip(pi) {
        let gap = xi - ai;
        lin += gap * pii;
        sq += gap * gap;
    }
    scale * lin + 0.5 * sigma * scale * sq
}

/// `∇f̃_kc(w_kc) = ∇f_kc(w_kc) + r·π_c + σ_c·r·(w_kc − w)` with `r = D/(D_kc·N_c)`.
pub fn surrogate_grad(
    w_kc: &Weights,
    coupling: &GlobalCoupling<'_>,
    data: &Dataset,
    reg: RegParams,
) -> Result<Weights> {
    let mut g = client_grad(w_kc, data, reg)?;
    coupling.check(w_kc.len())?;
    let scale = coupling.scale(data.len());
    add_proximal(
        g.as_mut_slice(),
        w_kc.as_slice(),
        coupling.w_global.as_slice(),
        coupling.pi_c.as_slice(),
        coupling.sigma_c,
        scale,
    );
    Ok(g)
}

/// Scalar `f̃_kc(w_kc)`.
pub fn surrogate_value(
    w_kc: &Weights,
    coupling: &GlobalCoupling<'_>,
    data: &Dataset,
    reg: RegParams,
) -> Result<f64> {
    let base = client_loss(w_kc, data, reg)?;
    coupling.check(w_kc.len())?;
    Ok(base
        + proximal_value(
            w_kc.as_slice(),
            coupling.w_global.as_slice(),
            coupling.pi_c.as_slice(),
            coupling.sigma_c,
            coupling.scale(data.len()),
        ))
}

/// Step direction of a HierF2ADMM client: `∇f̃_kc + q·π_kc + σ_kc·q·(w_kc − w_c)`
/// with `q = D_c/D_kc`.
pub fn double_surrogate_grad(
    w_kc: &Weights,
    global: &GlobalCoupling<'_>,
    set: &SetCoupling<'_>,
    data: &Dataset,
    reg: RegParams,
) -> Result<Weights> {
    let mut g = surrogate_grad(w_kc, global, data, reg)?;
    set.check(w_kc.len())?;
    add_proximal(
        g.as_mut_slice(),
        w_kc.as_slice(),
        set.w_set.as_slice(),
        set.pi_kc.as_slice(),
        set.sigma_kc,
        set.scale(data.len()),
    );
    Ok(g)
}

/// Scalar whose gradient is [`double_surrogate_grad`].
pub fn double_surrogate_value(
    w_kc: &Weights,
    global: &GlobalCoupling<'_>,
    set: &SetCoupling<'_>,
    data: &Dataset,
    reg: RegParams,
) -> Result<f64> {
    let base = surrogate_value(w_kc, global, data, reg)?;
    set.check(w_kc.len())?;
    Ok(base
        + proximal_value(
            w_kc.as_slice(),
            set.w_set.as_slice(),
            set.pi_kc.as_slice(),
            set.sigma_kc,
            set.scale(data.len()),
        ))
}

/// Central differences `(f(w + h·eᵢ) − f(w − h·eᵢ)) / 2h`.
pub fn finite_diff_grad<F>(f: F, w: &Weights, h: f64) -> Result<Weights>
where
    F: Fn(&Weights) -> f64,
{
    if h <= 0.0 || !h.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "step must be positive, got {h}"
        )));
    }
    let mut probe = w.clone();
    let mut out = Vec::with_capacity(w.len());
    for i in 0..w.len() {
        let orig = probe[i];
        probe.as_mut_slice()[i] = orig + h;
        let up = f(&probe);
        probe.as_mut_slice()[i] = orig - h;
        let down = f(&probe);
        probe.as_mut_slice()[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFiniteEvaluation { coordinate: i });
        }
        out.push((up - down) / (2.0 * h));
    }
    Ok(Weights::from_vec(out))
}
