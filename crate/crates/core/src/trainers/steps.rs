//! Single update rules of the three algorithms. The round drivers in
//! [`super::round`] only sequence these.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::objective::{add_proximal, grad_into, GlobalCoupling, RegParams, SetCoupling};
use crate::topology::{ClientShard, EdgeGroup};
use crate::vector::{check_len, masked_average, weighted_average, Multiplier, Weights};

/// `steps` explicit descent steps `x ← x − μ·(∇f_kc(x) + extra(x))`.
fn descend<F>(
    data: &Dataset,
    start: &Weights,
    steps: usize,
    mu: f64,
    reg: RegParams,
    extra: F,
) -> Result<Weights>
where
    F: Fn(&[f64], &mut [f64]),
{
    if steps == 0 {
        return Err(Error::InvalidConfig("local_steps (L) must be >= 1".into()));
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_len(data.dim(), start.len())?;
    let mut x = start.clone().into_vec();
    let mut dir = vec![0.0; x.len()];
    for _ in 0..steps {
        grad_into(&x, data, reg.lambda, &mut dir);
        extra(&x, &mut dir);
        for (xi, di) in x.iter_mut().zip(&dir) {
            *xi -= mu * di;
        }
    }
    Ok(Weights::from_vec(x))
}

/// `w ← (1/D)·Σ_c D_c·w_c`
pub fn hierfed_cloud_aggregate(groups: &[EdgeGroup]) -> Result<Weights> {
    let terms: Vec<_> = groups
        .iter()
        .map(|g| (g.samples() as f64, &g.w_set))
        .collect();
    weighted_average(&terms)
}

/// `L` gradient steps on `f_kc` from `w_start`.
pub fn hierfed_local_epoch(
    shard: &ClientShard,
    w_start: &Weights,
    steps: usize,
    mu: f64,
    reg: RegParams,
) -> Result<Weights> {
    descend(&shard.data, w_start, steps, mu, reg, |_, _| {})
}

/// `w_c ← (1/D_c)·Σ_k D_kc·w_kc`, with `locals` in client order.
pub fn hierfed_edge_aggregate(group: &EdgeGroup, locals: &[Weights]) -> Result<Weights> {
    check_len(group.num_clients(), locals.len())?;
    let terms: Vec<_> = group
        .clients
        .iter()
        .zip(locals)
        .map(|(c, w)| (c.samples() as f64, w))
        .collect();
    weighted_average(&terms)
}

/// `w ← (1/Σσ_c)·Σ_c (σ_c·w_c + π_c)`: the stationary point of the global
/// augmented Lagrangian in `w`. Each set contributes only its masked message.
pub fn hierfadmm_cloud_aggregate(groups: &[EdgeGroup]) -> Result<Weights> {
    let terms: Vec<_> = groups
        .iter()
        .map(|g| (g.sigma_c, &g.w_set, &g.pi_set))
        .collect();
    masked_average(&terms)
}

/// `L` gradient steps on the surrogate `f̃_kc(·, w, π_c)`.
pub fn hierfadmm_local_epoch(
    shard: &ClientShard,
    w_start: &Weights,
    coupling: &GlobalCoupling<'_>,
    steps: usize,
    mu: f64,
    reg: RegParams,
) -> Result<Weights> {
    check_len(w_start.len(), coupling.w_global.len())?;
    check_len(w_start.len(), coupling.pi_c.len())?;
    let scale = coupling.scale(shard.samples());
    let anchor = coupling.w_global.as_slice();
    let pi = coupling.pi_c.as_slice();
    descend(&shard.data, w_start, steps, mu, reg, |x, dir| {
        add_proximal(dir, x, anchor, pi, coupling.sigma_c, scale)
    })
}

/// `π_c ← π_c + σ_c·(w_c − w)`
pub fn edge_multiplier_update(
    group: &EdgeGroup,
    w_set_new: &Weights,
    w_global_new: &Weights,
) -> Result<Multiplier> {
    group.pi_set.ascend(group.sigma_c, w_set_new, w_global_new)
}

/// `w_c ← (1/Σσ_kc)·Σ_k (σ_kc·w_kc + π_kc)`, with `locals` and `pis` in client order.
pub fn hierf2admm_edge_aggregate(
    group: &EdgeGroup,
    locals: &[Weights],
    pis: &[Multiplier],
) -> Result<Weights> {
    check_len(group.num_clients(), locals.len())?;
    check_len(group.num_clients(), pis.len())?;
    let terms: Vec<_> = group
        .clients
        .iter()
        .zip(locals)
        .zip(pis)
        .map(|((c, w), p)| (c.sigma_kc, w, p))
        .collect();
    masked_average(&terms)
}

/// `L` steps along `∇f̃_kc + q·π_kc + σ_kc·q·(x − w_c)` with `q = D_c/D_kc`,
/// starting from the current set model `set.w_set`.
pub fn hierf2admm_local_epoch(
    shard: &ClientShard,
    global: &GlobalCoupling<'_>,
    set: &SetCoupling<'_>,
    steps: usize,
    mu: f64,
    reg: RegParams,
) -> Result<Weights> {
    let dim = set.w_set.len();
    check_len(dim, global.w_global.len())?;
    check_len(dim, global.pi_c.len())?;
    check_len(dim, set.pi_kc.len())?;
    let r = global.scale(shard.samples());
    let q = set.scale(shard.samples());
    let (w_global, pi_c) = (global.w_global.as_slice(), global.pi_c.as_slice());
    let (w_set, pi_kc) = (set.w_set.as_slice(), set.pi_kc.as_slice());
    descend(&shard.data, set.w_set, steps, mu, reg, |x, dir| {
        add_proximal(dir, x, w_global, pi_c, global.sigma_c, r);
        add_proximal(dir, x, w_set, pi_kc, set.sigma_kc, q);
    })
}

/// `π_kc ← π_kc + σ_kc·(w_kc − w_c)`
pub fn client_multiplier_update(
    shard: &ClientShard,
    w_local_new: &Weights,
    w_set_new: &Weights,
) -> Result<Multiplier> {
    shard
        .pi_local
        .ascend(shard.sigma_kc, w_local_new, w_set_new)
}
