//! Round orchestration.
//!
//! One global round `t` runs, in order:
//! 1. broadcast `wᵗ` to every set and client;
//! 2. `τᵗ` intra-set iterations per set, producing `w_cᵗ`;
//! 3. (ADMM variants) `π_c ← π_c + σ_c·(w_cᵗ − wᵗ)`;
//! 4. cloud aggregation producing `wᵗ⁺¹`.
//!
//! A HierF2ADMM intra-set iteration runs local steps from `w_c`, then the
//! `π_kc` update against that same `w_c`, then the masked edge aggregation.
//! Per-client and per-set work may run in parallel; every reduction consumes
//! results in id order.

use serde::{Deserialize, Serialize};

use super::config::{tau_for_round, Algorithm, HierConfig};
use super::steps::*;
use crate::error::{Error, Result};
use crate::exec::{map_ordered, map_ordered_ref};
use crate::objective::{objective_at, set_grad, GlobalCoupling, SetCoupling};
use crate::topology::{CloudState, EdgeGroup};
use crate::vector::{Multiplier, Weights};

/// Magnitude beyond which a run is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Telemetry of one global round, describing the state after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub t: usize,
    pub w_global: Weights,
    /// `F(wᵗ)`
    pub objective: f64,
    /// `max_c ‖w_c − w‖` against the model broadcast this round.
    pub consensus_residual: f64,
    /// `max_c ‖(D_c/D)∇F_c(w_c) + π_c + σ_c(w_c − w)‖`, the gradient of the
    /// intra-set Lagrangian at the returned `w_c`. Zero iff the intra-set
    /// subproblem was solved exactly.
    pub stationarity_residual: f64,
    pub tau_used: usize,
}

/// Runs `tau` intra-set iterations of `cfg.algorithm` in one set, starting from
/// the broadcast `w_global`. `total_samples` is `D` over the whole system.
pub fn run_intra_set_round(
    mut group: EdgeGroup,
    w_global: &Weights,
    tau: usize,
    cfg: &HierConfig,
    total_samples: usize,
) -> Result<EdgeGroup> {
    if tau == 0 {
        return Err(Error::InvalidConfig(
            "intra-set iterations (tau) must be >= 1".into(),
        ));
    }
    let reg = cfg.reg();
    let (steps, mu) = (cfg.local_steps, cfg.mu);
    let exec = cfg.execution;

    group.w_set = w_global.clone();
    for c in &mut group.clients {
        c.w_local = w_global.clone();
        if cfg.reset_client_multipliers {
            c.pi_local = Multiplier::zeros(c.pi_local.len());
        }
    }

    let pi_c = group.pi_set.clone();
    let global = GlobalCoupling {
        w_global,
        pi_c: &pi_c,
        sigma_c: group.sigma_c,
        total_samples,
        set_clients: group.num_clients(),
    };

    for _ in 0..tau {
        match cfg.algorithm {
            Algorithm::HierFed => {
                let locals = map_ordered_ref(exec, &group.clients, |c| {
                    hierfed_local_epoch(c, &group.w_set, steps, mu, reg)
                })
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
                group.w_set = hierfed_edge_aggregate(&group, &locals)?;
                store_locals(&mut group, locals);
            }
            Algorithm::HierFADMM => {
                let locals = map_ordered_ref(exec, &group.clients, |c| {
                    hierfadmm_local_epoch(c, &group.w_set, &global, steps, mu, reg)
                })
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
                group.w_set = hierfed_edge_aggregate(&group, &locals)?;
                store_locals(&mut group, locals);
            }
            Algorithm::HierF2ADMM => {
                let set_samples = group.samples();
                let updates = map_ordered_ref(exec, &group.clients, |c| {
                    let set = SetCoupling {
                        w_set: &group.w_set,
                        pi_kc: &c.pi_local,
                        sigma_kc: c.sigma_kc,
                        set_samples,
                    };
                    let local = hierf2admm_local_epoch(c, &global, &set, steps, mu, reg)?;
                    let pi = client_multiplier_update(c, &local, &group.w_set)?;
                    Ok((local, pi))
                })
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
                let (locals, pis): (Vec<_>, Vec<_>) = updates.into_iter().unzip();
                group.w_set = hierf2admm_edge_aggregate(&group, &locals, &pis)?;
                for (c, pi) in group.clients.iter_mut().zip(pis) {
                    c.pi_local = pi;
                }
                store_locals(&mut group, locals);
            }
        }
    }
    Ok(group)
}

fn store_locals(group: &mut EdgeGroup, locals: Vec<Weights>) {
    for (c, w) in group.clients.iter_mut().zip(locals) {
        c.w_local = w;
    }
}

/// Executes global round `t` (0-based) and reports the state after it as round `t + 1`.
pub fn run_global_round(
    state: CloudState,
    cfg: &HierConfig,
    t: usize,
) -> Result<(CloudState, RoundTrace)> {
    let round = t + 1;
    let tau = tau_for_round(&cfg.tau, t);
    let total = state.samples();
    let w_t = state.w_global.clone();
    let reg = cfg.reg();

    let CloudState { groups, .. } = state;
    let mut groups = map_ordered(cfg.execution, groups, |g| {
        run_intra_set_round(g, &w_t, tau, cfg, total)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()
    .map_err(|e| e.in_round(round))?;

    // Residuals use the multipliers the intra-set subproblems were built with.
    let mut consensus: f64 = 0.0;
    let mut stationarity: f64 = 0.0;
    for g in &groups {
        consensus = consensus.max(g.w_set.distance(&w_t));
        let grad = set_grad(&g.w_set, g, reg).map_err(|e| e.in_round(round))?;
        let share = g.samples() as f64 / total as f64;
        let r = grad
            .as_slice()
            .iter()
            .zip(g.pi_set.as_slice())
            .zip(g.w_set.as_slice().iter().zip(w_t.as_slice()))
            .map(|((gi, pi), (wc, w))| {
                let v = share * gi + pi + g.sigma_c * (wc - w);
                v * v
            })
            .sum::<f64>()
            .sqrt();
        stationarity = stationarity.max(r);
    }

    let w_next = if cfg.algorithm.uses_cloud_admm() {
        for g in &mut groups {
            g.pi_set = edge_multiplier_update(g, &g.w_set, &w_t).map_err(|e| e.in_round(round))?;
        }
        hierfadmm_cloud_aggregate(&groups)
    } else {
        hierfed_cloud_aggregate(&groups)
    }
    .map_err(|e| e.in_round(round))?;

    let mut state = CloudState::new(groups)?;
    state.w_global = w_next;
    let objective = objective_at(&state.w_global, &state, reg).map_err(|e| e.in_round(round))?;

    check_divergence(&state, objective, consensus, stationarity, round)?;

    let trace = RoundTrace {
        t: round,
        w_global: state.w_global.clone(),
        objective,
        consensus_residual: consensus,
        stationarity_residual: stationarity,
        tau_used: tau,
    };
    Ok((state, trace))
}

fn check_divergence(
    state: &CloudState,
    objective: f64,
    consensus: f64,
    stationarity: f64,
    round: usize,
) -> Result<()> {
    let over = |v: f64| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT;
    let diverged = |quantity: &'static str, value: f64| Error::DivergenceDetected {
        round,
        quantity,
        value,
    };
    if over(objective) {
        return Err(diverged("objective", objective));
    }
    if over(consensus) {
        return Err(diverged("consensus_residual", consensus));
    }
    if over(stationarity) {
        return Err(diverged("stationarity_residual", stationarity));
    }
    let w = state.w_global.norm();
    if over(w) {
        return Err(diverged("global model norm", w));
    }
    for g in &state.groups {
        for (quantity, v) in [
            ("set model norm", g.w_set.norm()),
            ("set multiplier norm", g.pi_set.norm()),
        ] {
            if over(v) {
                return Err(diverged(quantity, v));
            }
        }
        for c in &g.clients {
            let v = c.pi_local.norm();
            if over(v) {
                return Err(diverged("client multiplier norm", v));
            }
        }
    }
    Ok(())
}

/// Round-0 record for a freshly built state: objective at `w⁰`, all set models at `w⁰`.
pub fn initial_trace(state: &CloudState, cfg: &HierConfig) -> Result<RoundTrace> {
    let reg = cfg.reg();
    let total = state.samples() as f64;
    let mut stationarity: f64 = 0.0;
    for g in &state.groups {
        let grad = set_grad(&state.w_global, g, reg)?;
        let share = g.samples() as f64 / total;
        let r = grad
            .as_slice()
            .iter()
            .zip(g.pi_set.as_slice())
            .map(|(gi, pi)| (share * gi + pi).powi(2))
            .sum::<f64>()
            .sqrt();
        stationarity = stationarity.max(r);
    }
    Ok(RoundTrace {
        t: 0,
        w_global: state.w_global.clone(),
        objective: objective_at(&state.w_global, state, reg)?,
        consensus_residual: 0.0,
        stationarity_residual: stationarity,
        tau_used: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, Sample};
    use crate::exec::Execution;
    use crate::objective::RegParams;
    use crate::topology::build_topology;
    use crate::trainers::TauSchedule;

    fn shard(n: usize, phase: f64) -> Dataset {
        Dataset::from_samples(
            (0..n)
                .map(|i| {
                    let x = (i as f64 * 0.91 + phase).sin();
                    let y = (i as f64 * 0.37 + 2.0 * phase).cos();
                    Sample {
                        features: vec![x, y, 1.0],
                        label: (x + 0.3 * y > 0.1) as u8,
                    }
                })
                .collect(),
        )
        .unwrap()
    }

    fn state(sizes: &[usize]) -> CloudState {
        let n: usize = sizes.iter().sum();
        let data = (0..n).map(|i| shard(6 + i % 3, i as f64)).collect();
        build_topology(data, sizes, &[0.1], &[0.1]).unwrap()
    }

    fn cfg(algorithm: Algorithm, tau: usize) -> HierConfig {
        HierConfig {
            algorithm,
            local_steps: 2,
            tau: TauSchedule::Fixed { tau0: tau },
            mu: 0.1,
            ..HierConfig::default()
        }
    }

    #[test]
    fn single_client_hierfed_equals_local_epoch() {
        let s = state(&[1]);
        let c = cfg(Algorithm::HierFed, 1);
        let g = s.groups[0].clone();
        let expected = hierfed_local_epoch(&g.clients[0], &s.w_global, 2, 0.1, c.reg()).unwrap();
        let out = run_intra_set_round(g, &s.w_global, 1, &c, s.samples()).unwrap();
        // (D·w)/D may differ from w by one ulp
        assert!(out.w_set.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn hierfadmm_without_coupling_matches_hierfed_inner_loop() {
        let s = state(&[3]);
        let mut g = s.groups[0].clone();
        g.sigma_c = 0.0;
        let w0 = Weights::from_vec(vec![0.2, -0.1, 0.05]);
        let fed = run_intra_set_round(g.clone(), &w0, 3, &cfg(Algorithm::HierFed, 3), s.samples())
            .unwrap();
        let admm =
            run_intra_set_round(g, &w0, 3, &cfg(Algorithm::HierFADMM, 3), s.samples()).unwrap();
        assert_eq!(fed.w_set, admm.w_set);
    }

    #[test]
    fn two_inner_iterations_chain() {
        let s = state(&[3]);
        let w0 = Weights::from_vec(vec![0.2, -0.1, 0.05]);
        for alg in [Algorithm::HierFed, Algorithm::HierFADMM] {
            let c = cfg(alg, 1);
            let g = s.groups[0].clone();
            let once = run_intra_set_round(g.clone(), &w0, 1, &c, s.samples()).unwrap();
            // A second τ=1 pass must restart from the first pass's set model.
            let mut chained = g.clone();
            let two = run_intra_set_round(g, &w0, 2, &c, s.samples()).unwrap();
            chained = run_intra_set_round(chained, &w0, 1, &c, s.samples()).unwrap();
            assert_eq!(chained.w_set, once.w_set);
            // Emulate the second iteration by hand with the same broadcast anchor.
            let global_pi = s.groups[0].pi_set.clone();
            let coupling = GlobalCoupling {
                w_global: &w0,
                pi_c: &global_pi,
                sigma_c: s.groups[0].sigma_c,
                total_samples: s.samples(),
                set_clients: 3,
            };
            let locals: Vec<_> =
                once.clients
                    .iter()
                    .map(|cl| match alg {
                        Algorithm::HierFed => {
                            hierfed_local_epoch(cl, &once.w_set, 2, 0.1, c.reg()).unwrap()
                        }
                        _ => hierfadmm_local_epoch(cl, &once.w_set, &coupling, 2, 0.1, c.reg())
                            .unwrap(),
                    })
                    .collect();
            assert_eq!(hierfed_edge_aggregate(&once, &locals).unwrap(), two.w_set);
        }
    }

    #[test]
    fn f2_updates_client_multipliers_and_satisfies_edge_stationarity() {
        let s = state(&[4]);
        let c = cfg(Algorithm::HierF2ADMM, 3);
        let out =
            run_intra_set_round(s.groups[0].clone(), &s.w_global, 3, &c, s.samples()).unwrap();
        assert!(out.clients.iter().any(|cl| cl.pi_local.norm() > 0.0));
        // Σ_k [σ_kc(w_c − w_kc) − π_kc] = 0 after the last edge aggregation.
        for j in 0..3 {
            let r: f64 = out
                .clients
                .iter()
                .map(|cl| cl.sigma_kc * (out.w_set[j] - cl.w_local[j]) - cl.pi_local[j])
                .sum();
            assert!(r.abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn reset_flag_clears_client_multipliers() {
        let s = state(&[2]);
        let mut c = cfg(Algorithm::HierF2ADMM, 1);
        let mut g = s.groups[0].clone();
        g.clients[0].pi_local = Multiplier::from_vec(vec![5.0, 5.0, 5.0]);
        let kept = run_intra_set_round(g.clone(), &s.w_global, 1, &c, s.samples()).unwrap();
        c.reset_client_multipliers = true;
        let reset = run_intra_set_round(g, &s.w_global, 1, &c, s.samples()).unwrap();
        assert!(kept.clients[0].pi_local[0] > 4.0);
        assert!(reset.clients[0].pi_local[0].abs() < 1.0);
    }

    #[test]
    fn degenerate_hierarchy_is_plain_gradient_descent() {
        let s = state(&[1]);
        let c = HierConfig {
            sets: 1,
            clients_per_set: vec![1],
            ..cfg(Algorithm::HierFed, 1)
        };
        let data = s.groups[0].clients[0].data.clone();
        let (mut st, mut w) = (s, vec![0.0; 3]);
        for t in 0..5 {
            let (next, trace) = run_global_round(st, &c, t).unwrap();
            st = next;
            for _ in 0..2 {
                let g =
                    crate::objective::client_grad(&Weights::from_vec(w.clone()), &data, c.reg())
                        .unwrap();
                w.iter_mut()
                    .zip(g.as_slice())
                    .for_each(|(x, gi)| *x -= 0.1 * gi);
            }
            assert!(trace.w_global.max_abs_diff(&Weights::from_vec(w.clone())) < 1e-12);
            assert_eq!(trace.t, t + 1);
        }
    }

    #[test]
    fn global_round_cloud_stationarity() {
        let s = state(&[2, 3]);
        let c = cfg(Algorithm::HierFADMM, 2);
        let w_t = s.w_global.clone();
        let (mut st, _) = run_global_round(s, &c, 0).unwrap();
        let (next, _) = run_global_round(st.clone(), &c, 1).unwrap();
        // After a round, w_{t+1} satisfies Σ_c [σ_c(w − w_c) − π_c] = 0 with updated π_c.
        for j in 0..3 {
            let r: f64 = next
                .groups
                .iter()
                .map(|g| g.sigma_c * (next.w_global[j] - g.w_set[j]) - g.pi_set[j])
                .sum();
            assert!(r.abs() < 1e-12);
        }
        st.w_global = w_t;
        assert_eq!(st.groups.len(), 2);
    }

    #[test]
    fn sequential_and_parallel_rounds_are_identical() {
        for alg in Algorithm::ALL {
            let mut a = state(&[2, 3]);
            let mut b = a.clone();
            let seq = HierConfig {
                execution: Execution::Sequential,
                ..cfg(alg, 2)
            };
            let par = HierConfig {
                execution: Execution::Parallel,
                ..cfg(alg, 2)
            };
            for t in 0..4 {
                let (na, ta) = run_global_round(a, &seq, t).unwrap();
                let (nb, tb) = run_global_round(b, &par, t).unwrap();
                assert_eq!(ta, tb);
                (a, b) = (na, nb);
            }
        }
    }

    #[test]
    fn divergence_is_reported() {
        let s = state(&[2]);
        let c = HierConfig {
            mu: 1e9,
            ..cfg(Algorithm::HierFed, 1)
        };
        let mut st = s;
        let mut err = None;
        for t in 0..50 {
            match run_global_round(st, &c, t) {
                Ok((next, _)) => st = next,
                Err(e) => {
                    err = Some(e);
                    break;
                }
            }
        }
        assert!(
            matches!(err, Some(Error::DivergenceDetected { .. })),
            "{err:?}"
        );
    }

    #[test]
    fn initial_trace_at_zero() {
        let s = state(&[2, 2]);
        let tr = initial_trace(
            &s,
            &HierConfig {
                lambda: 0.0,
                ..HierConfig::default()
            },
        )
        .unwrap();
        assert!((tr.objective - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!((tr.t, tr.tau_used), (0, 0));
        let _ = RegParams::new(0.0);
    }
}
