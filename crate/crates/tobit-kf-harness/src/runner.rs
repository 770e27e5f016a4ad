//! Executes scenario runs: one simulated trajectory per seed, with every
//! requested filter consuming the identical measurement stream.
//!
//! The four filter variants differ along two axes: whether censoring is
//! modeled (`kf`/`akf` are censor-blind, `tkf`/`atkf` are censor-aware) and
//! whether the noise covariances are known (`kf`/`tkf` run with the true
//! `Q`/`R`, `akf`/`atkf` estimate them online from the scenario's initial
//! guesses).
//!
//! A filter that fails numerically — non-finite state, failed update, or a
//! runaway estimate — is frozen at its last good estimate for the rest of
//! the trajectory and reported as diverged; the run itself always completes
//! and its traces stay free of non-finite values.

use rayon::prelude::*;

use tobit_kf::adaptive::AdaptiveFilter;
use tobit_kf::filter::{predict, tobit_update, FilterState};
use tobit_kf::matrix::{min_eigenvalue, Matrix, Vector};
use tobit_kf::scenarios::ScenarioConfig;
use tobit_kf::system::{simulate_stream, ModelError, SimStep, Trajectory};

/// Estimate magnitude (largest component) beyond which a filter is declared
/// diverged even though the numbers are still finite.
pub const RUNAWAY_LIMIT: f64 = 1e9;

/// The four filter variants the harness can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FilterKind {
    Kf,
    Akf,
    Tkf,
    Atkf,
}

impl FilterKind {
    /// Presentation order used everywhere: plain, adaptive, censor-aware,
    /// censor-aware adaptive.
    pub const ALL: [FilterKind; 4] = [
        FilterKind::Kf,
        FilterKind::Akf,
        FilterKind::Tkf,
        FilterKind::Atkf,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FilterKind::Kf => "kf",
            FilterKind::Akf => "akf",
            FilterKind::Tkf => "tkf",
            FilterKind::Atkf => "atkf",
        }
    }

    pub fn parse(s: &str) -> Option<FilterKind> {
        match s {
            "kf" => Some(FilterKind::Kf),
            "akf" => Some(FilterKind::Akf),
            "tkf" => Some(FilterKind::Tkf),
            "atkf" => Some(FilterKind::Atkf),
            _ => None,
        }
    }

    /// Estimates `Q`/`R` online instead of using the true values.
    pub fn is_adaptive(self) -> bool {
        matches!(self, FilterKind::Akf | FilterKind::Atkf)
    }

    /// Models the measurement censoring instead of taking observations at
    /// face value.
    pub fn sees_censoring(self) -> bool {
        matches!(self, FilterKind::Tkf | FilterKind::Atkf)
    }
}

/// Extremes of the per-step health checks over one filter run, for cheap
/// post-hoc verification that the estimator stayed inside its contracts.
/// Adaptive-only quantities are `None` for `kf`/`tkf`.
#[derive(Clone, Debug)]
pub struct InvariantSummary {
    /// Smallest eigenvalue of the posterior covariance seen at any step.
    pub psi_min_eig: f64,
    /// Smallest eigenvalue of the process-noise estimate at any step.
    pub qhat_min_eig: Option<f64>,
    /// Smallest eigenvalue of the windowed innovation covariance at any step.
    pub xi_min_eig: Option<f64>,
    /// Range of the measurement-noise estimate diagonal over the run.
    pub rhat_min: Option<f64>,
    pub rhat_max: Option<f64>,
    /// Largest deviation of the fading weight from an independently computed
    /// `(1 − γ)/(1 − γᵏ)`.
    pub gamma_max_dev: Option<f64>,
    /// Range of the per-channel uncensored-probability diagonal.
    pub ep_min: f64,
    pub ep_max: f64,
}

impl InvariantSummary {
    fn new() -> Self {
        InvariantSummary {
            psi_min_eig: f64::INFINITY,
            qhat_min_eig: None,
            xi_min_eig: None,
            rhat_min: None,
            rhat_max: None,
            gamma_max_dev: None,
            ep_min: f64::INFINITY,
            ep_max: f64::NEG_INFINITY,
        }
    }

    fn track_min(slot: &mut Option<f64>, v: f64) {
        *slot = Some(slot.map_or(v, |s| s.min(v)));
    }

    fn track_max(slot: &mut Option<f64>, v: f64) {
        *slot = Some(slot.map_or(v, |s| s.max(v)));
    }
}

/// Everything recorded about one filter over one trajectory.
#[derive(Clone, Debug)]
pub struct FilterTrace {
    pub kind: FilterKind,
    /// State estimate after each step, `steps` entries.
    pub xhat: Vec<Vector>,
    /// Squared estimation error `‖x_true − x̂‖²` per step.
    pub sqerr: Vec<f64>,
    /// Trace of the process-noise estimate per step (adaptive only).
    pub qhat_trace: Option<Vec<f64>>,
    /// Measurement-noise estimate diagonal per step (adaptive only).
    pub rhat: Option<Vec<Vec<f64>>>,
    /// Step index at which the filter was frozen, if it diverged.
    pub diverged_at: Option<usize>,
    pub divergence_reason: Option<String>,
    pub invariants: InvariantSummary,
}

/// One seed's complete results: the simulated truth plus all filter traces.
#[derive(Debug)]
pub struct SeedRun {
    pub base_seed: u64,
    pub replicate: u64,
    pub trajectory: Trajectory,
    pub filters: Vec<FilterTrace>,
}

fn squared_error(truth: &Vector, est: &Vector) -> f64 {
    let mut acc = 0.0;
    for i in 0..truth.len() {
        let d = truth[i] - est[i];
        acc += d * d;
    }
    acc
}

fn max_abs(v: &Vector) -> f64 {
    (0..v.len()).fold(0.0f64, |m, i| m.max(v[i].abs()))
}

/// Independent closed-form fading weight used for cross-checking (std `powi`
/// rather than the library's own code path).
fn expected_fading_weight(gamma: f64, k: usize) -> f64 {
    if gamma <= 0.0 {
        return 1.0;
    }
    let gk = gamma.powi(k as i32);
    if gk >= 1.0 {
        1.0 / k as f64
    } else {
        (1.0 - gamma) / (1.0 - gk)
    }
}

/// Run one filter over a prepared trajectory.
pub fn run_filter(cfg: &ScenarioConfig, trajectory: &[SimStep], kind: FilterKind) -> FilterTrace {
    let censor_view = if kind.sees_censoring() {
        cfg.system.censor.clone()
    } else {
        cfg.system.censor.without_censoring()
    };
    let mut state = FilterState::new(cfg.x0_filter.clone(), cfg.psi0.clone());
    let mut adaptive = kind.is_adaptive().then(|| {
        AdaptiveFilter::new(
            cfg.q0_hat.clone(),
            cfg.r0_hat.clone(),
            cfg.gamma,
            cfg.window_n,
        )
    });

    let steps = trajectory.len();
    let mut xhat = Vec::with_capacity(steps);
    let mut sqerr = Vec::with_capacity(steps);
    let mut qhat_trace = adaptive.is_some().then(|| Vec::with_capacity(steps));
    let mut rhat = adaptive.is_some().then(|| Vec::with_capacity(steps));
    let mut inv = InvariantSummary::new();
    let mut diverged_at = None;
    let mut divergence_reason = None;

    for step in trajectory {
        if diverged_at.is_none() {
            // The transition (and, for known-noise filters, the true process
            // noise) is evaluated at the origin time of this step.
            let k_from = step.k - 1;
            let attempt = match adaptive.as_mut() {
                Some(filt) => match filt.step(
                    &state,
                    &cfg.system.transition,
                    &cfg.system.meas,
                    &step.y_obs,
                    &censor_view,
                    k_from,
                ) {
                    Ok((next, info)) => {
                        track_adaptive(&mut inv, filt, &info);
                        Ok((next, info.tobit.ep_diag))
                    }
                    Err(e) => Err(e),
                },
                None => {
                    let q = cfg.system.true_q(&state.x, k_from);
                    let pred = predict(&state, &cfg.system.transition, &q, k_from);
                    tobit_update(
                        &pred.x,
                        &pred.psi,
                        &cfg.system.meas,
                        &step.y_obs,
                        &censor_view,
                        cfg.system.true_r_diag(),
                    )
                    .map(|up| (up.state, up.info.ep_diag))
                }
            };
            match attempt {
                Ok((next, ep_diag)) => {
                    if !next.is_finite() {
                        diverged_at = Some(step.k);
                        divergence_reason =
                            Some(format!("non-finite state at step {}", step.k));
                    } else if max_abs(&next.x) > RUNAWAY_LIMIT {
                        diverged_at = Some(step.k);
                        divergence_reason = Some(format!(
                            "estimate magnitude exceeded {RUNAWAY_LIMIT:e} at step {}",
                            step.k
                        ));
                    } else {
                        state = next;
                        inv.psi_min_eig = inv.psi_min_eig.min(min_eigenvalue(&state.psi));
                        for &p in &ep_diag {
                            inv.ep_min = inv.ep_min.min(p);
                            inv.ep_max = inv.ep_max.max(p);
                        }
                    }
                }
                Err(e) => {
                    diverged_at = Some(step.k);
                    divergence_reason = Some(format!("update failed at step {}: {e}", step.k));
                }
            }
        }
        xhat.push(state.x.clone());
        sqerr.push(squared_error(&step.x_true, &state.x));
        if let Some(filt) = adaptive.as_ref() {
            qhat_trace.as_mut().unwrap().push(trace_of(filt.q_hat()));
            rhat.as_mut().unwrap().push(filt.r_hat_diag().to_vec());
        }
    }

    FilterTrace {
        kind,
        xhat,
        sqerr,
        qhat_trace,
        rhat,
        diverged_at,
        divergence_reason,
        invariants: inv,
    }
}

fn trace_of(m: &Matrix) -> f64 {
    (0..m.rows()).map(|i| m[(i, i)]).sum()
}

fn track_adaptive(
    inv: &mut InvariantSummary,
    filt: &AdaptiveFilter,
    info: &tobit_kf::adaptive::AdaptiveStepInfo,
) {
    InvariantSummary::track_min(&mut inv.qhat_min_eig, min_eigenvalue(filt.q_hat()));
    InvariantSummary::track_min(&mut inv.xi_min_eig, min_eigenvalue(&info.xi));
    for &r in filt.r_hat_diag() {
        InvariantSummary::track_min(&mut inv.rhat_min, r);
        InvariantSummary::track_max(&mut inv.rhat_max, r);
    }
    let expected = expected_fading_weight(filt.gamma(), filt.update_count());
    InvariantSummary::track_max(&mut inv.gamma_max_dev, (info.gamma_k - expected).abs());
}

/// Simulate one seed and run every requested filter on the shared
/// measurement stream. Replicate `i` of base seed `s` draws from stream `i`
/// of generator seed `s`, so seeds and replicates never overlap.
pub fn execute_seed(
    cfg: &ScenarioConfig,
    kinds: &[FilterKind],
    base_seed: u64,
    replicate: u64,
) -> Result<SeedRun, ModelError> {
    let trajectory = simulate_stream(&cfg.system, &cfg.x0_true, cfg.steps, base_seed, replicate)?;
    let filters = kinds
        .iter()
        .map(|&kind| run_filter(cfg, &trajectory, kind))
        .collect();
    Ok(SeedRun {
        base_seed,
        replicate,
        trajectory,
        filters,
    })
}

/// Run `replicates` seeds concurrently; results are ordered by replicate
/// index regardless of scheduling.
pub fn execute_many(
    cfg: &ScenarioConfig,
    kinds: &[FilterKind],
    base_seed: u64,
    replicates: usize,
) -> Result<Vec<SeedRun>, ModelError> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|rep| execute_seed(cfg, kinds, base_seed, rep))
        .collect()
}
