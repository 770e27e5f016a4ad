//! Online estimation of process and measurement noise.
//!
//! The estimators feed on the update intermediates of [`crate::filter`].
//! Every step contributes a one-step *correction* to the process noise (the
//! gap between the realized update power and what the current `Q̂` predicts —
//! mean zero exactly when the belief is consistent) and a one-step sample of
//! the post-fit residual variance; sliding windows average them, the process
//! noise integrates its windowed correction, and a fading-memory recursion
//! blends the windowed residual variance into the measurement noise
//! diagonal. Censored channels divide the residual variance by the
//! censored-variance ratio of the margin the update used before attributing
//! it to the latent sensor noise, and every absorption is weighted by the
//! evidence the channel actually delivered, so the estimates coast through
//! blind stretches instead of absorbing the prior as data. An innovation
//! whiteness statistic arbitrates the split between the two estimates —
//! the one direction the power-matching corrections cannot identify — and a
//! deep-margin innovation guard keeps the rare uncensored reading of an
//! almost-surely-censored channel from slewing the state in one step.
//!
//! [`AdaptiveFilter`] packages the full per-measurement cycle:
//! predict with the current `Q̂`, Tobit-update with the current `R̂`, then
//! refresh both estimates. Running it with an all-`None` censor description
//! yields the conventional adaptive Kalman filter on the same data: the
//! guard never arms, every evidence weight is 1, and the recursions reduce
//! to the plain fading blends.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::filter::{predict, tobit_update, FilterError, FilterState, TobitIntermediates};
use crate::gauss::{censored_variance_shape, std_normal_cdf, std_normal_sf};
use crate::matrix::{symmetrize_psd, Matrix, Vector};
use crate::system::{CensorSpec, Transition};

/// Eigenvalue floor applied to the process noise estimate each step.
pub const Q_HAT_EIG_FLOOR: f64 = 1e-12;

/// Floor for each estimated measurement noise variance.
pub const R_HAT_FLOOR: f64 = 1e-9;

/// Floor for the censored-variance ratio that divides the residual variance
/// of a censored channel; keeps the correction bounded when the channel is
/// almost surely censored and the ratio collapses toward zero.
pub const VARIANCE_RATIO_FLOOR: f64 = 1e-3;

/// Standardized margin below which the rare-branch innovation guard arms.
///
/// With the predicted margin this deep on the censored side, the filter's
/// innovation variance is dominated by the near-certain censored branch, so
/// the linearized gain wildly overcorrects on the rare uncensored reading
/// (the one observation whose innovation the belief considers a many-sigma
/// event). Guarding only below this margin leaves censoring-free operation
/// bit-identical.
pub const DEEP_GATE_MARGIN: f64 = 2.0;

/// Width of the innovation guard in predicted-innovation standard deviations.
///
/// A deep channel's innovation is clamped to this many multiples of
/// `√R_ỹỹ(i,i)` before the state correction and the noise-estimator windows
/// see it, so a single rare-branch reading walks the estimate back over a few
/// steps instead of teleporting it across the censoring boundary in one.
pub const DEEP_GATE_SIGMA: f64 = 3.0;

/// Gain mapping the normalized innovation lag-correlation onto the relative
/// trim of the `Q̂`/`R̂` split.
///
/// The split along the power-matching family is only observable through the
/// whiteness statistic, so the trim is the sole restoring force on that axis
/// and must outrun the sampling-noise wander of the other recursions; a
/// small gain lets the split drift into self-confirming regimes (an inflated
/// `Q̂` manufactures enough innovation power to justify itself) faster than
/// the trim can pull it back.
pub const WHITENESS_TRIM_GAIN: f64 = 0.8;

/// Hard cap on the per-step relative whiteness trim.
pub const WHITENESS_TRIM_CLIP: f64 = 0.4;

/// Number of innovation lags feeding the whiteness statistic.
pub const WHITENESS_LAGS: usize = 8;

/// Geometric down-weighting applied to successive lags of the whiteness
/// statistic.
pub const WHITENESS_LAG_DECAY: f64 = 0.8;

/// Fading-memory blend weight after `k ≥ 1` absorbed updates:
/// `Γ_k = (1 − γ)/(1 − γᵏ)`. Starts at exactly 1 (the first sample replaces
/// the initial guess) and decays monotonically to `1 − γ`.
pub fn fading_weight(gamma: f64, k: usize) -> f64 {
    debug_assert!(k >= 1, "weights are defined from the first update");
    if !(gamma > 0.0) {
        return 1.0;
    }
    let gk = libm::pow(gamma, k as f64);
    if gk >= 1.0 {
        // γ ≥ 1 (or rounding drove γᵏ to 1): limit of the expression is 1/k.
        1.0 / k as f64
    } else {
        (1.0 - gamma) / (1.0 - gk)
    }
}

/// Sliding window of recent filter vectors (innovations, or realized state
/// corrections), averaged into an empirical covariance.
#[derive(Clone, Debug)]
pub struct InnovationWindow {
    buf: VecDeque<Vector>,
    cap: usize,
}

impl InnovationWindow {
    pub fn new(cap: usize) -> Self {
        assert!(cap >= 1, "window must hold at least one innovation");
        InnovationWindow {
            buf: VecDeque::with_capacity(cap),
            cap,
        }
    }

    pub fn capacity(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn push(&mut self, innovation: Vector) {
        if self.buf.len() == self.cap {
            self.buf.pop_front();
        }
        self.buf.push_back(innovation);
    }

    /// Mean of the retained outer products `ỹ·ỹᵀ`; `None` while empty.
    pub fn mean_outer(&self) -> Option<Matrix> {
        let first = self.buf.front()?;
        let m = first.len();
        let mut xi = Matrix::zeros(m, m);
        for v in &self.buf {
            for i in 0..m {
                for j in 0..m {
                    xi[(i, j)] += v[i] * v[j];
                }
            }
        }
        Some(xi.scaled(1.0 / self.buf.len() as f64))
    }

    /// Per-channel mean of the retained vectors; `None` while empty.
    pub fn mean(&self) -> Option<Vec<f64>> {
        let m = self.buf.front()?.len();
        let mut mu = alloc::vec![0.0; m];
        for v in &self.buf {
            for i in 0..m {
                mu[i] += v[i];
            }
        }
        for x in mu.iter_mut() {
            *x /= self.buf.len() as f64;
        }
        Some(mu)
    }

    /// Per-channel mean of the centered lagged products
    /// `(ỹ_j[i] − c[i])·(ỹ_{j−lag}[i] − c[i])` over the retained history;
    /// `None` until the window holds more than `lag` innovations. Centering
    /// keeps a persistent innovation bias (a level error, not serial noise
    /// correlation) out of the statistic.
    pub fn lag_diag_mean(&self, lag: usize, center: &[f64]) -> Option<Vec<f64>> {
        if lag == 0 || self.buf.len() <= lag {
            return None;
        }
        let m = self.buf.front()?.len();
        let mut acc = alloc::vec![0.0; m];
        for j in lag..self.buf.len() {
            let cur = &self.buf[j];
            let old = &self.buf[j - lag];
            for i in 0..m {
                acc[i] += (cur[i] - center[i]) * (old[i] - center[i]);
            }
        }
        let pairs = (self.buf.len() - lag) as f64;
        for a in acc.iter_mut() {
            *a /= pairs;
        }
        Some(acc)
    }
}

/// Sliding window of per-step covariance samples, averaged on demand.
///
/// The noise estimators window whole per-step sample matrices rather than
/// raw innovations: each sample is assembled with the gain and shrink factor
/// of its *own* step, so transients age out of the estimate exactly as they
/// age out of the window. With a single-slot window the average is the
/// one-step sample itself.
#[derive(Clone, Debug)]
pub struct MatrixWindow {
    buf: VecDeque<Matrix>,
    cap: usize,
}

impl MatrixWindow {
    pub fn new(cap: usize) -> Self {
        assert!(cap >= 1, "window must hold at least one sample");
        MatrixWindow {
            buf: VecDeque::with_capacity(cap),
            cap,
        }
    }

    pub fn capacity(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn push(&mut self, sample: Matrix) {
        if self.buf.len() == self.cap {
            self.buf.pop_front();
        }
        self.buf.push_back(sample);
    }

    /// Mean of the retained samples; `None` while empty.
    pub fn mean(&self) -> Option<Matrix> {
        let first = self.buf.front()?;
        let mut acc = Matrix::zeros(first.rows(), first.cols());
        for s in &self.buf {
            acc = acc.add(s);
        }
        Some(acc.scaled(1.0 / self.buf.len() as f64))
    }
}

/// Convex blend `(1 − w)·prev + w·sample`.
pub fn blend_matrix(prev: &Matrix, sample: &Matrix, w: f64) -> Matrix {
    prev.scaled(1.0 - w).add(&sample.scaled(w))
}

/// One step's process noise correction implied by the update:
/// `(K·ỹ)·(K·ỹ)ᵀ + Ψ⁺ − A·Ψ_prev⁺·Aᵀ − Q̂` (symmetrized).
///
/// The quadratic term is the realized state correction of this step, and the
/// covariance drift term is the posterior growth the prediction could not
/// explain; subtracting the `Q̂` used by that same prediction leaves the gap
/// between realized and modeled update power. Algebraically the whole
/// expression collapses to `K·(ỹỹᵀ − R_ỹỹ)·Kᵀ`: when the filter's belief is
/// consistent (`E[ỹỹᵀ] = R_ỹỹ`) the correction is mean zero at *every*
/// censoring depth and state of convergence, so integrating windowed means of
/// it leaves a correct `Q̂` where it is and pushes a wrong one toward the
/// power the innovations actually show.
///
/// Pairing each gain with its *own* innovation and covariance drift is what
/// bounds the correction. The factored form `K·ξ·Kᵀ` — today's gain against a
/// windowed innovation mean — is identical only while the gain is static;
/// under censoring, where the gain is small while innovations are large and
/// then grows as they shrink, it replays old innovations against a gain they
/// never experienced and ratchets `Q̂` upward without bound.
pub fn process_noise_correction(
    move_step: &Vector,
    psi_post: &Matrix,
    a: &Matrix,
    psi_prev_post: &Matrix,
    q_used: &Matrix,
) -> Matrix {
    let apa = &(a * psi_prev_post) * &a.transpose();
    move_step
        .outer(move_step)
        .add(psi_post)
        .sub(&apa)
        .sub(q_used)
        .symmetrized()
}

/// Integrate a windowed process noise correction, projecting the result back
/// onto the PSD cone.
///
/// The correction is mean zero under a consistent belief, so the estimate
/// stays put once right instead of being dragged toward stale windowed
/// samples; and because the step is additive rather than a convex pull
/// toward a target, the multiplicative whiteness trim can actually
/// compound — a blend would re-anchor the estimate every step and cancel it.
pub fn update_process_noise(prev: &Matrix, correction: &Matrix, w: f64) -> Matrix {
    symmetrize_psd(&prev.add(&correction.scaled(w)), Q_HAT_EIG_FLOOR)
}

/// Post-fit residual variance implied by an innovation power matrix `ξ`
/// (one step's `ỹ·ỹᵀ`, or a windowed mean of them).
///
/// The innovation linearizes through the *effective* measurement operator
/// `H = E[P]·C'` (the same operator that builds `R_ỹỹ` and the posterior
/// covariance), so the residual shrink factor is `S = I − H·K` and
///
/// `V̂ = S·ξ·Sᵀ + S·H·R_x̃ỹ`
///
/// where the second term equals `H·Ψ⁺·Hᵀ` exactly and reduces to `C·Ψ⁺·Cᵀ`
/// without censoring. Both terms are positive semidefinite, which keeps the
/// variance samples nonnegative; using the raw `C'` instead would let the
/// second term flip sign whenever `C'·K` exceeds the identity, as the
/// posterior actually shrinks by `K·E[P]·C'`, not `K·C'`. In a
/// censoring-free steady state `E[V̂]` is exactly the measurement noise
/// covariance; fed one step at a time it pairs each innovation with the
/// shrink factor of its own update, so a transient's contribution leaves
/// the windowed `V̂` the moment the window drops it.
pub fn residual_noise_estimate(xi: &Matrix, info: &TobitIntermediates) -> Matrix {
    let m = info.c_eff.rows();
    let mut h = info.c_eff.clone();
    for i in 0..m {
        h.scale_row(i, info.ep_diag[i]);
    }
    let shrink = Matrix::identity(m).sub(&(&h * &info.gain));
    let quad = &(&shrink * xi) * &shrink.transpose();
    let post = &shrink * &(&h * &info.r_xy);
    quad.add(&post).symmetrized()
}

/// Fading-memory measurement noise update, one variance per channel.
///
/// A censored channel's residual variance reflects only the share of the
/// sensor noise the update could actually see, so the sample is divided by
/// the censored-variance ratio of the standardized margin `η̂_i` the update
/// used — the same per-unit-variance shape that scales `R` inside the
/// innovation covariance. At a self-consistent belief the expected residual
/// variance equals `shape(η̂)·R` *exactly*, at every censoring depth, so this
/// divisor makes the recursion's fixed point the true `R` rather than biasing
/// it by the ratio of the shape to some other correction. Uncensored
/// channels (`η̂ = ∞`) divide by 1, recovering the plain residual-based
/// recursion. The divisor is floored to keep the correction bounded when the
/// channel is almost surely censored and the ratio collapses toward zero.
///
/// `weights` carries the per-channel blend weight — the fading weight, scaled
/// by how much evidence the channel actually delivered — so a channel that is
/// currently blind coasts on its previous estimate instead of absorbing
/// noise-free samples.
pub fn update_measurement_noise(
    prev_diag: &[f64],
    v_hat: &Matrix,
    eta: &[f64],
    weights: &[f64],
) -> Vec<f64> {
    let mut out = Vec::with_capacity(prev_diag.len());
    for i in 0..prev_diag.len() {
        let ratio = if eta[i].is_finite() {
            let phi = std_normal_cdf(eta[i]);
            let q = std_normal_sf(eta[i]);
            censored_variance_shape(phi, q, eta[i]).max(VARIANCE_RATIO_FLOOR)
        } else {
            1.0
        };
        let sample = v_hat[(i, i)] / ratio;
        let w = weights[i];
        out.push(((1.0 - w) * prev_diag[i] + w * sample).max(R_HAT_FLOOR));
    }
    out
}

/// Per-channel correction that pins down the `Q̂`/`R̂` split.
///
/// The blended recursions alone cannot separate process from measurement
/// noise: a one-parameter family of splits reproduces the observed
/// innovation power, every member is a fixed point in expectation, and
/// sampling noise lets the estimates wander along the family (in practice
/// toward vanishing `Q̂`). Innovation serial correlation breaks the tie — a
/// filter trusting measurements too little leaves positive lag correlation,
/// one trusting them too much leaves negative correlation, and only the true
/// split whitens the sequence. Each channel's multi-lag correlation —
/// centered on the window mean, so a persistent level error reads as bias
/// rather than as serial correlation — normalized by its innovation power
/// and damped by its probability of being uncensored, is therefore clipped
/// to a small fraction and used to move variance between `R̂` and `Q̂`.
pub fn whiteness_trim(window: &InnovationWindow, xi: &Matrix, ep_diag: &[f64]) -> Vec<f64> {
    let m = ep_diag.len();
    let center = match window.mean() {
        Some(c) => c,
        None => return alloc::vec![0.0; m],
    };
    let mut num = alloc::vec![0.0; m];
    let mut den = alloc::vec![0.0; m];
    let mut weight = 1.0;
    for lag in 1..=WHITENESS_LAGS {
        if let Some(prods) = window.lag_diag_mean(lag, &center) {
            for i in 0..m {
                num[i] += weight * prods[i];
                den[i] += weight * xi[(i, i)].max(Q_HAT_EIG_FLOOR);
            }
        }
        weight *= WHITENESS_LAG_DECAY;
    }
    (0..m)
        .map(|i| {
            if den[i] > 0.0 {
                (WHITENESS_TRIM_GAIN * ep_diag[i] * num[i] / den[i])
                    .clamp(-WHITENESS_TRIM_CLIP, WHITENESS_TRIM_CLIP)
            } else {
                0.0
            }
        })
        .collect()
}

/// Diagnostics from one adaptive filter cycle.
#[derive(Clone, Debug)]
pub struct AdaptiveStepInfo {
    pub tobit: TobitIntermediates,
    /// Empirical innovation covariance used for this step's estimates.
    pub xi: Matrix,
    /// Blend weight `Γ_k` applied this step.
    pub gamma_k: f64,
    /// Residual variance estimate `V̂` for this step.
    pub v_hat: Matrix,
    /// Per-channel whiteness trim applied to the noise split this step.
    pub trim: Vec<f64>,
}

/// State estimator with online `Q̂`/`R̂` tracking.
#[derive(Clone, Debug)]
pub struct AdaptiveFilter {
    gamma: f64,
    window: InnovationWindow,
    /// Window of one-step process noise samples, in lockstep with the
    /// innovation window; the fading blend absorbs its mean.
    q_samples: MatrixWindow,
    /// Window of one-step residual variance samples; its mean is the `V̂`
    /// that feeds the measurement noise blend.
    v_samples: MatrixWindow,
    updates: usize,
    q_hat: Matrix,
    r_hat_diag: Vec<f64>,
}

impl AdaptiveFilter {
    /// `q0`/`r0_diag` seed the noise estimates; `gamma` is the fading factor
    /// in `[0, 1)`; `window` the innovation history length.
    pub fn new(q0: Matrix, r0_diag: Vec<f64>, gamma: f64, window: usize) -> Self {
        assert!(q0.is_square());
        assert!((0.0..1.0).contains(&gamma), "fading factor must be in [0, 1)");
        AdaptiveFilter {
            gamma,
            window: InnovationWindow::new(window),
            q_samples: MatrixWindow::new(window),
            v_samples: MatrixWindow::new(window),
            updates: 0,
            q_hat: q0,
            r_hat_diag: r0_diag,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn window_capacity(&self) -> usize {
        self.window.capacity()
    }

    pub fn q_hat(&self) -> &Matrix {
        &self.q_hat
    }

    pub fn r_hat_diag(&self) -> &[f64] {
        &self.r_hat_diag
    }

    pub fn update_count(&self) -> usize {
        self.updates
    }

    /// One full cycle from the previous posterior: predict with `Q̂`,
    /// Tobit-update with `R̂`, then refresh both noise estimates from the
    /// update's intermediates. `k` is the time index of the origin state,
    /// forwarded to the transition model.
    pub fn step(
        &mut self,
        prev: &FilterState,
        transition: &Transition,
        c: &Matrix,
        y_obs: &Vector,
        spec: &CensorSpec,
        k: usize,
    ) -> Result<(FilterState, AdaptiveStepInfo), FilterError> {
        if self.q_hat.rows() != prev.dim() {
            return Err(FilterError::Shape {
                what: "process noise estimate",
                expected: prev.dim(),
                got: self.q_hat.rows(),
            });
        }
        let a = transition.jacobian(&prev.x, k);
        let psi_prev_post = prev.psi.clone();
        let pred = predict(prev, transition, &self.q_hat, k);
        let mut up = tobit_update(&pred.x, &pred.psi, c, y_obs, spec, &self.r_hat_diag)?;

        // Rare-branch innovation guard. A channel whose predicted margin sits
        // deep on the censored side expects essentially no innovation power,
        // so its gain-to-evidence ratio explodes and the occasional uncensored
        // reading — a many-sigma event under that belief — would yank the
        // state across the censoring boundary and poison every window at
        // once. Clamping such a channel's innovation at a few predicted
        // standard deviations turns the yank into a bounded pull that repeats
        // until the belief catches up. The covariance update is untouched
        // (it never depends on the realized innovation), and channels at or
        // above the margin — every channel, when nothing is censored — pass
        // through bit-identical.
        let mut gated = false;
        for i in 0..up.info.innovation.len() {
            let eta_i = up.info.eta[i];
            if eta_i.is_finite() && eta_i < -DEEP_GATE_MARGIN {
                let lim = DEEP_GATE_SIGMA * libm::sqrt(up.info.r_yy[(i, i)].max(0.0));
                if up.info.innovation[i].abs() > lim {
                    up.info.innovation[i] = up.info.innovation[i].clamp(-lim, lim);
                    gated = true;
                }
            }
        }
        let mut state = up.state;
        if gated {
            state.x = pred.x.add(&up.info.gain.mul_vec(&up.info.innovation));
        }

        self.updates += 1;
        let w = fading_weight(self.gamma, self.updates);
        self.window.push(up.info.innovation.clone());
        let move_step = up.info.gain.mul_vec(&up.info.innovation);
        self.q_samples
            .push(process_noise_sample(&move_step, &state.psi, &a, &psi_prev_post));
        let step_outer = up.info.innovation.outer(&up.info.innovation);
        self.v_samples
            .push(residual_noise_estimate(&step_outer, &up.info));

        let xi = self.window.mean_outer().expect("window was just fed");
        let q_sample = self.q_samples.mean().expect("window was just fed");
        let v_hat = self.v_samples.mean().expect("window was just fed");

        // Evidence-weighted blends: each channel absorbs this step's sample
        // in proportion to the squared probability that its reading carried
        // information. A blind channel coasts on its previous estimate
        // instead of digesting samples made of prior alone, and with nothing
        // censored every weight is exactly the fading weight.
        let m = up.info.ep_diag.len();
        let mean_ep2 = up.info.ep_diag.iter().map(|e| e * e).sum::<f64>() / m.max(1) as f64;
        self.q_hat = update_process_noise(&self.q_hat, &q_sample, w * mean_ep2);
        let r_weights: Vec<f64> = up.info.ep_diag.iter().map(|e| w * e * e).collect();
        self.r_hat_diag =
            update_measurement_noise(&self.r_hat_diag, &v_hat, &up.info.eta, &r_weights);

        // Re-split the captured variance between the two estimates according
        // to the innovation whiteness; a uniform positive rescale keeps Q̂ in
        // the PSD cone, so no further projection is needed.
        let trim = whiteness_trim(&self.window, &xi, &up.info.ep_diag);
        for (r, t) in self.r_hat_diag.iter_mut().zip(&trim) {
            *r = (*r * (1.0 - t)).max(R_HAT_FLOOR);
        }
        let mean_trim = trim.iter().sum::<f64>() / trim.len().max(1) as f64;
        self.q_hat = self.q_hat.scaled(1.0 + mean_trim);

        Ok((
            state,
            AdaptiveStepInfo {
                tobit: up.info,
                xi,
                gamma_k: w,
                v_hat,
                trim,
            },
        ))
    }
}
