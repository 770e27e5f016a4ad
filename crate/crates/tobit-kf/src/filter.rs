//! Kalman prediction and the censored-measurement (Tobit) update.
//!
//! The update treats each measurement channel as a Tobit observation: the
//! latent `y* ~ N(C·x, σ²)` is reported clipped at a threshold, so the filter
//! weighs every channel by its probability of being uncensored, replaces the
//! raw innovation with the distance from the *censored* measurement mean, and
//! widens/narrows the innovation covariance with the censored measurement
//! variance. Uncensored channels fall out of the same code path as the
//! η → +∞ limit, which is how [`kf_update`] recovers the textbook Kalman
//! filter to floating-point precision.
//!
//! Upper-censored channels are reflected into canonical lower-censored form
//! (negating the observation, threshold and measurement row) before the
//! update; all intermediates are therefore reported in that canonical space.

use alloc::vec::Vec;
use core::fmt;

use crate::gauss::{censored_variance_shape, std_normal_cdf, std_normal_pdf, std_normal_sf};
use crate::matrix::{solve, symmetrize_psd, Matrix, MatrixError, Vector};
use crate::system::{CensorSpec, ChannelCensor, Transition};

/// Bounds for the clamped non-censoring probability on the `E[P]` diagonal:
/// entries live in `[EP_CLAMP, 1 − EP_CLAMP]`, keeping the innovation
/// covariance invertible in deep censoring while perturbing the uncensored
/// limit far below the filter's working tolerance.
pub const EP_CLAMP: f64 = 1e-12;

/// Standardized margin at which a channel is treated as fully censored:
/// `Φ(−ETA_DEEP) = EP_CLAMP`. Beyond it every channel quantity (probability,
/// innovation, variance) is evaluated at this margin instead of the true one,
/// so they shrink *together*. Clamping the probability alone while the
/// variance keeps underflowing would leave `R_ỹỹ ≈ E[P]²·C·Ψ·Cᵀ` and a gain
/// of order `1/E[P]`, turning the no-information limit into a divergence.
pub const ETA_DEEP: f64 = 7.034483825301132;

/// Relative diagonal bump used to retry a singular innovation solve:
/// `R_ỹỹ + (RYY_REG_SCALE · trace(R_ỹỹ)/m)·I`.
pub const RYY_REG_SCALE: f64 = 1e-9;

/// Mean and covariance of the state estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterState {
    pub x: Vector,
    pub psi: Matrix,
}

impl FilterState {
    pub fn new(x: Vector, psi: Matrix) -> Self {
        debug_assert!(psi.is_square() && psi.rows() == x.len());
        FilterState { x, psi }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.psi.is_finite()
    }
}

/// Errors from a filter update step.
#[derive(Clone, Debug, PartialEq)]
pub enum FilterError {
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// A censored channel was given a non-positive noise variance, or any
    /// channel a negative one.
    InvalidNoise { index: usize },
    /// Inputs contained NaN or infinity.
    NonFinite { what: &'static str },
    /// Innovation covariance stayed singular after the regularized retry.
    SingularInnovation { pivot: usize },
    Matrix(MatrixError),
}

impl fmt::Display for FilterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterError::Shape { what, expected, got } => {
                write!(f, "{what}: expected dimension {expected}, got {got}")
            }
            FilterError::InvalidNoise { index } => {
                write!(f, "measurement noise variance {index} invalid for its censor mode")
            }
            FilterError::NonFinite { what } => write!(f, "non-finite {what}"),
            FilterError::SingularInnovation { pivot } => write!(
                f,
                "innovation covariance singular after regularization (pivot {pivot})"
            ),
            FilterError::Matrix(e) => write!(f, "{e}"),
        }
    }
}

impl From<MatrixError> for FilterError {
    fn from(e: MatrixError) -> Self {
        FilterError::Matrix(e)
    }
}

/// Quantities produced on the way to a Tobit update, in canonical
/// (lower-censored) measurement space. Exposed for the adaptive noise
/// estimators and for diagnostics.
#[derive(Clone, Debug)]
pub struct TobitIntermediates {
    /// Standardized margins η per channel; `+∞` for uncensored channels.
    pub eta: Vec<f64>,
    /// Clamped non-censoring probabilities — the diagonal of `E[P]`.
    pub ep_diag: Vec<f64>,
    /// Expected observed measurement `E[y]` per channel.
    pub y_expect: Vector,
    /// Innovation `ỹ = y − E[y]`.
    pub innovation: Vector,
    /// Censored measurement variance — the diagonal of `V`.
    pub v_diag: Vec<f64>,
    /// Measurement matrix in canonical space (upper channels negated).
    pub c_eff: Matrix,
    /// State/innovation cross-covariance `R_x̃ỹ = Ψ·C'ᵀ·E[P]` (n×m).
    pub r_xy: Matrix,
    /// Innovation covariance `R_ỹỹ = E[P]·C'·Ψ·C'ᵀ·E[P] + V` (m×m).
    pub r_yy: Matrix,
    /// Gain `K = R_x̃ỹ·R_ỹỹ⁻¹` (n×m).
    pub gain: Matrix,
    /// Whether the gain solve needed the regularized retry.
    pub regularized: bool,
}

/// A completed measurement update.
#[derive(Clone, Debug)]
pub struct TobitUpdate {
    pub state: FilterState,
    pub info: TobitIntermediates,
}

/// Time update: propagate the mean through the (possibly nonlinear)
/// transition and the covariance through its Jacobian at the current
/// estimate: `Ψ ← A·Ψ·Aᵀ + Q`, re-symmetrized.
pub fn predict(state: &FilterState, transition: &Transition, q_used: &Matrix, k: usize) -> FilterState {
    let a = transition.jacobian(&state.x, k);
    let x = transition.propagate(&state.x, k);
    let psi = (&(&a * &state.psi) * &a.transpose()).add(q_used).symmetrized();
    FilterState { x, psi }
}

/// Measurement update under per-channel censoring.
///
/// `r_used_diag` is the filter's current belief about the measurement noise
/// variances (true values for a fixed-noise filter, estimates for an adaptive
/// one). Censored channels require strictly positive variance.
///
/// The deep-censoring regime degrades gracefully: when every channel is
/// almost surely censored the innovation is exponentially small while the
/// gain grows only polynomially, so the posterior equals the prior to within
/// numerical noise and the filter coasts on its prediction.
pub fn tobit_update(
    x_pred: &Vector,
    psi_pred: &Matrix,
    c: &Matrix,
    y_obs: &Vector,
    spec: &CensorSpec,
    r_used_diag: &[f64],
) -> Result<TobitUpdate, FilterError> {
    let n = x_pred.len();
    let m = c.rows();
    if c.cols() != n {
        return Err(FilterError::Shape {
            what: "measurement matrix columns",
            expected: n,
            got: c.cols(),
        });
    }
    if y_obs.len() != m {
        return Err(FilterError::Shape {
            what: "measurement vector",
            expected: m,
            got: y_obs.len(),
        });
    }
    if spec.len() != m {
        return Err(FilterError::Shape {
            what: "censor channels",
            expected: m,
            got: spec.len(),
        });
    }
    if r_used_diag.len() != m {
        return Err(FilterError::Shape {
            what: "noise diagonal",
            expected: m,
            got: r_used_diag.len(),
        });
    }
    if !(x_pred.is_finite() && psi_pred.is_finite()) {
        return Err(FilterError::NonFinite { what: "predicted state" });
    }
    if !y_obs.is_finite() {
        return Err(FilterError::NonFinite { what: "measurement" });
    }

    // Reflect every channel into canonical lower-censored space.
    let mut c_eff = c.clone();
    let mut y_eff = y_obs.clone();
    let mut tau_eff = alloc::vec![0.0f64; m];
    let mut is_censoring = alloc::vec![false; m];
    for i in 0..m {
        match spec.channel(i) {
            ChannelCensor::None => {}
            ChannelCensor::Lower { tau } => {
                tau_eff[i] = tau;
                is_censoring[i] = true;
            }
            ChannelCensor::Upper { tau } => {
                c_eff.scale_row(i, -1.0);
                y_eff[i] = -y_eff[i];
                tau_eff[i] = -tau;
                is_censoring[i] = true;
            }
        }
        let r = r_used_diag[i];
        if !r.is_finite() || r < 0.0 || (is_censoring[i] && r == 0.0) {
            return Err(FilterError::InvalidNoise { index: i });
        }
    }

    let mu = c_eff.mul_vec(x_pred);
    let mut eta_v = alloc::vec![0.0f64; m];
    let mut ep = alloc::vec![0.0f64; m];
    let mut v_diag = alloc::vec![0.0f64; m];
    let mut innovation = Vector::zeros(m);
    for i in 0..m {
        let r = r_used_diag[i];
        if is_censoring[i] {
            let sigma = libm::sqrt(r);
            let eta = ((mu[i] - tau_eff[i]) / sigma).max(-ETA_DEEP);
            let phi_c = std_normal_cdf(eta).clamp(EP_CLAMP, 1.0 - EP_CLAMP);
            let q = std_normal_sf(eta); // unclamped tail, see below
            eta_v[i] = eta;
            ep[i] = phi_c;
            if eta > -ETA_DEEP {
                // Innovation against the censored mean, arranged as a
                // correction to the plain residual so that remote thresholds
                // (η → +∞) do not cancel catastrophically:
                //   y − E[y] = (y − μ) + (1−Φ)(μ − τ) − σ·φ(η)
                innovation[i] =
                    (y_eff[i] - mu[i]) + q * (mu[i] - tau_eff[i]) - sigma * std_normal_pdf(eta);
            } else {
                // Fully-censored clamp: the expected observation is written
                // relative to the threshold, E[y] = τ + σ·(φ(η) + η·Φ(η)),
                // with η at the clamped margin; the data term (y − τ) is then
                // exactly zero for a censored reading regardless of how far
                // the true margin lies beyond the clamp.
                let excess = std_normal_pdf(eta) + eta * std_normal_cdf(eta);
                innovation[i] = (y_eff[i] - tau_eff[i]) - sigma * excess;
            }
            // Censored measurement variance with the clamped probability, so
            // V keeps the same floor that keeps R_ỹỹ invertible. The tail
            // factor q must stay unclamped: it is what shuts off the
            // quadratic term for effectively uncensored channels.
            v_diag[i] = r * censored_variance_shape(phi_c, q, eta);
        } else {
            eta_v[i] = f64::INFINITY;
            ep[i] = 1.0 - EP_CLAMP;
            innovation[i] = y_eff[i] - mu[i];
            v_diag[i] = r;
        }
    }
    let y_expect = y_eff.sub(&innovation);

    // R_x̃ỹ = Ψ·C'ᵀ·E[P]  and  R_ỹỹ = E[P]·C'·Ψ·C'ᵀ·E[P] + V.
    let psi_ct = &psi_pred.symmetrized() * &c_eff.transpose(); // n×m
    let mut r_xy = psi_ct.clone();
    for j in 0..m {
        for i in 0..n {
            r_xy[(i, j)] *= ep[j];
        }
    }
    let b = (&c_eff * &psi_ct).symmetrized(); // C'·Ψ·C'ᵀ
    let mut r_yy = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            r_yy[(i, j)] = ep[i] * b[(i, j)] * ep[j];
        }
        r_yy[(i, i)] += v_diag[i];
    }

    let (gain, regularized) = match solve(&r_yy, &r_xy.transpose()) {
        Ok(kt) => (kt.transpose(), false),
        Err(MatrixError::Singular { .. }) => {
            let bump = RYY_REG_SCALE * r_yy.trace() / m as f64;
            let mut reg = r_yy.clone();
            for i in 0..m {
                reg[(i, i)] += bump;
            }
            match solve(&reg, &r_xy.transpose()) {
                Ok(kt) => (kt.transpose(), true),
                Err(MatrixError::Singular { pivot }) => {
                    return Err(FilterError::SingularInnovation { pivot })
                }
                Err(e) => return Err(e.into()),
            }
        }
        Err(e) => return Err(e.into()),
    };

    let x = x_pred.add(&gain.mul_vec(&innovation));
    // Covariance update (I − K·E[P]·C')·Ψ, floored at PSD.
    let mut kep = gain.clone(); // n×m, columns scaled by E[P]
    for j in 0..m {
        for i in 0..n {
            kep[(i, j)] *= ep[j];
        }
    }
    let shrink = Matrix::identity(n).sub(&(&kep * &c_eff));
    let psi = symmetrize_psd(&(&shrink * psi_pred), 0.0);

    Ok(TobitUpdate {
        state: FilterState { x, psi },
        info: TobitIntermediates {
            eta: eta_v,
            ep_diag: ep,
            y_expect,
            innovation,
            v_diag,
            c_eff,
            r_xy,
            r_yy,
            gain,
            regularized,
        },
    })
}

/// Plain Kalman measurement update — the censoring-free special case of
/// [`tobit_update`].
pub fn kf_update(
    x_pred: &Vector,
    psi_pred: &Matrix,
    c: &Matrix,
    y_obs: &Vector,
    r_used_diag: &[f64],
) -> Result<TobitUpdate, FilterError> {
    tobit_update(x_pred, psi_pred, c, y_obs, &CensorSpec::none(c.rows()), r_used_diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{CensorSpec, ChannelCensor, DynamicSystem, ProcessNoise, Transition};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn predict_accumulates_process_noise() {
        // Static scalar model: psi passes through unchanged when Q = 0.
        let s = FilterState::new(Vector::from_slice(&[5.0]), Matrix::from_rows(&[[25.0]]));
        let t = Transition::Linear(Matrix::identity(1));
        let p = predict(&s, &t, &Matrix::zeros(1, 1), 0);
        assert_eq!(p.x.as_slice(), &[5.0]);
        assert_eq!(p.psi[(0, 0)], 25.0);

        // Rotation preserves the trace, so trace grows exactly by trace(Q).
        let w = 0.3f64;
        let rot = Matrix::from_rows(&[[w.cos(), -w.sin()], [w.sin(), w.cos()]]);
        let s = FilterState::new(
            Vector::from_slice(&[1.0, -2.0]),
            Matrix::from_rows(&[[2.0, 0.5], [0.5, 1.0]]),
        );
        let q = Matrix::from_diag(&[0.1, 0.2]);
        let p = predict(&s, &Transition::Linear(rot), &q, 3);
        assert_close(p.psi.trace(), 3.0 + 0.3, 1e-12);
    }

    #[test]
    fn censored_scalar_update_reference_values() {
        // x_pred = -1, Ψ = 1, σ = 1, lower threshold 0, observed clipped 0.
        // Reference numbers from a 40-digit evaluation of the same recursion.
        let up = tobit_update(
            &Vector::from_slice(&[-1.0]),
            &Matrix::from_rows(&[[1.0]]),
            &Matrix::from_rows(&[[1.0]]),
            &Vector::from_slice(&[0.0]),
            &CensorSpec::new(alloc::vec![ChannelCensor::Lower { tau: 0.0 }]),
            &[1.0],
        )
        .unwrap();
        assert_close(up.info.eta[0], -1.0, 1e-15);
        assert_close(up.info.ep_diag[0], 0.15865525393145705, 1e-13);
        assert_close(up.info.y_expect[0], 0.0833154705876863, 1e-13);
        assert_close(up.info.v_diag[0], 0.06839831570452313, 1e-12);
        assert_close(up.info.gain[(0, 0)], 1.6955817468575437, 1e-11);
        assert_close(up.state.x[0], -1.1412681911593274, 1e-11);
        assert_close(up.state.psi[(0, 0)], 0.7309870473907729, 1e-11);
        assert!(!up.info.regularized);
    }

    #[test]
    fn upper_censoring_mirrors_lower() {
        // Reflecting the geometry must reflect the estimate exactly.
        let lower = tobit_update(
            &Vector::from_slice(&[-1.0]),
            &Matrix::from_rows(&[[1.0]]),
            &Matrix::from_rows(&[[1.0]]),
            &Vector::from_slice(&[0.0]),
            &CensorSpec::new(alloc::vec![ChannelCensor::Lower { tau: 0.0 }]),
            &[1.0],
        )
        .unwrap();
        let upper = tobit_update(
            &Vector::from_slice(&[1.0]),
            &Matrix::from_rows(&[[1.0]]),
            &Matrix::from_rows(&[[1.0]]),
            &Vector::from_slice(&[0.0]),
            &CensorSpec::new(alloc::vec![ChannelCensor::Upper { tau: 0.0 }]),
            &[1.0],
        )
        .unwrap();
        assert_close(upper.state.x[0], -lower.state.x[0], 1e-14);
        assert_close(upper.state.psi[(0, 0)], lower.state.psi[(0, 0)], 1e-14);
    }

    #[test]
    fn deep_censoring_leaves_prior_untouched() {
        // Threshold ten sigma above the prediction: the channel is censored
        // with probability ~1-8e-24 and carries no usable information.
        let x_pred = Vector::from_slice(&[0.0, 1.0]);
        let psi_pred = Matrix::from_rows(&[[1.0, 0.2], [0.2, 0.5]]);
        let c = Matrix::from_rows(&[[1.0, 0.0]]);
        let up = tobit_update(
            &x_pred,
            &psi_pred,
            &c,
            &Vector::from_slice(&[10.0]),
            &CensorSpec::new(alloc::vec![ChannelCensor::Lower { tau: 10.0 }]),
            &[1.0],
        )
        .unwrap();
        assert!(up.state.x.sub(&x_pred).norm_inf() < 1e-9);
        assert!(up.state.psi.sub(&psi_pred).norm_inf() < 1e-9);
        assert!(up.info.ep_diag[0] >= EP_CLAMP && up.info.ep_diag[0] < 1.0);
    }

    #[test]
    fn duplicate_noise_free_channels_trigger_regularized_retry() {
        // Two identical noise-free channels make R_yy exactly rank one; the
        // update must survive via the diagonal bump and stay finite.
        let up = tobit_update(
            &Vector::from_slice(&[1.0]),
            &Matrix::from_rows(&[[1.0]]),
            &Matrix::from_rows(&[[1.0], [1.0]]),
            &Vector::from_slice(&[1.5, 1.5]),
            &CensorSpec::none(2),
            &[0.0, 0.0],
        )
        .unwrap();
        assert!(up.info.regularized);
        assert!(up.state.is_finite());
        // Both channels say the state is 1.5.
        assert_close(up.state.x[0], 1.5, 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = Vector::from_slice(&[0.0]);
        let p = Matrix::identity(1);
        let c = Matrix::identity(1);
        let spec = CensorSpec::new(alloc::vec![ChannelCensor::Lower { tau: 0.0 }]);
        assert!(matches!(
            tobit_update(&x, &p, &c, &Vector::from_slice(&[f64::NAN]), &spec, &[1.0]),
            Err(FilterError::NonFinite { .. })
        ));
        assert!(matches!(
            tobit_update(&x, &p, &c, &Vector::from_slice(&[0.0]), &spec, &[0.0]),
            Err(FilterError::InvalidNoise { index: 0 })
        ));
        assert!(matches!(
            tobit_update(&x, &p, &c, &Vector::from_slice(&[0.0, 1.0]), &spec, &[1.0]),
            Err(FilterError::Shape { .. })
        ));
    }

    // ---- censoring-free equivalence with an independent textbook filter ----

    /// Hand-rolled 3-state/2-measurement Kalman step using an explicit 2×2
    /// inverse, sharing no code with the implementation under test.
    #[allow(clippy::too_many_arguments)]
    fn textbook_step(
        x: &mut [f64; 3],
        p: &mut [[f64; 3]; 3],
        a: &[[f64; 3]; 3],
        q: &[[f64; 3]; 3],
        c: &[[f64; 3]; 2],
        r: &[f64; 2],
        y: &[f64; 2],
    ) {
        // Predict.
        let mut xp = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                xp[i] += a[i][j] * x[j];
            }
        }
        let mut ap = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    ap[i][j] += a[i][k] * p[k][j];
                }
            }
        }
        let mut pp = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    pp[i][j] += ap[i][k] * a[j][k];
                }
                pp[i][j] += q[i][j];
            }
        }
        // Innovation covariance S = C·P·Cᵀ + R and its Cramer inverse.
        let mut cp = [[0.0; 3]; 2];
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..3 {
                    cp[i][j] += c[i][k] * pp[k][j];
                }
            }
        }
        let mut s = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..3 {
                    s[i][j] += cp[i][k] * c[j][k];
                }
            }
            s[i][i] += r[i];
        }
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        let sinv = [
            [s[1][1] / det, -s[0][1] / det],
            [-s[1][0] / det, s[0][0] / det],
        ];
        // Gain K = P·Cᵀ·S⁻¹.
        let mut pct = [[0.0; 2]; 3];
        for i in 0..3 {
            for j in 0..2 {
                for k in 0..3 {
                    pct[i][j] += pp[i][k] * c[j][k];
                }
            }
        }
        let mut kg = [[0.0; 2]; 3];
        for i in 0..3 {
            for j in 0..2 {
                for k in 0..2 {
                    kg[i][j] += pct[i][k] * sinv[k][j];
                }
            }
        }
        let mut innov = [0.0; 2];
        for i in 0..2 {
            innov[i] = y[i];
            for j in 0..3 {
                innov[i] -= c[i][j] * xp[j];
            }
        }
        for i in 0..3 {
            x[i] = xp[i] + kg[i][0] * innov[0] + kg[i][1] * innov[1];
        }
        // P = (I − K·C)·P.
        let mut ikc = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                ikc[i][j] = if i == j { 1.0 } else { 0.0 };
                for k in 0..2 {
                    ikc[i][j] -= kg[i][k] * c[k][j];
                }
            }
        }
        let mut pn = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    pn[i][j] += ikc[i][k] * pp[k][j];
                }
            }
        }
        *p = pn;
    }

    #[test]
    fn tobit_with_remote_threshold_equals_textbook_kf() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        // Random stable system: scale A to spectral radius < 1 via its norm.
        let mut a_arr = [[0.0; 3]; 3];
        for row in a_arr.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
        }
        let norm: f64 = a_arr
            .iter()
            .map(|r| r.iter().map(|v: &f64| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        for row in a_arr.iter_mut() {
            for v in row.iter_mut() {
                *v *= 0.9 / norm;
            }
        }
        let c_arr = [[1.0, 0.0, 0.5], [0.0, 1.0, -0.25]];
        let q_diag = [0.02, 0.05, 0.01];
        let r_arr = [0.5, 1.5];

        let a = Matrix::from_fn(3, 3, |i, j| a_arr[i][j]);
        let c = Matrix::from_fn(2, 3, |i, j| c_arr[i][j]);
        let q = Matrix::from_diag(&q_diag);
        let mut q_arr = [[0.0; 3]; 3];
        for i in 0..3 {
            q_arr[i][i] = q_diag[i];
        }

        // Thresholds far below the data: censoring never fires.
        let spec = CensorSpec::new(alloc::vec![
            ChannelCensor::Lower { tau: -1e9 },
            ChannelCensor::Lower { tau: -1e9 },
        ]);
        let sys = DynamicSystem::new(
            Transition::Linear(a.clone()),
            c.clone(),
            ProcessNoise::Constant(q.clone()),
            alloc::vec![r_arr[0], r_arr[1]],
            spec.clone(),
        )
        .unwrap();
        let traj = crate::system::simulate(&sys, &Vector::from_slice(&[0.1, -0.2, 0.3]), 1000, 5)
            .unwrap();
        assert!(traj.iter().all(|s| !s.censored[0] && !s.censored[1]));

        let mut tobit = FilterState::new(Vector::zeros(3), Matrix::identity(3));
        let mut plain = tobit.clone();
        let mut xt = [0.0; 3];
        let mut pt = [[0.0; 3]; 3];
        for i in 0..3 {
            pt[i][i] = 1.0;
        }
        let tr = Transition::Linear(a.clone());
        for step in &traj {
            let pred = predict(&tobit, &tr, &q, step.k - 1);
            tobit = tobit_update(&pred.x, &pred.psi, &c, &step.y_obs, &spec, &r_arr)
                .unwrap()
                .state;
            let predp = predict(&plain, &tr, &q, step.k - 1);
            plain = kf_update(&predp.x, &predp.psi, &c, &step.y_obs, &r_arr)
                .unwrap()
                .state;
            let y = [step.y_obs[0], step.y_obs[1]];
            textbook_step(&mut xt, &mut pt, &a_arr, &q_arr, &c_arr, &r_arr, &y);

            for i in 0..3 {
                assert_close(tobit.x[i], xt[i], 1e-9);
                assert_close(plain.x[i], xt[i], 1e-9);
                for j in 0..3 {
                    assert_close(tobit.psi[(i, j)], pt[i][j], 1e-9);
                }
            }
        }
    }
}
