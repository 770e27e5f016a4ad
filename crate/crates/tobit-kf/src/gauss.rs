//! Scalar Gaussian statistics for censored measurements.
//!
//! Everything the filters need about the standard normal lives here: density,
//! CDF/survival built on `erfc`, the inverse Mills ratio λ(α) = φ(α)/(1−Φ(α)),
//! the variance-shape function ð(α) = λ(α)·(λ(α) − α), and the closed-form
//! mean/variance of a lower-censored Gaussian `y = max(τ, y*)` with
//! `y* ~ N(μ, σ²)`. A seeded Monte Carlo oracle for those moments backs the
//! closed forms in tests.
//!
//! Numerical notes:
//! * λ in the right tail is the textbook cancellation trap: φ and 1−Φ both
//!   underflow near α ≈ 38 while their ratio grows like α. Above
//!   [`MILLS_TAIL_SWITCH`] we therefore evaluate the classical Mills-ratio
//!   continued fraction 1/(α + 1/(α + 2/(α + 3/(…)))) instead of the ratio.
//! * In the deep left tail the true λ drops below the smallest positive
//!   subnormal; we floor the result at `f64::from_bits(1)` so that λ (and ð)
//!   stay strictly positive and monotone across the underflow boundary.

use core::f64::consts::FRAC_1_SQRT_2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// 1/√(2π)
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Above this argument the inverse Mills ratio switches from the `φ/(1−Φ)`
/// ratio to the continued-fraction evaluation.
pub const MILLS_TAIL_SWITCH: f64 = 8.0;

/// Smallest positive value λ is allowed to return; keeps the deep left tail
/// strictly positive after the true value underflows.
const LAMBDA_UNDERFLOW_FLOOR: f64 = f64::from_bits(1); // 5e-324

/// Standard normal density φ(x).
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * libm::exp(-0.5 * x * x)
}

/// Standard normal CDF Φ(x), accurate in the left tail.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal survival function 1 − Φ(x), accurate in the right tail.
#[inline]
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Mills ratio (1−Φ(α))/φ(α) by its continued fraction, valid for α ≳ 3.
///
/// Evaluated bottom-up at fixed depth; for α ≥ 8 the truncation error is far
/// below f64 resolution.
fn mills_ratio_cf(alpha: f64) -> f64 {
    let mut t = 0.0;
    let mut k = 200;
    while k >= 1 {
        t = k as f64 / (alpha + t);
        k -= 1;
    }
    1.0 / (alpha + t)
}

/// Inverse Mills ratio λ(α) = φ(α)/(1−Φ(α)).
///
/// This is the mean of a standard normal truncated below at α, shifted by the
/// truncation point; it satisfies λ(α) > max(0, α) and is increasing. Stays
/// finite and accurate through the right tail (the `α > 8` branch avoids the
/// 0/0 underflow of the naive ratio); in the deep left tail, where the true
/// value is not representable, the smallest positive subnormal is returned.
pub fn inverse_mills(alpha: f64) -> f64 {
    if alpha < MILLS_TAIL_SWITCH {
        let v = std_normal_pdf(alpha) / std_normal_sf(alpha);
        if v > 0.0 {
            v
        } else {
            LAMBDA_UNDERFLOW_FLOOR
        }
    } else {
        1.0 / mills_ratio_cf(alpha)
    }
}

/// Variance-shape function ð(α) = λ(α)·(λ(α) − α), strictly inside (0, 1).
///
/// 1 − ð(α) is the variance of a standard normal truncated below at α; ð → 0
/// as α → −∞ (no truncation) and ð → 1 as α → +∞. In the far right tail the
/// product form loses all precision to cancellation, so the tail branch
/// evaluates the equivalent (1 − α·m)/m² with the Mills ratio m from its
/// continued fraction.
pub fn eth(alpha: f64) -> f64 {
    let v = if alpha < MILLS_TAIL_SWITCH {
        let l = inverse_mills(alpha);
        l * (l - alpha)
    } else {
        let m = mills_ratio_cf(alpha);
        (1.0 - alpha * m) / (m * m)
    };
    v.clamp(LAMBDA_UNDERFLOW_FLOOR, 1.0 - f64::EPSILON)
}

/// Mean of the lower-censored Gaussian `y = max(τ, y*)`, `y* ~ N(μ, σ²)`.
///
/// With the standardized margin η = (μ − τ)/σ this is
/// `τ + σ·(η·Φ(η) + φ(η))`, which degrades gracefully at both extremes:
/// fully censored gives τ, uncensored gives μ.
pub fn censored_mean(mu: f64, sigma: f64, tau: f64) -> f64 {
    debug_assert!(sigma > 0.0);
    let eta = (mu - tau) / sigma;
    tau + sigma * (eta * std_normal_cdf(eta) + std_normal_pdf(eta))
}

/// Variance of the lower-censored Gaussian `y = max(τ, y*)`.
///
/// Decomposed by censoring state (law of total variance): with probability
/// Φ(η) the outcome is the truncated normal (variance σ²·(1 − ð(−η)), mean
/// offset σ·(η + λ(−η)) from τ), otherwise it is the constant τ. Matches
/// direct numerical integration to full precision and the Monte Carlo oracle
/// to sampling error.
pub fn censored_variance(mu: f64, sigma: f64, tau: f64) -> f64 {
    debug_assert!(sigma > 0.0);
    let eta = (mu - tau) / sigma;
    sigma * sigma * censored_variance_shape(std_normal_cdf(eta), std_normal_sf(eta), eta)
}

/// Dimensionless censored variance `Var[y]/σ²` with the (non-)censoring
/// probabilities supplied by the caller.
///
/// The filter passes a clamped Φ here so its update matrices stay invertible;
/// passing exact Φ(η) and 1 − Φ(η) recovers the exact censored variance. The
/// survival probability `q` multiplies the (η + λ(−η))² term and must be the
/// *unclamped* tail value: it is what extinguishes that quadratically growing
/// term when the channel is effectively uncensored.
pub fn censored_variance_shape(phi: f64, q: f64, eta: f64) -> f64 {
    let shift = eta + inverse_mills(-eta); // truncated mean offset from τ, in σ units
    phi * (1.0 - eth(-eta)) + phi * q * shift * shift
}

/// Seeded Monte Carlo estimate of the censored-Gaussian moments.
#[derive(Clone, Copy, Debug)]
pub struct OracleMoments {
    pub mean: f64,
    pub var: f64,
    /// Standard error of `mean`.
    pub mean_se: f64,
    /// Standard error of `var` (via the fourth sample moment).
    pub var_se: f64,
}

/// Draw `n_samples` of `max(τ, μ + σ·z)` with ChaCha8(seed) and return sample
/// mean and variance with their standard errors.
///
/// This is the independent oracle the closed forms above are tested against.
pub fn censored_moments_oracle(
    mu: f64,
    sigma: f64,
    tau: f64,
    n_samples: u64,
    seed: u64,
) -> OracleMoments {
    assert!(n_samples >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_samples as f64;

    let mut sum = 0.0;
    let mut samples = alloc::vec::Vec::with_capacity(n_samples as usize);
    for _ in 0..n_samples {
        let z: f64 = rng.sample(StandardNormal);
        let y = (mu + sigma * z).max(tau);
        sum += y;
        samples.push(y);
    }
    let mean = sum / n;

    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for y in &samples {
        let d = y - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;

    let var = m2 * n / (n - 1.0);
    OracleMoments {
        mean,
        var,
        mean_se: libm::sqrt(var / n),
        var_se: libm::sqrt((m4 - m2 * m2).max(0.0) / n),
    }
}
