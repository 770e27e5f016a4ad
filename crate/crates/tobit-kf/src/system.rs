//! Discrete-time dynamic systems with censored measurement channels, and a
//! seeded simulator for generating ground-truth trajectories.
//!
//! A [`DynamicSystem`] couples a (possibly nonlinear) state transition with a
//! linear measurement map `y* = C·x + v` whose channels may be clipped at a
//! threshold before the filter ever sees them: a lower-censored channel
//! reports `max(τ, y*)`, an upper-censored one `min(τ, y*)`. The simulator
//! records both the latent and the clipped measurement along with per-channel
//! censoring flags, so downstream code can score estimators against the truth.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::{cholesky_psd, Matrix, MatrixError, Vector};

/// Per-channel censoring behaviour.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChannelCensor {
    /// Channel is observed as-is.
    None,
    /// Channel reports `max(tau, y*)`; values at or below `tau` are censored.
    Lower { tau: f64 },
    /// Channel reports `min(tau, y*)`; values at or above `tau` are censored.
    Upper { tau: f64 },
}

/// Censoring description for every measurement channel.
#[derive(Clone, Debug, PartialEq)]
pub struct CensorSpec {
    channels: Vec<ChannelCensor>,
}

impl CensorSpec {
    pub fn new(channels: Vec<ChannelCensor>) -> Self {
        CensorSpec { channels }
    }

    /// All channels observed without censoring.
    pub fn none(m: usize) -> Self {
        CensorSpec {
            channels: alloc::vec![ChannelCensor::None; m],
        }
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn channel(&self, i: usize) -> ChannelCensor {
        self.channels[i]
    }

    pub fn iter(&self) -> core::slice::Iter<'_, ChannelCensor> {
        self.channels.iter()
    }

    pub fn is_all_none(&self) -> bool {
        self.channels.iter().all(|c| matches!(c, ChannelCensor::None))
    }

    /// The same channels with censoring stripped — what a censoring-blind
    /// filter believes about the world.
    pub fn without_censoring(&self) -> CensorSpec {
        CensorSpec::none(self.len())
    }
}

/// Model-level errors: inconsistent shapes or invalid noise descriptions.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelError {
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// Measurement noise variance entry is negative or non-finite.
    InvalidMeasurementNoise { index: usize },
    Matrix(MatrixError),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::DimensionMismatch { what, expected, got } => {
                write!(f, "{what}: expected dimension {expected}, got {got}")
            }
            ModelError::InvalidMeasurementNoise { index } => {
                write!(f, "measurement noise variance {index} must be finite and >= 0")
            }
            ModelError::Matrix(e) => write!(f, "{e}"),
        }
    }
}

impl From<MatrixError> for ModelError {
    fn from(e: MatrixError) -> Self {
        ModelError::Matrix(e)
    }
}

/// A nonlinear state transition together with its Jacobian.
pub trait TransitionModel: Send + Sync {
    /// Propagate the state one step: `x_{k+1} = f(x_k, k)` (noise-free part).
    fn propagate(&self, x: &Vector, k: usize) -> Vector;
    /// Jacobian `∂f/∂x` evaluated at `(x, k)`.
    fn jacobian(&self, x: &Vector, k: usize) -> Matrix;
}

/// State transition: either a constant matrix (its own Jacobian) or a
/// nonlinear model with an explicit Jacobian.
pub enum Transition {
    Linear(Matrix),
    Nonlinear(Box<dyn TransitionModel>),
}

impl Transition {
    pub fn propagate(&self, x: &Vector, k: usize) -> Vector {
        match self {
            Transition::Linear(a) => a.mul_vec(x),
            Transition::Nonlinear(m) => m.propagate(x, k),
        }
    }

    pub fn jacobian(&self, x: &Vector, k: usize) -> Matrix {
        match self {
            Transition::Linear(a) => a.clone(),
            Transition::Nonlinear(m) => m.jacobian(x, k),
        }
    }
}

impl fmt::Debug for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transition::Linear(a) => f.debug_tuple("Linear").field(a).finish(),
            Transition::Nonlinear(_) => f.write_str("Nonlinear(..)"),
        }
    }
}

/// Process-noise covariance, possibly varying along the trajectory.
pub enum ProcessNoise {
    Constant(Matrix),
    /// Covariance evaluated at the current state and step index.
    StateDependent(Box<dyn Fn(&Vector, usize) -> Matrix + Send + Sync>),
}

impl ProcessNoise {
    pub fn at(&self, x: &Vector, k: usize) -> Matrix {
        match self {
            ProcessNoise::Constant(q) => q.clone(),
            ProcessNoise::StateDependent(f) => f(x, k),
        }
    }
}

impl fmt::Debug for ProcessNoise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessNoise::Constant(q) => f.debug_tuple("Constant").field(q).finish(),
            ProcessNoise::StateDependent(_) => f.write_str("StateDependent(..)"),
        }
    }
}

/// A censored-measurement state-space model:
///
/// ```text
/// x_{k+1} = f(x_k, k) + w_k,         w_k ~ N(0, Q_k)
/// y*_k    = C·x_k + v_k,             v_k ~ N(0, R)   (R diagonal)
/// y_k     = clip(y*_k)               per-channel censoring
/// ```
#[derive(Debug)]
pub struct DynamicSystem {
    n: usize,
    m: usize,
    pub transition: Transition,
    /// Measurement matrix `C` (m×n).
    pub meas: Matrix,
    process_noise: ProcessNoise,
    meas_noise_diag: Vec<f64>,
    pub censor: CensorSpec,
}

impl DynamicSystem {
    /// Build and validate a system. The measurement noise is given as the
    /// diagonal of `R` (channels are independent); entries may be zero for
    /// noise-free channels.
    pub fn new(
        transition: Transition,
        meas: Matrix,
        process_noise: ProcessNoise,
        meas_noise_diag: Vec<f64>,
        censor: CensorSpec,
    ) -> Result<Self, ModelError> {
        let m = meas.rows();
        let n = meas.cols();
        if let Transition::Linear(a) = &transition {
            if a.shape() != (n, n) {
                return Err(ModelError::DimensionMismatch {
                    what: "transition matrix rows",
                    expected: n,
                    got: a.rows(),
                });
            }
        }
        if meas_noise_diag.len() != m {
            return Err(ModelError::DimensionMismatch {
                what: "measurement noise diagonal",
                expected: m,
                got: meas_noise_diag.len(),
            });
        }
        if censor.len() != m {
            return Err(ModelError::DimensionMismatch {
                what: "censor channels",
                expected: m,
                got: censor.len(),
            });
        }
        for (i, r) in meas_noise_diag.iter().enumerate() {
            if !(r.is_finite() && *r >= 0.0) {
                return Err(ModelError::InvalidMeasurementNoise { index: i });
            }
        }
        if let ProcessNoise::Constant(q) = &process_noise {
            if q.shape() != (n, n) {
                return Err(ModelError::DimensionMismatch {
                    what: "process noise rows",
                    expected: n,
                    got: q.rows(),
                });
            }
            cholesky_psd(q)?; // reject indefinite Q up front
        }
        Ok(DynamicSystem {
            n,
            m,
            transition,
            meas,
            process_noise,
            meas_noise_diag,
            censor,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn meas_dim(&self) -> usize {
        self.m
    }

    /// True process-noise covariance at `(x, k)`.
    pub fn true_q(&self, x: &Vector, k: usize) -> Matrix {
        self.process_noise.at(x, k)
    }

    pub fn true_r_diag(&self) -> &[f64] {
        &self.meas_noise_diag
    }

    pub fn true_r(&self) -> Matrix {
        Matrix::from_diag(&self.meas_noise_diag)
    }
}

/// Apply per-channel censoring to a latent measurement.
///
/// Returns the observed vector and a flag per channel; boundary values count
/// as censored (an observation exactly at the threshold is indistinguishable
/// from a clipped one).
pub fn censor(y_latent: &Vector, spec: &CensorSpec) -> Result<(Vector, Vec<bool>), ModelError> {
    if y_latent.len() != spec.len() {
        return Err(ModelError::DimensionMismatch {
            what: "censor channels",
            expected: spec.len(),
            got: y_latent.len(),
        });
    }
    let mut y = Vector::zeros(spec.len());
    let mut flags = Vec::with_capacity(spec.len());
    for (i, c) in spec.iter().enumerate() {
        let v = y_latent[i];
        let (obs, hit) = match *c {
            ChannelCensor::None => (v, false),
            ChannelCensor::Lower { tau } => (v.max(tau), v <= tau),
            ChannelCensor::Upper { tau } => (v.min(tau), v >= tau),
        };
        y[i] = obs;
        flags.push(hit);
    }
    Ok((y, flags))
}

/// One recorded simulation step.
#[derive(Clone, Debug, PartialEq)]
pub struct SimStep {
    /// Step index, starting at 1 (the initial state `x0` is not recorded).
    pub k: usize,
    pub x_true: Vector,
    /// Pre-censoring measurement `C·x + v`.
    pub y_latent: Vector,
    /// What the filters observe.
    pub y_obs: Vector,
    pub censored: Vec<bool>,
}

pub type Trajectory = Vec<SimStep>;

/// Simulate `steps` steps from `x0` with the default stream (see
/// [`simulate_stream`] for the replicate rule).
pub fn simulate(
    system: &DynamicSystem,
    x0: &Vector,
    steps: usize,
    seed: u64,
) -> Result<Trajectory, ModelError> {
    simulate_stream(system, x0, steps, seed, 0)
}

/// Simulate with an explicit ChaCha stream.
///
/// Randomness is ChaCha8 keyed by `seed`, with `stream` selecting an
/// independent substream; replicate `i` of an experiment runs on stream `i`
/// of the shared base seed. Per step the generator is consumed in a fixed
/// order — `n` process-noise draws, then `m` measurement-noise draws — so
/// trajectories are bit-reproducible across platforms.
pub fn simulate_stream(
    system: &DynamicSystem,
    x0: &Vector,
    steps: usize,
    seed: u64,
    stream: u64,
) -> Result<Trajectory, ModelError> {
    if x0.len() != system.state_dim() {
        return Err(ModelError::DimensionMismatch {
            what: "initial state",
            expected: system.state_dim(),
            got: x0.len(),
        });
    }
    let n = system.state_dim();
    let m = system.meas_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);

    let mut x = x0.clone();
    let mut out = Vec::with_capacity(steps);
    for k in 1..=steps {
        let q = system.true_q(&x, k - 1);
        let l = cholesky_psd(&q)?;
        let mut z = Vector::zeros(n);
        for i in 0..n {
            z[i] = rng.sample(StandardNormal);
        }
        let w = l.mul_vec(&z);
        x = system.transition.propagate(&x, k - 1).add(&w);

        let mut y_latent = system.meas.mul_vec(&x);
        for i in 0..m {
            let v: f64 = rng.sample(StandardNormal);
            y_latent[i] += libm::sqrt(system.meas_noise_diag[i]) * v;
        }
        let (y_obs, censored) = censor(&y_latent, &system.censor)?;
        out.push(SimStep {
            k,
            x_true: x.clone(),
            y_latent,
            y_obs,
            censored,
        });
    }
    Ok(out)
}
