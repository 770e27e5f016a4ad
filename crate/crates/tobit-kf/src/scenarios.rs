//! Benchmark configurations: three censored-measurement estimation problems
//! with fixed, reproducible parameters.
//!
//! * `constant-1d` — a constant scalar state one standard deviation below a
//!   lower detection limit, so ≈84% of measurements clip.
//! * `vlc` — a differential-drive robot positioned by ceiling light under a
//!   unit-square roof; both position channels clip once the straight 45°
//!   trajectory leaves the roofed area, while the gyro heading channel never
//!   censors.
//! * `attitude` — a slowly rotating two-state oscillator whose single
//!   measurement channel clips below zero, so the observable half of each
//!   oscillation must carry the other half.
//!
//! Each builder is pure: two calls produce identical configurations.

use alloc::vec::Vec;

use crate::matrix::{Matrix, Vector};
use crate::system::{
    CensorSpec, ChannelCensor, DynamicSystem, ModelError, ProcessNoise, Transition,
    TransitionModel,
};

/// Fading factor shared by every scenario's adaptive estimators.
pub const DEFAULT_GAMMA: f64 = 0.33;

/// Innovation window length shared by every scenario.
pub const DEFAULT_WINDOW: usize = 30;

/// A fully specified estimation experiment: the generative system plus every
/// constant a run needs (initial states, priors, horizon).
#[derive(Debug)]
pub struct ScenarioConfig {
    pub name: &'static str,
    pub system: DynamicSystem,
    /// Ground-truth initial state fed to the simulator.
    pub x0_true: Vector,
    /// Initial state estimate handed to every filter.
    pub x0_filter: Vector,
    /// Initial estimate covariance.
    pub psi0: Matrix,
    /// Initial process-noise guess for the adaptive filters.
    pub q0_hat: Matrix,
    /// Initial measurement-noise guess (diagonal) for the adaptive filters.
    pub r0_hat: Vec<f64>,
    /// Fading factor for the adaptive estimators.
    pub gamma: f64,
    /// Innovation window length for the adaptive estimators.
    pub window_n: usize,
    /// Trajectory length in steps.
    pub steps: usize,
    /// Steps excluded from error metrics while the filters settle.
    pub burn_in: usize,
}

impl ScenarioConfig {
    /// Check mutual consistency of all dimensions and ranges.
    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.system.state_dim();
        let m = self.system.meas_dim();
        let checks: [(&'static str, usize, usize); 6] = [
            ("true initial state", n, self.x0_true.len()),
            ("filter initial state", n, self.x0_filter.len()),
            ("initial covariance", n, self.psi0.rows()),
            ("process noise guess", n, self.q0_hat.rows()),
            ("measurement noise guess", m, self.r0_hat.len()),
            ("burn-in bound", 1, usize::from(self.burn_in < self.steps)),
        ];
        for (what, expected, got) in checks {
            if expected != got {
                return Err(ModelError::DimensionMismatch {
                    what,
                    expected,
                    got,
                });
            }
        }
        for (i, r) in self.r0_hat.iter().enumerate() {
            if !(r.is_finite() && *r > 0.0) {
                return Err(ModelError::InvalidMeasurementNoise { index: i });
            }
        }
        Ok(())
    }
}

/// Constant scalar state behind a lower detection limit.
///
/// The truth sits at −1 with unit measurement noise and a clip at 0, so the
/// latent measurement censors with probability Φ(1) ≈ 0.841. The filter
/// starts far away (at 5, variance 25) and must pull the estimate below the
/// limit from mostly clipped data.
pub fn constant_1d() -> ScenarioConfig {
    let system = DynamicSystem::new(
        Transition::Linear(Matrix::identity(1)),
        Matrix::identity(1),
        ProcessNoise::Constant(Matrix::zeros(1, 1)),
        alloc::vec![1.0],
        CensorSpec::new(alloc::vec![ChannelCensor::Lower { tau: 0.0 }]),
    )
    .expect("fixed configuration is valid");
    ScenarioConfig {
        name: "constant-1d",
        system,
        x0_true: Vector::from_slice(&[-1.0]),
        x0_filter: Vector::from_slice(&[5.0]),
        psi0: Matrix::from_rows(&[[25.0]]),
        q0_hat: Matrix::identity(1),
        r0_hat: alloc::vec![1.0],
        gamma: DEFAULT_GAMMA,
        window_n: DEFAULT_WINDOW,
        steps: 500,
        burn_in: 100,
    }
}

/// Physical constants of the roof-positioning robot.
#[derive(Clone, Copy, Debug)]
pub struct VlcParams {
    /// Wheel radius `R_w` in meters.
    pub wheel_radius: f64,
    /// Distance between the wheels `d_w` in meters.
    pub wheel_distance: f64,
    /// Filter timestep `T` in seconds.
    pub timestep: f64,
    /// Wheel–floor interaction coefficient scaling the slip noise.
    pub wheel_slip: f64,
    /// Position measurement noise (standard deviation, meters).
    pub sigma_vlc: f64,
    /// Heading measurement noise (standard deviation, radians).
    pub sigma_gyro: f64,
    /// Initial heading in radians.
    pub theta0: f64,
    /// Per-step heading increment in radians (0 = straight line).
    pub turn_rate: f64,
    /// Forward speed in m/s.
    pub speed: f64,
    /// Side length of the axis-aligned roofed square whose corner the robot
    /// starts from; position readings clip at this boundary.
    pub roof_side: f64,
}

impl Default for VlcParams {
    fn default() -> Self {
        VlcParams {
            wheel_radius: 0.05,
            wheel_distance: 0.30,
            timestep: 0.05,
            wheel_slip: 3e-4,
            sigma_vlc: 0.06,
            sigma_gyro: 3.0 * core::f64::consts::PI / 180.0,
            theta0: core::f64::consts::FRAC_PI_4,
            turn_rate: 0.0,
            speed: 1.0,
            roof_side: 1.0,
        }
    }
}

impl VlcParams {
    /// First step at which the straight trajectory from the roof corner has
    /// left the square: the diagonal has length `√2·side`, traversed at
    /// `v·T` per step.
    pub fn roof_exit_step(&self) -> usize {
        let diagonal = libm::sqrt(2.0) * self.roof_side;
        libm::ceil(diagonal / (self.speed * self.timestep)) as usize
    }

    /// Jacobian of one motion step with respect to the two wheel-angle
    /// increments, evaluated at heading `theta`: forward slip moves the
    /// robot along its heading (`R_w/2` per wheel), differential slip turns
    /// it (`±R_w/d_w`).
    pub fn wheel_noise_jacobian(&self, theta: f64) -> Matrix {
        let half = self.wheel_radius / 2.0;
        let turn = self.wheel_radius / self.wheel_distance;
        Matrix::from_rows(&[
            [half * libm::cos(theta), half * libm::cos(theta)],
            [half * libm::sin(theta), half * libm::sin(theta)],
            [turn, -turn],
        ])
    }

    /// Process noise at heading `theta`: `v·T·k_w · W·Wᵀ` with `W` the wheel
    /// noise Jacobian. Gram form, so symmetric PSD by construction.
    pub fn process_noise_at(&self, theta: f64) -> Matrix {
        let w = self.wheel_noise_jacobian(theta);
        let scale = self.speed * self.timestep * self.wheel_slip;
        (&w * &w.transpose()).scaled(scale)
    }
}

/// Unicycle motion: advance `v·T` along the mid-step heading, then turn.
#[derive(Clone, Copy, Debug)]
pub struct DifferentialDrive {
    pub speed: f64,
    pub timestep: f64,
    pub turn_rate: f64,
}

impl TransitionModel for DifferentialDrive {
    fn propagate(&self, x: &Vector, _k: usize) -> Vector {
        let heading = x[2] + self.turn_rate / 2.0;
        let step = self.speed * self.timestep;
        Vector::from_slice(&[
            x[0] + step * libm::cos(heading),
            x[1] + step * libm::sin(heading),
            x[2] + self.turn_rate,
        ])
    }

    fn jacobian(&self, x: &Vector, _k: usize) -> Matrix {
        let heading = x[2] + self.turn_rate / 2.0;
        let step = self.speed * self.timestep;
        Matrix::from_rows(&[
            [1.0, 0.0, -step * libm::sin(heading)],
            [0.0, 1.0, step * libm::cos(heading)],
            [0.0, 0.0, 1.0],
        ])
    }
}

/// Roof-positioning robot with the default physical constants.
///
/// State `(x, y, θ)`; the robot starts at the roofed square's corner heading
/// along the diagonal, so both position channels clip at the far boundary
/// (`τ = 1` m, upper) from step 29 on while the gyro channel stays clean.
/// The filters start at the true pose with small priors.
pub fn vlc() -> ScenarioConfig {
    let p = VlcParams::default();
    let drive = DifferentialDrive {
        speed: p.speed,
        timestep: p.timestep,
        turn_rate: p.turn_rate,
    };
    let noise = move |x: &Vector, _k: usize| p.process_noise_at(x[2]);
    let system = DynamicSystem::new(
        Transition::Nonlinear(alloc::boxed::Box::new(drive)),
        Matrix::identity(3),
        ProcessNoise::StateDependent(alloc::boxed::Box::new(noise)),
        alloc::vec![
            p.sigma_vlc * p.sigma_vlc,
            p.sigma_vlc * p.sigma_vlc,
            p.sigma_gyro * p.sigma_gyro,
        ],
        CensorSpec::new(alloc::vec![
            ChannelCensor::Upper { tau: p.roof_side },
            ChannelCensor::Upper { tau: p.roof_side },
            ChannelCensor::None,
        ]),
    )
    .expect("fixed configuration is valid");
    let x0 = Vector::from_slice(&[0.0, 0.0, p.theta0]);
    ScenarioConfig {
        name: "vlc",
        system,
        x0_true: x0.clone(),
        x0_filter: x0,
        psi0: Matrix::identity(3).scaled(0.01),
        q0_hat: Matrix::identity(3).scaled(1e-4),
        r0_hat: alloc::vec![0.01, 0.01, 0.01],
        gamma: DEFAULT_GAMMA,
        window_n: DEFAULT_WINDOW,
        steps: 200,
        burn_in: VlcParams::default().roof_exit_step(),
    }
}

/// Constants of the rotating-oscillator problem.
#[derive(Clone, Copy, Debug)]
pub struct AttitudeParams {
    /// Rotation per step in radians.
    pub omega: f64,
    /// Spectral radius of the transition (1 = neutrally stable).
    pub alpha: f64,
    /// Lower clip threshold on the single measurement channel.
    pub tau: f64,
    /// True process noise level (isotropic).
    pub q_level: f64,
    /// True measurement noise variance.
    pub sigma_sq: f64,
}

impl Default for AttitudeParams {
    fn default() -> Self {
        AttitudeParams {
            omega: 0.005 * core::f64::consts::TAU,
            alpha: 1.0,
            tau: 0.0,
            q_level: 0.0025,
            sigma_sq: 1.0,
        }
    }
}

impl AttitudeParams {
    /// The scaled rotation matrix advancing the oscillator one step.
    pub fn transition_matrix(&self) -> Matrix {
        let (s, c) = (libm::sin(self.omega), libm::cos(self.omega));
        Matrix::from_rows(&[[c, -s], [s, c]]).scaled(self.alpha)
    }

    /// Steps per full oscillation.
    pub fn period(&self) -> f64 {
        core::f64::consts::TAU / self.omega
    }
}

/// Rotating two-state oscillator observed through one clipped channel.
///
/// The state starts at `[5, 0]` and rotates with period 200 steps, so its
/// first component spends half of every period below the clip at 0; the
/// horizon covers three full periods.
pub fn attitude() -> ScenarioConfig {
    let p = AttitudeParams::default();
    let system = DynamicSystem::new(
        Transition::Linear(p.transition_matrix()),
        Matrix::from_rows(&[[1.0, 0.0]]),
        ProcessNoise::Constant(Matrix::identity(2).scaled(p.q_level)),
        alloc::vec![p.sigma_sq],
        CensorSpec::new(alloc::vec![ChannelCensor::Lower { tau: p.tau }]),
    )
    .expect("fixed configuration is valid");
    let x0 = Vector::from_slice(&[5.0, 0.0]);
    ScenarioConfig {
        name: "attitude",
        system,
        x0_true: x0.clone(),
        x0_filter: x0,
        psi0: Matrix::identity(2),
        q0_hat: Matrix::identity(2),
        r0_hat: alloc::vec![1.0],
        gamma: DEFAULT_GAMMA,
        window_n: DEFAULT_WINDOW,
        steps: 600,
        burn_in: 100,
    }
}

/// Names accepted by [`by_name`], in presentation order.
pub const NAMES: [&str; 3] = ["constant-1d", "vlc", "attitude"];

/// Look a scenario up by its command-line name.
pub fn by_name(name: &str) -> Option<ScenarioConfig> {
    match name {
        "constant-1d" => Some(constant_1d()),
        "vlc" => Some(vlc()),
        "attitude" => Some(attitude()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::min_eigenvalue;
    use crate::system::simulate;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn all_configs_validate_and_resolve_by_name() {
        for name in NAMES {
            let cfg = by_name(name).expect("listed name resolves");
            assert_eq!(cfg.name, name);
            cfg.validate().expect("fixed config is consistent");
            assert!(cfg.burn_in < cfg.steps);
            assert_eq!(cfg.gamma, 0.33);
            assert_eq!(cfg.window_n, 30);
        }
        assert!(by_name("unknown").is_none());
        assert!(by_name("").is_none());
    }

    #[test]
    fn constant_scenario_censors_most_measurements() {
        let cfg = constant_1d();
        assert_eq!(cfg.system.state_dim(), 1);
        assert_eq!(cfg.x0_true[0], -1.0);
        assert_eq!(cfg.psi0[(0, 0)], 25.0);
        // Truth one standard deviation below the limit: the latent
        // measurement is N(-1, 1), clipped below 0 with probability Φ(1).
        let traj = simulate(&cfg.system, &cfg.x0_true, 10_000, 5).unwrap();
        let frac =
            traj.iter().filter(|s| s.censored[0]).count() as f64 / traj.len() as f64;
        assert_close(frac, 0.8413, 0.02);
        // The state itself never moves.
        assert!(traj.iter().all(|s| s.x_true[0] == -1.0));
    }

    #[test]
    fn vlc_process_noise_matches_closed_form() {
        let p = VlcParams::default();
        // At 45° heading cos² = sin² = cos·sin = 1/2, so the three position
        // entries coincide: v·T·k_w · R_w²/4 = 9.375e-9. The heading entry
        // is v·T·k_w · 2R_w²/d_w² and the cross terms vanish.
        let q = p.process_noise_at(core::f64::consts::FRAC_PI_4);
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            assert_close(q[(i, j)], 9.375e-9, 1e-22);
        }
        assert_close(q[(2, 2)], 8.333_333_333_333_333e-7, 1e-20);
        assert_eq!(q[(0, 2)], 0.0);
        assert_eq!(q[(1, 2)], 0.0);
        assert!(min_eigenvalue(&q) >= -1e-24);
        assert_eq!(q, q.transpose());
    }

    #[test]
    fn vlc_drive_jacobian_matches_finite_differences() {
        let drive = DifferentialDrive {
            speed: 1.0,
            timestep: 0.05,
            turn_rate: 0.0,
        };
        let x = Vector::from_slice(&[0.3, -0.2, 0.7]);
        let jac = drive.jacobian(&x, 0);
        let h = 1e-7;
        for j in 0..3 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fp = drive.propagate(&xp, 0);
            let fm = drive.propagate(&xm, 0);
            for i in 0..3 {
                assert_close(jac[(i, j)], (fp[i] - fm[i]) / (2.0 * h), 1e-6);
            }
        }
    }

    #[test]
    fn vlc_trajectory_leaves_roof_at_the_predicted_step() {
        let cfg = vlc();
        let exit = VlcParams::default().roof_exit_step();
        assert_eq!(exit, 29);
        assert_eq!(cfg.burn_in, 29);
        let traj = simulate(&cfg.system, &cfg.x0_true, cfg.steps, 3).unwrap();
        // Slip noise is tiny (σ ≈ 1e-4 per step), so the position crosses
        // the boundary on schedule.
        let first_out = traj
            .iter()
            .find(|s| s.x_true[0] > 1.0 && s.x_true[1] > 1.0)
            .map(|s| s.k)
            .unwrap();
        assert_eq!(first_out, exit);
        // Deep under the roof nothing censors (the boundary is ≥ 4.9σ away
        // for the first 20 steps; only near the edge can noise clip early);
        // after the exit position channels mostly clip while the gyro
        // channel never does.
        assert!(traj[..20].iter().all(|s| !s.censored[0] && !s.censored[1]));
        let after: Vec<_> = traj.iter().filter(|s| s.k > exit).collect();
        let clipped = after
            .iter()
            .map(|s| usize::from(s.censored[0]) + usize::from(s.censored[1]))
            .sum::<usize>() as f64
            / (2.0 * after.len() as f64);
        assert!(clipped > 0.8, "position clip fraction {clipped}");
        assert!(traj.iter().all(|s| !s.censored[2]));
    }

    #[test]
    fn attitude_rotation_is_norm_preserving_with_period_200() {
        let p = AttitudeParams::default();
        assert_close(p.period(), 200.0, 1e-12);
        let a = p.transition_matrix();
        let x0 = Vector::from_slice(&[5.0, 0.0]);
        let mut x = x0.clone();
        for _ in 0..200 {
            x = a.mul_vec(&x);
            let norm = libm::sqrt(x[0] * x[0] + x[1] * x[1]);
            assert_close(norm, 5.0, 1e-12);
        }
        // A^200 is a full turn.
        assert_close(x[0], x0[0], 1e-10);
        assert_close(x[1], x0[1], 1e-10);

        let cfg = attitude();
        assert_eq!(cfg.system.meas_dim(), 1);
        assert_eq!(cfg.steps, 600);
        // The measured component is negative (hence clipped in expectation)
        // for half of each period.
        let traj = simulate(&cfg.system, &cfg.x0_true, cfg.steps, 2).unwrap();
        let below = traj.iter().filter(|s| s.x_true[0] < 0.0).count() as f64
            / cfg.steps as f64;
        assert_close(below, 0.5, 0.05);
    }
}
