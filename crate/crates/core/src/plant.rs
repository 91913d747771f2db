//! Plant surrogate: rigid body with viscous friction, inertia uncertainty and
//! a flexible mode between the body and the attitude sensor, plus the gyro and
//! star-tracker error models.
//!
//! Continuous states `[θ, ω, q_s, q̇_s]`, inputs `[torque (N·m), d_exo (rad/s²)]`.
//! The gyro reads the rigid rate `ω`; the attitude sensor reads `q_s`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{EmcError, Result};
use crate::statespace::{mat, ContinuousLti, DiscreteLti, Mat};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignModelParams {
    /// Nominal inertia, kg·m².
    pub j0: f64,
    /// Fractional inertia error.
    pub d_j: f64,
    /// Flexible-mode frequency, rad/s.
    pub omega_f: f64,
    pub zeta_f: f64,
    /// Friction time constant, s.
    pub tau: f64,
}

impl Default for DesignModelParams {
    fn default() -> Self {
        Self::nominal()
    }
}

impl DesignModelParams {
    pub fn nominal() -> Self {
        Self { j0: 1200.0, d_j: 0.0, omega_f: 10.0, zeta_f: 0.01, tau: 60.0 }
    }

    /// Corner of the uncertainty box with the least inertia, the lowest and
    /// least damped flexible mode, and the slowest friction.
    pub fn worst_corner() -> Self {
        Self { j0: 1200.0, d_j: -0.2, omega_f: 6.0, zeta_f: 0.002, tau: 60.0 }
    }

    pub fn inertia(&self) -> f64 {
        self.j0 * (1.0 + self.d_j)
    }

    /// Checks physical sanity and, unless `allow_outside_envelope`, the
    /// uncertainty envelope `|∂J| ≤ 0.2, ω_f ≥ 6, ζ_f ≥ 0.002, 0 < τ ≤ 60`.
    pub fn validate(&self, allow_outside_envelope: bool) -> Result<()> {
        let all_finite = [self.j0, self.d_j, self.omega_f, self.zeta_f, self.tau].iter().all(|v| v.is_finite());
        if !all_finite || self.j0 <= 0.0 || self.d_j <= -1.0 || self.omega_f <= 0.0 || self.zeta_f < 0.0 || self.tau <= 0.0 {
            return Err(EmcError::InvalidParameter(format!("non-physical plant parameters {self:?}")));
        }
        if !allow_outside_envelope {
            let tol = 1e-12;
            if self.d_j.abs() > 0.2 + tol || self.omega_f < 6.0 - tol || self.zeta_f < 0.002 - tol || self.tau > 60.0 + tol {
                return Err(EmcError::InvalidParameter(format!(
                    "plant parameters outside the uncertainty envelope: {self:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Uniform sampling box for Monte Carlo campaigns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRanges {
    pub j0: f64,
    pub d_j: [f64; 2],
    pub omega_f: [f64; 2],
    pub zeta_f: [f64; 2],
    pub tau: [f64; 2],
}

impl ParamRanges {
    pub fn uncertainty_box() -> Self {
        Self {
            j0: 1200.0,
            d_j: [-0.2, 0.2],
            omega_f: [6.0, 20.0],
            zeta_f: [0.002, 0.02],
            tau: [30.0, 60.0],
        }
    }

    pub fn point(p: &DesignModelParams) -> Self {
        Self {
            j0: p.j0,
            d_j: [p.d_j; 2],
            omega_f: [p.omega_f; 2],
            zeta_f: [p.zeta_f; 2],
            tau: [p.tau; 2],
        }
    }

    /// All 16 corners of the box.
    pub fn corners(&self) -> Vec<DesignModelParams> {
        let mut out = Vec::with_capacity(16);
        for mask in 0..16u32 {
            let pick = |r: [f64; 2], bit: u32| r[((mask >> bit) & 1) as usize];
            out.push(DesignModelParams {
                j0: self.j0,
                d_j: pick(self.d_j, 0),
                omega_f: pick(self.omega_f, 1),
                zeta_f: pick(self.zeta_f, 2),
                tau: pick(self.tau, 3),
            });
        }
        out
    }
}

fn draw(rng: &mut impl Rng, r: [f64; 2], what: &str) -> Result<f64> {
    if r[0].is_nan() || r[1].is_nan() || r[0] > r[1] {
        return Err(EmcError::InvalidParameter(format!("empty {what} range {r:?}")));
    }
    Ok(if r[0] == r[1] { r[0] } else { rng.random_range(r[0]..=r[1]) })
}

pub fn sample_params(rng: &mut impl Rng, ranges: &ParamRanges) -> Result<DesignModelParams> {
    let p = DesignModelParams {
        j0: ranges.j0,
        d_j: draw(rng, ranges.d_j, "inertia error")?,
        omega_f: draw(rng, ranges.omega_f, "flexible frequency")?,
        zeta_f: draw(rng, ranges.zeta_f, "flexible damping")?,
        tau: draw(rng, ranges.tau, "friction time constant")?,
    };
    p.validate(false)?;
    Ok(p)
}

/// Continuous realization; outputs `[q_s, ω]`, inputs `[torque, d_exo]`.
pub fn continuous_plant(p: &DesignModelParams) -> Result<ContinuousLti> {
    p.validate(true)?;
    let wf = p.omega_f;
    let a = mat(&[
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, -1.0 / p.tau, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
        &[wf * wf, 0.0, -wf * wf, -2.0 * p.zeta_f * wf],
    ]);
    let b = mat(&[&[0.0, 0.0], &[1.0 / p.inertia(), 1.0], &[0.0, 0.0], &[0.0, 0.0]]);
    let c = mat(&[&[0.0, 0.0, 1.0, 0.0], &[0.0, 1.0, 0.0, 0.0]]);
    ContinuousLti::new(a, b, c, Mat::zeros(2, 2))
}

/// Zero-order-hold plant at step `T`.
pub fn build_plant(p: &DesignModelParams, step: f64) -> Result<DiscreteLti> {
    continuous_plant(p)?.zoh_discretize(step)
}

/// One sensor channel, SI units (rad or rad/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub bias: f64,
    pub noise_rms: f64,
    /// Random-walk increment per sample; zero for the attitude sensor.
    pub drift_rms: f64,
    pub rate_hz: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorSuite {
    pub attitude: SensorModel,
    pub gyro: SensorModel,
}

impl Default for SensorSuite {
    fn default() -> Self {
        Self {
            attitude: SensorModel { bias: 1e-4, noise_rms: 5e-4, drift_rms: 0.0, rate_hz: 10.0 },
            gyro: SensorModel { bias: 1e-5, noise_rms: 1e-4, drift_rms: 1e-6, rate_hz: 100.0 },
        }
    }
}

impl SensorSuite {
    /// Error-free sensors at the default rates.
    pub fn ideal() -> Self {
        let d = Self::default();
        let zero = |s: SensorModel| SensorModel { bias: 0.0, noise_rms: 0.0, drift_rms: 0.0, ..s };
        Self { attitude: zero(d.attitude), gyro: zero(d.gyro) }
    }

    pub fn validate(&self) -> Result<()> {
        for (s, what) in [(&self.attitude, "attitude"), (&self.gyro, "gyro")] {
            if !(s.noise_rms >= 0.0 && s.drift_rms >= 0.0 && s.bias.is_finite() && s.rate_hz > 0.0) {
                return Err(EmcError::InvalidParameter(format!("invalid {what} sensor model {s:?}")));
            }
        }
        Ok(())
    }
}

/// Constant plus sinusoids, rad/s².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceProfile {
    pub constant: f64,
    #[serde(default)]
    pub sinusoids: Vec<Sinusoid>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub freq_hz: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

impl Default for DisturbanceProfile {
    fn default() -> Self {
        Self {
            constant: 2e-4,
            sinusoids: vec![Sinusoid { amplitude: 1e-4, freq_hz: 1e-3, phase_rad: 0.0 }],
        }
    }
}

impl DisturbanceProfile {
    pub fn zero() -> Self {
        Self { constant: 0.0, sinusoids: Vec::new() }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.constant
            + self
                .sinusoids
                .iter()
                .map(|s| s.amplitude * (2.0 * std::f64::consts::PI * s.freq_hz * t + s.phase_rad).sin())
                .sum::<f64>()
    }
}

pub fn disturbance_profile(profile: &DisturbanceProfile, t: f64) -> f64 {
    profile.at(t)
}

/// Samples available at one step, in model units (rad and rad/step).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measurement {
    pub attitude: Option<f64>,
    pub rate: f64,
}

/// Discretized plant with its sensors and random generator.
#[derive(Clone, Debug)]
pub struct Plant {
    pub params: DesignModelParams,
    pub sensors: SensorSuite,
    pub step: f64,
    pub n_q: usize,
    ad: [[f64; 4]; 4],
    bd: [[f64; 2]; 4],
    x: [f64; 4],
    drift: f64,
    i: u64,
    rng: ChaCha8Rng,
}

impl Plant {
    pub fn new(params: DesignModelParams, sensors: SensorSuite, step: f64, seed: u64, stream: u64) -> Result<Self> {
        sensors.validate()?;
        let lti = build_plant(&params, step)?;
        let ratio = 1.0 / (sensors.attitude.rate_hz * step);
        let n_q = ratio.round() as usize;
        if n_q == 0 || (ratio - n_q as f64).abs() > 1e-9 || (sensors.gyro.rate_hz * step - 1.0).abs() > 1e-9 {
            return Err(EmcError::InvalidParameter(
                "gyro must sample every step and attitude every whole number of steps".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let ad = std::array::from_fn(|r| std::array::from_fn(|c| lti.a[(r, c)]));
        let bd = std::array::from_fn(|r| std::array::from_fn(|c| lti.b[(r, c)]));
        Ok(Self { params, sensors, step, n_q, ad, bd, x: [0.0; 4], drift: 0.0, i: 0, rng })
    }

    /// `[θ, ω, q_s, q̇_s]` in SI units.
    pub fn state(&self) -> [f64; 4] {
        self.x
    }

    pub fn set_state(&mut self, x: [f64; 4]) {
        self.x = x;
    }

    pub fn index(&self) -> u64 {
        self.i
    }

    pub fn gyro_drift(&self) -> f64 {
        self.drift
    }

    /// Noise-free outputs `[q_s (rad), ω (rad/s)]`.
    pub fn true_output(&self) -> [f64; 2] {
        [self.x[2], self.x[1]]
    }

    /// Acceleration the flexible link transmits to the sensor side, rad/s².
    pub fn link_acceleration(&self) -> f64 {
        let p = &self.params;
        p.omega_f * p.omega_f * (self.x[0] - self.x[2]) - 2.0 * p.zeta_f * p.omega_f * self.x[3]
    }

    /// Samples the sensors at the current step. Every step draws, in order,
    /// gyro noise, attitude noise and the drift increment.
    pub fn measure(&mut self) -> Measurement {
        let n_g: f64 = self.rng.sample(StandardNormal);
        let n_q: f64 = self.rng.sample(StandardNormal);
        let n_d: f64 = self.rng.sample(StandardNormal);
        let g = &self.sensors.gyro;
        let rate = (self.x[1] + g.bias + self.drift + g.noise_rms * n_g) * self.step;
        let a = &self.sensors.attitude;
        let attitude = self.i.is_multiple_of(self.n_q as u64).then(|| self.x[2] + a.bias + a.noise_rms * n_q);
        self.drift += g.drift_rms * n_d;
        Measurement { attitude, rate }
    }

    /// Torque produced by a model-unit command (rad/step²).
    pub fn torque_for(&self, accel_cmd: f64) -> f64 {
        self.params.j0 * accel_cmd / (self.step * self.step)
    }

    /// Disturbance the embedded model must absorb on the rate channel, rad/s²:
    /// exogenous + friction + the command scale error from inertia uncertainty.
    pub fn total_disturbance(&self, accel_cmd: f64, d_exo: f64) -> f64 {
        let t2 = self.step * self.step;
        d_exo - self.x[1] / self.params.tau + self.torque_for(accel_cmd) / self.params.inertia() - accel_cmd / t2
    }

    /// Advances one step under a held command (rad/step²) and disturbance (rad/s²).
    pub fn advance(&mut self, accel_cmd: f64, d_exo: f64) {
        let u = [self.torque_for(accel_cmd), d_exo];
        let x = self.x;
        self.x = std::array::from_fn(|r| {
            (0..4).map(|c| self.ad[r][c] * x[c]).sum::<f64>() + self.bd[r][0] * u[0] + self.bd[r][1] * u[1]
        });
        self.i += 1;
    }

    /// Advances one step, then samples the sensors.
    pub fn step(&mut self, accel_cmd: f64, d_exo: f64) -> Measurement {
        self.advance(accel_cmd, d_exo);
        self.measure()
    }

    pub fn max_abs_state(&self) -> f64 {
        self.x.iter().fold(self.drift.abs(), |m, v| m.max(v.abs()))
    }
}
