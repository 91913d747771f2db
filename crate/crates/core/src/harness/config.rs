use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::control::{SlewRequest, ACCEL_BOUND, JERK_BOUND};
use crate::error::{EmcError, Result};
use crate::noise_estimator::EstimatorKind;
use crate::plant::{DesignModelParams, DisturbanceProfile, ParamRanges, SensorSuite};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub slews: Vec<SlewRequest>,
    /// rad/s²
    pub a_max: f64,
    /// rad/s³
    pub j_max: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        let pi = std::f64::consts::PI;
        Self {
            slews: vec![
                SlewRequest { start_s: 100.0, target_rad: pi },
                SlewRequest { start_s: 200.0, target_rad: 2.0 * pi },
            ],
            a_max: 0.005,
            j_max: 0.0025,
        }
    }
}

/// One experiment. Every field has a default, so a config file only needs
/// the values it changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub duration_s: f64,
    pub step_s: f64,
    pub seed: u64,
    pub plant: DesignModelParams,
    /// Sampling box for Monte Carlo campaigns.
    pub param_ranges: ParamRanges,
    pub sensors: SensorSuite,
    pub estimator: EstimatorKind,
    pub gamma_attitude: f64,
    pub gamma_rate: f64,
    pub gamma_feedback: f64,
    pub reference: ReferenceConfig,
    /// Exogenous acceleration; the default is an illustrative profile, not a
    /// measured one.
    pub disturbance: DisturbanceProfile,
    /// Any state magnitude above this (model units or SI) ends the run as unstable.
    pub blowup_threshold: f64,
    /// Start of the zero-reference statistics window, s.
    pub zero_reference_from_s: f64,
    /// Slew statistics window `[start, end)`, s.
    pub slew_window_s: [f64; 2],
    /// Permits plant parameters and bounds outside the nominal envelope.
    pub non_paper: bool,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            duration_s: 400.0,
            step_s: 0.01,
            seed: 1,
            plant: DesignModelParams::nominal(),
            param_ranges: ParamRanges::uncertainty_box(),
            sensors: SensorSuite::default(),
            estimator: EstimatorKind::Dynamic,
            gamma_attitude: 0.03,
            gamma_rate: 0.03,
            gamma_feedback: 0.1,
            reference: ReferenceConfig::default(),
            disturbance: DisturbanceProfile::default(),
            blowup_threshold: 1e6,
            zero_reference_from_s: 300.0,
            slew_window_s: [100.0, 300.0],
            non_paper: false,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn in_unit_interval(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(EmcError::InvalidParameter(format!("{what} = {v} outside (0, 1)")))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(EmcError::InvalidParameter(format!("duration must be positive, got {}", self.duration_s)));
        }
        if !(self.step_s > 0.0 && self.step_s.is_finite()) {
            return Err(EmcError::InvalidParameter(format!("step must be positive, got {}", self.step_s)));
        }
        in_unit_interval(self.gamma_attitude, "gamma_attitude")?;
        in_unit_interval(self.gamma_rate, "gamma_rate")?;
        in_unit_interval(self.gamma_feedback, "gamma_feedback")?;
        self.plant.validate(self.non_paper)?;
        self.sensors.validate()?;
        if self.blowup_threshold.is_nan() || self.blowup_threshold <= 0.0 {
            return Err(EmcError::InvalidParameter("blow-up threshold must be positive".into()));
        }
        if !self.non_paper && (self.reference.a_max > ACCEL_BOUND || self.reference.j_max > JERK_BOUND) {
            return Err(EmcError::InvalidParameter("reference bounds exceed the actuator envelope".into()));
        }
        self.n_q()?;
        Ok(())
    }

    /// Attitude decimation factor implied by the sensor rates.
    pub fn n_q(&self) -> Result<usize> {
        let ratio = 1.0 / (self.sensors.attitude.rate_hz * self.step_s);
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 {
            return Err(EmcError::InvalidParameter(format!(
                "attitude rate {} Hz is not a whole fraction of the base rate",
                self.sensors.attitude.rate_hz
            )));
        }
        Ok(n as usize)
    }

    pub fn n_steps(&self) -> usize {
        (self.duration_s / self.step_s).round() as usize
    }

    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// SHA-256 of the canonical JSON with the output directory blanked, so
    /// the hash identifies the experiment rather than where it was written.
    pub fn hash(&self) -> Result<String> {
        let mut cfg = self.clone();
        cfg.output_dir = PathBuf::new();
        Ok(hex::encode(Sha256::digest(cfg.canonical_json()?.as_bytes())))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| EmcError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
