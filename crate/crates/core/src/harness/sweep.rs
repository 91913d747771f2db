use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EmcError, Result};
use crate::noise_estimator::EstimatorKind;

use super::config::ExperimentConfig;
use super::run::{run_with, RunOptions};
use super::stats::Window;

/// Which predictor channels the sweep value drives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Attitude and rate channels together.
    #[default]
    Joint,
    Attitude,
    Rate,
}

impl std::str::FromStr for SweepAxis {
    type Err = EmcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(Self::Joint),
            "attitude" => Ok(Self::Attitude),
            "rate" => Ok(Self::Rate),
            _ => Err(EmcError::InvalidParameter(format!("unknown sweep axis '{s}'"))),
        }
    }
}

/// Zero-reference RMS values of one (γ, kind) run. Empty when the run blew
/// up or the design could not be built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub gamma: f64,
    pub kind: EstimatorKind,
    pub unstable: bool,
    pub error: Option<String>,
    /// rad
    pub attitude_rms: Option<f64>,
    /// rad/s
    pub rate_rms: Option<f64>,
    /// rad/s²
    pub command_rms: Option<f64>,
    /// rad/s²
    pub link_rms: Option<f64>,
    pub saturation_count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config_sha256: String,
    pub seed: u64,
    pub axis: SweepAxis,
    /// Strictly increasing.
    pub gammas: Vec<f64>,
    pub kinds: Vec<EstimatorKind>,
    /// Ordered by kind, then γ.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn point(&self, kind: EstimatorKind, gamma: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.kind == kind && p.gamma == gamma)
    }

    pub fn series(&self, kind: EstimatorKind) -> Vec<&SweepPoint> {
        self.points.iter().filter(|p| p.kind == kind).collect()
    }
}

/// One run per (γ, kind), all with the same seed. Unstable runs are recorded,
/// not propagated as errors.
pub fn sweep_gamma(
    config: &ExperimentConfig,
    gammas: &[f64],
    kinds: &[EstimatorKind],
    axis: SweepAxis,
) -> Result<SweepResult> {
    config.validate()?;
    let mut sorted = gammas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.is_empty() {
        return Err(EmcError::InvalidParameter("empty gamma list".into()));
    }
    if let Some(g) = sorted.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
        return Err(EmcError::InvalidParameter(format!("gamma = {g} outside (0, 1)")));
    }
    let jobs: Vec<(EstimatorKind, f64)> = kinds.iter().flat_map(|k| sorted.iter().map(move |g| (*k, *g))).collect();
    let points = jobs
        .par_iter()
        .map(|&(kind, gamma)| {
            let mut cfg = config.clone();
            cfg.estimator = kind;
            match axis {
                SweepAxis::Joint => {
                    cfg.gamma_attitude = gamma;
                    cfg.gamma_rate = gamma;
                }
                SweepAxis::Attitude => cfg.gamma_attitude = gamma,
                SweepAxis::Rate => cfg.gamma_rate = gamma,
            }
            let opts = RunOptions { keep_rows: false, ..RunOptions::default() };
            match run_with(&cfg, config.seed, &opts) {
                Ok(r) => {
                    let rms = |ch: &str| (!r.unstable).then(|| r.stat(ch, Window::ZeroReference)).flatten().map(|s| s.rms);
                    SweepPoint {
                        gamma,
                        kind,
                        unstable: r.unstable,
                        error: None,
                        attitude_rms: rms("attitude_error"),
                        rate_rms: rms("rate_error"),
                        command_rms: rms("command"),
                        link_rms: rms("link_acceleration"),
                        saturation_count: r.summary.saturation_count,
                    }
                }
                Err(e) => SweepPoint {
                    gamma,
                    kind,
                    unstable: true,
                    error: Some(e.to_string()),
                    attitude_rms: None,
                    rate_rms: None,
                    command_rms: None,
                    link_rms: None,
                    saturation_count: 0,
                },
            }
        })
        .collect();
    Ok(SweepResult {
        config_sha256: config.hash()?,
        seed: config.seed,
        axis,
        gammas: sorted,
        kinds: kinds.to_vec(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_is_sorted_and_points_complete() {
        let cfg = ExperimentConfig { duration_s: 5.0, zero_reference_from_s: 2.0, ..ExperimentConfig::default() };
        let s = sweep_gamma(&cfg, &[0.05, 0.02, 0.05], &[EstimatorKind::Dynamic, EstimatorKind::Static], SweepAxis::Joint)
            .unwrap();
        assert_eq!(s.gammas, vec![0.02, 0.05]);
        assert_eq!(s.points.len(), 4);
        assert!(s.point(EstimatorKind::Static, 0.05).is_some());
        assert!(s.series(EstimatorKind::Dynamic).iter().all(|p| p.command_rms.is_some()));
    }

    #[test]
    fn bad_gamma_rejected() {
        let cfg = ExperimentConfig::default();
        assert!(sweep_gamma(&cfg, &[0.0], &[EstimatorKind::Dynamic], SweepAxis::Joint).is_err());
        assert!(sweep_gamma(&cfg, &[], &[EstimatorKind::Dynamic], SweepAxis::Joint).is_err());
    }
}
