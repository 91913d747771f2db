use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EmcError, Result};
use crate::plant::{sample_params, DesignModelParams};

use super::config::ExperimentConfig;
use super::run::{run_with, RunOptions, RunResult};
use super::stats::{quantile, Window};

/// Parameter draws use their own generator so that sensor noise and
/// parameters of run `k` do not depend on each other's consumption.
const PARAM_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McRun {
    pub index: u64,
    pub params: DesignModelParams,
    pub unstable: bool,
    pub saturation_count: u64,
    /// Full-run statistics; rad, rad/s, rad/s².
    pub attitude_rms: f64,
    pub attitude_max: f64,
    pub rate_rms: f64,
    /// Zero-reference window.
    pub command_rms: f64,
    /// Largest command magnitude of the run, rad/s².
    pub command_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub p05: f64,
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub config_sha256: String,
    pub master_seed: u64,
    pub n: u64,
    pub unstable_count: u64,
    /// Runs that hit the command bound at least once.
    pub saturated_runs: u64,
    /// Over stable runs only.
    pub quantiles: BTreeMap<String, Quantiles>,
    pub runs: Vec<McRun>,
}

/// Parameters of run `index`.
pub fn run_params(config: &ExperimentConfig, index: u64) -> Result<DesignModelParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ PARAM_SEED_SALT);
    rng.set_stream(index);
    sample_params(&mut rng, &config.param_ranges)
}

/// Full result of one campaign member, rows included.
pub fn monte_carlo_member(config: &ExperimentConfig, index: u64) -> Result<RunResult> {
    let opts = RunOptions { stream: index, params: Some(run_params(config, index)?), keep_rows: true };
    run_with(config, config.seed, &opts)
}

/// `n` independent runs over `config.param_ranges`; deterministic in
/// `config.seed` regardless of thread count.
pub fn monte_carlo(config: &ExperimentConfig, n: u64) -> Result<MonteCarloResult> {
    if n == 0 {
        return Err(EmcError::InvalidParameter("Monte Carlo needs at least one run".into()));
    }
    config.validate()?;
    let runs = (0..n)
        .into_par_iter()
        .map(|index| {
            let params = run_params(config, index)?;
            let opts = RunOptions { stream: index, params: Some(params), keep_rows: false };
            let r = run_with(config, config.seed, &opts)?;
            let full = |ch: &str| r.stat(ch, Window::Full);
            Ok(McRun {
                index,
                params,
                unstable: r.unstable,
                saturation_count: r.summary.saturation_count,
                attitude_rms: full("attitude_error").map_or(f64::NAN, |s| s.rms),
                attitude_max: full("attitude_error").map_or(f64::NAN, |s| s.max_abs),
                rate_rms: full("rate_error").map_or(f64::NAN, |s| s.rms),
                command_rms: r.stat("command", Window::ZeroReference).map_or(f64::NAN, |s| s.rms),
                command_max: r.summary.max_abs_command,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let stable: Vec<&McRun> = runs.iter().filter(|r| !r.unstable).collect();
    let mut quantiles = BTreeMap::new();
    type Metric = (&'static str, fn(&McRun) -> f64);
    let metrics: [Metric; 4] = [
        ("attitude_rms", |r| r.attitude_rms),
        ("attitude_max", |r| r.attitude_max),
        ("rate_rms", |r| r.rate_rms),
        ("command_rms", |r| r.command_rms),
    ];
    for (name, get) in metrics {
        let data: Vec<f64> = stable.iter().map(|r| get(r)).collect();
        if let (Some(p05), Some(p50), Some(p95), Some(max)) =
            (quantile(&data, 0.05), quantile(&data, 0.5), quantile(&data, 0.95), quantile(&data, 1.0))
        {
            quantiles.insert(name.to_string(), Quantiles { p05, p50, p95, max });
        }
    }
    Ok(MonteCarloResult {
        config_sha256: config.hash()?,
        master_seed: config.seed,
        n,
        unstable_count: runs.iter().filter(|r| r.unstable).count() as u64,
        saturated_runs: runs.iter().filter(|r| r.saturation_count > 0).count() as u64,
        quantiles,
        runs,
    })
}
