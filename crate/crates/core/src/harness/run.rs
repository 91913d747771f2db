use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::control::{case_study_control_law, record_errors, ReferenceProfile, ACCEL_BOUND};
use crate::embedded_model::{case_study_schedule, model_error, ModelState, ATTITUDE, RATE};
use crate::error::Result;
use crate::noise_estimator::{tune_by_eigenvalues, EstimatorKind};
use crate::plant::{DesignModelParams, Plant};

use super::config::ExperimentConfig;
use super::stats::{Correlation, StatsBook, Summary, Window, WindowBounds};

/// One exported time step, SI units (rad, rad/s, rad/s²).
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub t_s: f64,
    pub q_ref: f64,
    /// Sensor-side attitude.
    pub q_true: f64,
    pub q_meas: Option<f64>,
    pub w_meas: f64,
    pub q_hat: f64,
    pub w_hat: f64,
    pub sg_hat: f64,
    /// Rejected disturbance acceleration held by the model.
    pub a_hat: f64,
    pub u_cmd: f64,
    /// `q_ref - q_true`.
    pub e_track_true: f64,
    /// A posteriori attitude tracking error from the model state.
    pub e_track_post: f64,
    /// Attitude model error, at attitude samples only.
    pub e_model: Option<f64>,
    pub sat_flag: bool,
    pub w_ref: f64,
    pub u_ref: f64,
    /// Rigid-body rate.
    pub w_true: f64,
    pub e_rate_true: f64,
    pub e_rate_post: f64,
    /// `q_ref - q_meas`, at attitude samples only.
    pub e_control: Option<f64>,
    pub e_model_rate: f64,
    /// Acceleration transmitted through the flexible link.
    pub link_acc: f64,
    /// Exogenous + friction + inertia-error acceleration acting on the rigid body.
    pub dist_total: f64,
}

pub const COLUMNS: [&str; 23] = [
    "t_s", "q_ref", "q_true", "q_meas", "w_meas", "q_hat", "w_hat", "sg_hat", "a_hat", "u_cmd", "e_track_true",
    "e_track_post", "e_model", "sat_flag", "w_ref", "u_ref", "w_true", "e_rate_true", "e_rate_post", "e_control",
    "e_model_rate", "link_acc", "dist_total",
];

impl Row {
    /// Statistics channels fed from this row.
    fn channels(&self) -> [(&'static str, Option<f64>); 10] {
        [
            ("attitude_error", Some(self.e_track_true)),
            ("rate_error", Some(self.e_rate_true)),
            ("command", Some(self.u_cmd)),
            ("attitude_error_post", Some(self.e_track_post)),
            ("rate_error_post", Some(self.e_rate_post)),
            ("model_error", self.e_model),
            ("model_error_rate", Some(self.e_model_rate)),
            ("link_acceleration", Some(self.link_acc)),
            ("disturbance", Some(self.dist_total)),
            ("rejected_disturbance", Some(self.a_hat)),
        ]
    }

    /// `e_control - (e_track_post - e_model)` when attitude is sampled.
    pub fn identity_residual(&self) -> Option<f64> {
        match (self.e_control, self.e_model) {
            (Some(ey), Some(em)) => Some(ey - (self.e_track_post - em)),
            _ => None,
        }
    }
}

/// Derived quantities of a run, all recomputable from its rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub stats: BTreeMap<String, BTreeMap<Window, Summary>>,
    pub rows: u64,
    pub saturation_count: u64,
    pub identity_max_residual: f64,
    /// Correlation of `a_hat` with `dist_total` over the slew window.
    pub disturbance_correlation: Option<f64>,
    pub max_abs_command: f64,
}

impl RunSummary {
    pub fn get(&self, channel: &str, window: Window) -> Option<Summary> {
        self.stats.get(channel).and_then(|m| m.get(&window)).copied()
    }
}

/// Streaming builder for [`RunSummary`].
#[derive(Clone, Debug)]
pub struct SummaryBuilder {
    bounds: WindowBounds,
    book: StatsBook,
    rows: u64,
    saturation_count: u64,
    identity_max_residual: f64,
    correlation: Correlation,
    max_abs_command: f64,
}

impl SummaryBuilder {
    pub fn new(bounds: WindowBounds) -> Self {
        Self {
            bounds,
            book: StatsBook::default(),
            rows: 0,
            saturation_count: 0,
            identity_max_residual: 0.0,
            correlation: Correlation::default(),
            max_abs_command: 0.0,
        }
    }

    pub fn push(&mut self, row: &Row) {
        let i = self.rows as usize;
        for (ch, v) in row.channels() {
            if let Some(v) = v {
                self.book.push(&self.bounds, i, ch, v);
            }
        }
        if row.sat_flag {
            self.saturation_count += 1;
        }
        if let Some(r) = row.identity_residual() {
            self.identity_max_residual = self.identity_max_residual.max(r.abs());
        }
        if self.bounds.contains(Window::Slew, i) {
            self.correlation.push(row.a_hat, row.dist_total);
        }
        self.max_abs_command = self.max_abs_command.max(row.u_cmd.abs());
        self.rows += 1;
    }

    pub fn finish(self) -> RunSummary {
        RunSummary {
            stats: self.book.summaries(),
            rows: self.rows,
            saturation_count: self.saturation_count,
            identity_max_residual: self.identity_max_residual,
            disturbance_correlation: self.correlation.value(),
            max_abs_command: self.max_abs_command,
        }
    }
}

pub fn summarize(rows: &[Row], bounds: WindowBounds) -> RunSummary {
    let mut b = SummaryBuilder::new(bounds);
    rows.iter().for_each(|r| b.push(r));
    b.finish()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    /// Generator stream; Monte Carlo uses the run index.
    pub stream: u64,
    /// Overrides `config.plant`.
    pub params: Option<DesignModelParams>,
    pub keep_rows: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { stream: 0, params: None, keep_rows: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub config_hash: String,
    pub seed: u64,
    pub stream: u64,
    pub estimator: EstimatorKind,
    pub params: DesignModelParams,
    pub step_s: f64,
    pub rows: Vec<Row>,
    pub summary: RunSummary,
    pub unstable: bool,
    /// Time of the blow-up, when `unstable`.
    pub unstable_at_s: Option<f64>,
}

impl RunResult {
    pub fn stat(&self, channel: &str, window: Window) -> Option<Summary> {
        self.summary.get(channel, window)
    }
}

/// Closed loop with `config.plant`, stream 0 and stored rows.
pub fn run_closed_loop(config: &ExperimentConfig, seed: u64) -> Result<RunResult> {
    run_with(config, seed, &RunOptions::default())
}

/// One closed-loop run. Each step: sample the sensors, form the multi-rate
/// model error, estimate the noise, compute the saturated command from the
/// current model state, record, then advance the model and the plant.
pub fn run_with(config: &ExperimentConfig, seed: u64, opts: &RunOptions) -> Result<RunResult> {
    config.validate()?;
    let params = opts.params.unwrap_or(config.plant);
    params.validate(config.non_paper)?;
    let t = config.step_s;
    let t2 = t * t;
    let n_q = config.n_q()?;
    let n_steps = config.n_steps();

    let mut estimator = tune_by_eigenvalues(config.estimator, config.gamma_attitude, config.gamma_rate, n_q)?;
    let model = estimator.model();
    let law = case_study_control_law(&model, config.gamma_feedback, t)?;
    let schedule = case_study_schedule(t, n_q)?;
    let r = &config.reference;
    let reference = ReferenceProfile::new(r.slews.clone(), r.a_max, r.j_max, t, 0.0)?;
    let mut plant = Plant::new(params, config.sensors, t, seed, opts.stream)?;
    let mut state = ModelState::zeros(&model);

    let bounds = WindowBounds::new(t, config.zero_reference_from_s, config.slew_window_s);
    let mut builder = SummaryBuilder::new(bounds);
    let mut rows = Vec::with_capacity(if opts.keep_rows { n_steps + 1 } else { 0 });
    let mut unstable_at = None;

    for i in 0..=n_steps {
        let time = i as f64 * t;
        let meas = plant.measure();
        let y_meas = [meas.attitude, Some(meas.rate)];
        let y_hat = &model.controllable.c * &state.xc;
        let e_model = model_error(&y_meas, &y_hat, &schedule, i as u64)?;
        let e_rate = e_model[RATE].expect("gyro is sampled every step");
        let w = estimator.estimate(e_model[ATTITUDE], e_rate, i as u64)?;
        let rs = reference.sample(i);
        let cmd = law.command(&rs.x, &rs.u, &state, None);
        let truth = plant.true_output();
        let rec = record_errors(&rs, &law, &state, &e_model, &y_meas, Some([truth[0], truth[1] * t]));
        let e_true = rec.e_true.expect("truth supplied");
        let d_exo = config.disturbance.at(time);
        let u = cmd.u[0];

        let row = Row {
            t_s: time,
            q_ref: rs.x[ATTITUDE],
            q_true: truth[0],
            q_meas: meas.attitude,
            w_meas: meas.rate / t,
            q_hat: state.xc[ATTITUDE],
            w_hat: state.xc[RATE] / t,
            sg_hat: state.xd[0] / t,
            a_hat: state.xd[1] / t2,
            u_cmd: u / t2,
            e_track_true: e_true[ATTITUDE],
            e_track_post: rec.e_hat[ATTITUDE],
            e_model: e_model[ATTITUDE],
            sat_flag: cmd.saturated,
            w_ref: rs.x[RATE] / t,
            u_ref: rs.u[0] / t2,
            w_true: truth[1],
            e_rate_true: e_true[RATE] / t,
            e_rate_post: rec.e_hat[RATE] / t,
            e_control: rec.e_y,
            e_model_rate: e_rate / t,
            link_acc: plant.link_acceleration(),
            dist_total: plant.total_disturbance(u, d_exo),
        };
        builder.push(&row);
        if opts.keep_rows {
            rows.push(row);
        }
        if i == n_steps {
            break;
        }

        let (next, _) = model.step(&state, &cmd.u, &w)?;
        state = next;
        plant.advance(u, d_exo);
        let model_max = state.xc.iter().chain(state.xd.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = plant.max_abs_state().max(model_max);
        if worst.is_nan() || worst > config.blowup_threshold {
            unstable_at = Some((i + 1) as f64 * t);
            break;
        }
    }

    Ok(RunResult {
        config_hash: config.hash()?,
        seed,
        stream: opts.stream,
        estimator: config.estimator,
        params,
        step_s: t,
        rows,
        summary: builder.finish(),
        unstable: unstable_at.is_some(),
        unstable_at_s: unstable_at,
    })
}

/// True when every row respects the command bound.
pub fn command_within_bound(rows: &[Row]) -> bool {
    rows.iter().all(|r| r.u_cmd.abs() <= ACCEL_BOUND * (1.0 + 1e-12))
}
