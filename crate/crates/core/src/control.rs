//! Reference generation, the output Sylvester solution, the control law and
//! tracking-error bookkeeping.

use serde::{Deserialize, Serialize};

use crate::embedded_model::{EmbeddedModel, ModelState, ATTITUDE, RATE};
use crate::error::{dim_err, EmcError, Result};
use crate::statespace::{self, mat, place_siso, Mat, Poly, Side, Vector, RANK_TOL};

/// Command bound, rad/s².
pub const ACCEL_BOUND: f64 = 0.025;
/// Reference jerk bound, rad/s³.
pub const JERK_BOUND: f64 = 0.25;

#[derive(Clone, Debug, PartialEq)]
pub struct SylvesterSolution {
    pub q: Mat,
    pub m_c: Mat,
}

impl SylvesterSolution {
    /// Max-norm residual of `A_c Q + B_c M_c - H_c - Q A_d`.
    pub fn residual(&self, a_c: &Mat, b_c: &Mat, a_d: &Mat, h_c: &Mat) -> f64 {
        (a_c * &self.q + b_c * &self.m_c - h_c - &self.q * a_d).amax()
    }
}

/// Solves `A_c Q - Q A_d + B_c M_c = H_c` together with `C_perf Q = 0` as one
/// vectorized linear system in `(vec Q, vec M_c)`.
pub fn solve_output_sylvester(a_c: &Mat, b_c: &Mat, c_perf: &Mat, a_d: &Mat, h_c: &Mat) -> Result<SylvesterSolution> {
    let nc = a_c.nrows();
    let nd = a_d.nrows();
    let m = b_c.ncols();
    let p = c_perf.nrows();
    if a_c.ncols() != nc || a_d.ncols() != nd {
        return Err(dim_err("sylvester square blocks", "square A_c and A_d", "non-square"));
    }
    if b_c.nrows() != nc || c_perf.ncols() != nc || h_c.shape() != (nc, nd) {
        return Err(dim_err("sylvester operands", format!("B_c {nc}xm, C_perf px{nc}, H_c {nc}x{nd}"), "mismatch"));
    }
    let id_d = Mat::identity(nd, nd);
    let id_c = Mat::identity(nc, nc);
    let nq = nc * nd;
    let unknowns = nq + m * nd;
    let rows = nq + p * nd;
    let mut sys = Mat::zeros(rows, unknowns);
    sys.view_mut((0, 0), (nq, nq))
        .copy_from(&(id_d.kronecker(a_c) - a_d.transpose().kronecker(&id_c)));
    sys.view_mut((0, nq), (nq, m * nd)).copy_from(&id_d.kronecker(b_c));
    sys.view_mut((nq, 0), (p * nd, nq)).copy_from(&id_d.kronecker(c_perf));
    let mut rhs = Vector::zeros(rows);
    rhs.rows_mut(0, nq).copy_from(&Vector::from_column_slice(h_c.as_slice()));

    let rank = statespace::rank(&sys, RANK_TOL);
    let sol = sys
        .clone()
        .svd(true, true)
        .solve(&rhs, 0.0)
        .map_err(|e| EmcError::InvalidParameter(e.to_string()))?;
    let residual = (&sys * &sol - &rhs).amax();
    let scale = 1.0 + rhs.amax();
    if rank < unknowns || residual > 1e-10 * scale {
        return Err(EmcError::RankDeficient { rank, unknowns, residual });
    }
    Ok(SylvesterSolution {
        q: Mat::from_column_slice(nc, nd, &sol.as_slice()[..nq]),
        m_c: Mat::from_column_slice(m, nd, &sol.as_slice()[nq..]),
    })
}

/// Saturated command with its pre-saturation value.
#[derive(Clone, Debug, PartialEq)]
pub struct Command {
    pub u: Vector,
    pub raw: Vector,
    pub saturated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlLaw {
    pub k: Mat,
    pub sylvester: SylvesterSolution,
    /// Per-component command bound in model units.
    pub u_max: f64,
}

impl ControlLaw {
    pub fn new(k: Mat, sylvester: SylvesterSolution, u_max: f64, a_c: &Mat, b_c: &Mat) -> Result<Self> {
        if u_max.is_nan() || u_max <= 0.0 {
            return Err(EmcError::InvalidParameter(format!("command bound must be positive, got {u_max}")));
        }
        let rho = statespace::spectral_radius(&(a_c - b_c * &k))?;
        if rho >= 1.0 {
            return Err(EmcError::InvalidParameter(format!("feedback loop not stable: spectral radius {rho}")));
        }
        Ok(Self { k, sylvester, u_max })
    }

    /// A posteriori tracking error `x_ref - x_c - Q x_d`.
    pub fn tracking_error(&self, x_ref: &Vector, state: &ModelState) -> Vector {
        x_ref - &state.xc - &self.sylvester.q * &state.xd
    }

    /// `u = u_ref + K e - M_c x_d - m(x_c)`, clamped component-wise to `±u_max`.
    pub fn command(&self, x_ref: &Vector, u_ref: &Vector, state: &ModelState, known: Option<&Vector>) -> Command {
        let e = self.tracking_error(x_ref, state);
        let mut raw = u_ref + &self.k * e - &self.sylvester.m_c * &state.xd;
        if let Some(m) = known {
            raw -= m;
        }
        let u = raw.map(|v| v.clamp(-self.u_max, self.u_max));
        let saturated = u != raw;
        Command { u, raw, saturated }
    }

    /// One step of the tracking-error dynamics when the embedded model is the
    /// plant and the command is unsaturated:
    /// `e' = (A_c - B_c K) e - (G_c + Q G_d) w`.
    pub fn error_equation_step(&self, model: &EmbeddedModel, e: &Vector, w: &Vector) -> Vector {
        let ctl = &model.controllable;
        let dist = &model.disturbance;
        (&ctl.a - &ctl.b * &self.k) * e - (&dist.g_c + &self.sylvester.q * &dist.g) * w
    }
}

/// Case-study law: both feedback eigenvalues at `1 - gamma`, attitude as the
/// performance output, command bound `ACCEL_BOUND` converted to rad/step².
pub fn case_study_control_law(model: &EmbeddedModel, gamma: f64, step: f64) -> Result<ControlLaw> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(EmcError::InvalidParameter(format!("feedback gamma = {gamma} outside (0, 1)")));
    }
    let ctl = &model.controllable;
    let k = place_siso(&ctl.a, &ctl.b, &Poly::repeated_root(1.0 - gamma, 2), Side::Controller)?;
    let syl = solve_output_sylvester(&ctl.a, &ctl.b, &mat(&[&[1.0, 0.0]]), &model.disturbance.a, &model.disturbance.h)?;
    ControlLaw::new(k, syl, ACCEL_BOUND * step * step, &ctl.a, &ctl.b)
}

/// A rest-to-rest slew to an absolute angle, beginning at `start_s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlewRequest {
    pub start_s: f64,
    pub target_rad: f64,
}

/// Reference state `[q, ω]` (rad, rad/step), feedforward acceleration
/// (rad/step²) and reference output.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSample {
    pub x: Vector,
    pub u: Vector,
    pub y: f64,
}

/// Jerk-limited trapezoidal acceleration profile, propagated through the
/// double integrator of the embedded model.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceProfile {
    pub slews: Vec<SlewRequest>,
    pub a_max: f64,
    pub j_max: f64,
    pub step: f64,
    pub initial_angle: f64,
    accel: Vec<f64>,
    states: Vec<[f64; 2]>,
}

/// Accelerations (rad/step²) of one slew of signed distance `dist`, exactly
/// reaching `dist` under the model's double-integrator propagation.
fn slew_accelerations(dist: f64, a_max: f64, j_max: f64, step: f64) -> Vec<f64> {
    if dist == 0.0 {
        return Vec::new();
    }
    let d = dist.abs();
    // continuous minimal-time shape: ramp time t_j, constant-acceleration time t_a
    let mut a_peak = a_max;
    let t_j = a_max / j_max;
    let mut t_a = 0.5 * ((t_j * t_j + 4.0 * d / a_max).sqrt() - 3.0 * t_j);
    if t_a < 0.0 {
        a_peak = (d * j_max * j_max / 2.0).cbrt();
        t_a = 0.0;
    }
    // durations rounded up to whole steps; lengthen until the rescale only shrinks amplitudes
    let n_j = ((a_peak / (j_max * step)) - 1e-9).ceil().max(1.0) as usize;
    let mut n_a = ((t_a / step) - 1e-9).ceil().max(0.0) as usize;
    let a = a_peak * step * step;
    loop {
        let mut lobe = Vec::with_capacity(2 * n_j + n_a);
        lobe.extend((1..=n_j).map(|k| a * k as f64 / n_j as f64));
        lobe.extend(std::iter::repeat_n(a, n_a));
        lobe.extend((1..=n_j).map(|k| a * (n_j - k) as f64 / n_j as f64));
        let mut seq = lobe.clone();
        seq.extend(lobe.iter().map(|v| -v));
        let reached = propagate(&seq, [0.0, 0.0]).last().map_or(0.0, |s| s[0]);
        if reached >= d {
            let scale = dist / reached;
            return seq.iter().map(|v| v * scale).collect();
        }
        n_a += 1;
    }
}

fn propagate(accel: &[f64], x0: [f64; 2]) -> Vec<[f64; 2]> {
    let mut x = x0;
    let mut out = Vec::with_capacity(accel.len() + 1);
    out.push(x);
    for u in accel {
        x = [x[0] + x[1] + 0.5 * u, x[1] + u];
        out.push(x);
    }
    out
}

impl ReferenceProfile {
    pub fn new(slews: Vec<SlewRequest>, a_max: f64, j_max: f64, step: f64, initial_angle: f64) -> Result<Self> {
        if !(a_max > 0.0 && a_max <= ACCEL_BOUND) {
            return Err(EmcError::Infeasible(format!("acceleration bound {a_max} outside (0, {ACCEL_BOUND}]")));
        }
        if !(j_max > 0.0 && j_max <= JERK_BOUND) {
            return Err(EmcError::Infeasible(format!("jerk bound {j_max} outside (0, {JERK_BOUND}]")));
        }
        if step.is_nan() || step <= 0.0 {
            return Err(EmcError::InvalidParameter(format!("time step must be positive, got {step}")));
        }
        let mut accel = Vec::new();
        let mut angle = initial_angle;
        for s in &slews {
            if !(s.start_s >= 0.0 && s.start_s.is_finite() && s.target_rad.is_finite()) {
                return Err(EmcError::Infeasible(format!("malformed slew request {s:?}")));
            }
            let start = (s.start_s / step).round() as usize;
            if start < accel.len() {
                return Err(EmcError::Infeasible(format!(
                    "slew at {} s starts before the previous slew ends at {} s",
                    s.start_s,
                    accel.len() as f64 * step
                )));
            }
            accel.resize(start, 0.0);
            accel.extend(slew_accelerations(s.target_rad - angle, a_max, j_max, step));
            angle = s.target_rad;
        }
        let states = propagate(&accel, [initial_angle, 0.0]);
        Ok(Self { slews, a_max, j_max, step, initial_angle, accel, states })
    }

    pub fn idle(step: f64) -> Self {
        Self::new(Vec::new(), ACCEL_BOUND, JERK_BOUND, step, 0.0).expect("empty profile is feasible")
    }

    /// Steps after which the reference is at rest.
    pub fn active_steps(&self) -> usize {
        self.accel.len()
    }

    pub fn sample(&self, i: usize) -> ReferenceSample {
        let end = self.accel.len();
        let (x, u) = if i < end {
            (self.states[i], self.accel[i])
        } else {
            // free response after the last slew
            let rest = self.states[end];
            ([rest[0] + rest[1] * (i - end) as f64, rest[1]], 0.0)
        };
        ReferenceSample {
            x: Vector::from_column_slice(&x),
            u: Vector::from_element(1, u),
            y: x[0],
        }
    }

    /// Reference acceleration in rad/s² at step `i`.
    pub fn accel_si(&self, i: usize) -> f64 {
        self.accel.get(i).copied().unwrap_or(0.0) / (self.step * self.step)
    }
}

/// Per-step error bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRecord {
    /// A posteriori tracking error `x_ref - x_c - Q x_d` (model units).
    pub e_hat: Vector,
    /// Masked a posteriori model error per output channel.
    pub e_model: Vec<Option<f64>>,
    /// Control error on the attitude output, `y_ref - y`, when attitude is sampled.
    pub e_y: Option<f64>,
    /// Ground-truth tracking error `[q_ref - q, ω_ref - ω]` (model units), simulation only.
    pub e_true: Option<[f64; 2]>,
}

impl ErrorRecord {
    /// `e_y - (ê_y - ē)` on the attitude row; `None` when attitude is not sampled.
    pub fn identity_residual(&self) -> Option<f64> {
        match (self.e_y, self.e_model[ATTITUDE]) {
            (Some(ey), Some(em)) => Some(ey - (self.e_hat[ATTITUDE] - em)),
            _ => None,
        }
    }
}

pub fn record_errors(
    reference: &ReferenceSample,
    law: &ControlLaw,
    state: &ModelState,
    e_model: &[Option<f64>],
    y_meas: &[Option<f64>],
    truth: Option<[f64; 2]>,
) -> ErrorRecord {
    let e_hat = law.tracking_error(&reference.x, state);
    let e_y = y_meas[ATTITUDE].map(|y| reference.y - y);
    let e_true = truth.map(|t| [reference.x[ATTITUDE] - t[ATTITUDE], reference.x[RATE] - t[RATE]]);
    ErrorRecord {
        e_hat,
        e_model: e_model.to_vec(),
        e_y,
        e_true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedded_model::build_case_study_model;
    use crate::statespace::vector;

    fn case() -> (EmbeddedModel, SylvesterSolution) {
        let m = build_case_study_model();
        let s = solve_output_sylvester(
            &m.controllable.a,
            &m.controllable.b,
            &mat(&[&[1.0, 0.0]]),
            &m.disturbance.a,
            &m.disturbance.h,
        )
        .unwrap();
        (m, s)
    }

    #[test]
    fn case_study_sylvester() {
        let (m, s) = case();
        assert!((&s.q - mat(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]])).amax() < 1e-12);
        assert!((&s.m_c - mat(&[&[0.0, 1.0, 0.0]])).amax() < 1e-12);
        assert!(s.residual(&m.controllable.a, &m.controllable.b, &m.disturbance.a, &m.disturbance.h) < 1e-10);
    }

    #[test]
    fn collocated_and_uncoupled_cases() {
        let a = mat(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let b = mat(&[&[0.5], &[1.0]]);
        let m0 = mat(&[&[0.3, -1.0]]);
        let s = solve_output_sylvester(&a, &b, &mat(&[&[1.0, 0.0]]), &Mat::identity(2, 2), &(&b * &m0)).unwrap();
        assert!(s.q.amax() < 1e-12);
        assert!((&s.m_c - &m0).amax() < 1e-12);
        let s = solve_output_sylvester(&a, &b, &mat(&[&[1.0, 0.0]]), &Mat::identity(2, 2), &Mat::zeros(2, 2)).unwrap();
        assert!(s.q.amax() < 1e-15 && s.m_c.amax() < 1e-15);
    }

    #[test]
    fn full_output_selector_is_inconsistent() {
        let (m, _) = case();
        let r = solve_output_sylvester(&m.controllable.a, &m.controllable.b, &Mat::identity(2, 2), &m.disturbance.a, &m.disturbance.h);
        assert!(matches!(r, Err(EmcError::RankDeficient { .. })));
    }

    #[test]
    fn command_reduces_to_case_study_form() {
        let m = build_case_study_model();
        let law = case_study_control_law(&m, 0.1, 0.01).unwrap();
        assert!((law.k[(0, 0)] - 0.01).abs() < 1e-15 && (law.k[(0, 1)] - 0.195).abs() < 1e-15);
        let state = ModelState { xc: vector(&[1e-4, 2e-6]), xd: vector(&[3e-7, 4e-9, 1e-12]) };
        let x_ref = vector(&[2e-4, 1e-6]);
        let u_ref = vector(&[1e-8]);
        let cmd = law.command(&x_ref, &u_ref, &state, None);
        let expect = 1e-8 + 0.01 * (2e-4 - 1e-4) + 0.195 * (1e-6 - 2e-6 - 3e-7) - 4e-9;
        assert!((cmd.u[0] - expect).abs() < 1e-18);
        assert!(!cmd.saturated);
        let cmd = law.command(&x_ref, &u_ref, &ModelState::zeros(&m), None);
        assert!((cmd.u[0] - (1e-8 + 0.01 * 2e-4 + 0.195 * 1e-6)).abs() < 1e-18);
        let cmd = law.command(&Vector::zeros(2), &u_ref, &ModelState::zeros(&m), None);
        assert_eq!(cmd.u[0], 1e-8);
    }

    #[test]
    fn saturation() {
        let m = build_case_study_model();
        let t = 0.01;
        let law = case_study_control_law(&m, 0.1, t).unwrap();
        let cmd = law.command(&Vector::zeros(2), &vector(&[0.04 * t * t]), &ModelState::zeros(&m), None);
        assert!(cmd.saturated);
        assert!((cmd.u[0] - 0.025 * t * t).abs() < 1e-18);
        let cmd = law.command(&Vector::zeros(2), &vector(&[-0.04 * t * t]), &ModelState::zeros(&m), None);
        assert!((cmd.u[0] + 0.025 * t * t).abs() < 1e-18);
    }

    #[test]
    fn empty_profile_holds() {
        let p = ReferenceProfile::idle(0.01);
        for i in [0, 10, 10_000] {
            let s = p.sample(i);
            assert_eq!(s.x, Vector::zeros(2));
            assert_eq!(s.u[0], 0.0);
        }
    }

    #[test]
    fn single_half_turn_slew() {
        let t = 0.01;
        let pi = std::f64::consts::PI;
        let p = ReferenceProfile::new(vec![SlewRequest { start_s: 1.0, target_rad: pi }], 0.025, 0.25, t, 0.0).unwrap();
        let end = p.active_steps();
        assert!((p.sample(end).x[0] - pi).abs() < 1e-9);
        assert!(p.sample(end).x[1].abs() < 1e-12);
        assert!((p.sample(end + 5000).x[0] - pi).abs() < 1e-9);
        let mut prev = 0.0;
        let mut integral = 0.0;
        for i in 0..=end + 1 {
            let a = p.accel_si(i);
            assert!(a.abs() <= 0.025 + 1e-15);
            assert!(((a - prev) / t).abs() <= 0.25 + 1e-12);
            prev = a;
            integral += a * t;
        }
        assert!(integral.abs() < 1e-12);
        assert_eq!(p.sample(50).x, Vector::zeros(2));
    }

    #[test]
    fn short_slew_uses_triangular_acceleration() {
        let p = ReferenceProfile::new(vec![SlewRequest { start_s: 0.0, target_rad: 1e-3 }], 0.025, 0.25, 0.01, 0.0).unwrap();
        let peak = (0..p.active_steps()).map(|i| p.accel_si(i).abs()).fold(0.0, f64::max);
        assert!(peak < 0.025);
        assert!((p.sample(p.active_steps()).x[0] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn infeasible_profiles_rejected() {
        let s = |start_s, target_rad| SlewRequest { start_s, target_rad };
        assert!(ReferenceProfile::new(vec![s(0.0, 1.0)], 0.03, 0.25, 0.01, 0.0).is_err());
        assert!(ReferenceProfile::new(vec![s(0.0, 1.0)], 0.025, 0.3, 0.01, 0.0).is_err());
        assert!(ReferenceProfile::new(vec![s(0.0, 1.0)], 0.0, 0.25, 0.01, 0.0).is_err());
        assert!(ReferenceProfile::new(vec![s(0.0, 3.0), s(1.0, 0.0)], 0.025, 0.25, 0.01, 0.0).is_err());
    }

    #[test]
    fn identity_residual_vanishes() {
        let m = build_case_study_model();
        let law = case_study_control_law(&m, 0.1, 0.01).unwrap();
        let state = ModelState { xc: vector(&[0.3, 0.01]), xd: vector(&[0.002, 0.0, 0.0]) };
        let r = ReferenceSample { x: vector(&[0.35, 0.0]), u: vector(&[0.0]), y: 0.35 };
        let y = [Some(0.31), Some(0.012)];
        let em = [Some(0.31 - 0.3), Some(0.012 - 0.01)];
        let rec = record_errors(&r, &law, &state, &em, &y, None);
        assert!(rec.identity_residual().unwrap().abs() < 1e-12);
        let rec = record_errors(&r, &law, &state, &[Some(0.0), Some(0.0)], &[Some(0.3), Some(0.01)], None);
        assert_eq!(rec.e_y, Some(rec.e_hat[ATTITUDE]));
    }
}
