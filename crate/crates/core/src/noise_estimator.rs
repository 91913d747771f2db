//! Noise estimators: the only feedback path from measurements into the
//! embedded model.
//!
//! The case-study estimator is decoupled: the gyro error drives the rate
//! channel `[w_u, w_a, w_s]` every step, the attitude error drives `w_g` (and
//! `w_q` in the static form) only at attitude sample steps.

use serde::{Deserialize, Serialize};

use crate::document::MatrixDocument;
use crate::embedded_model::{
    build_case_study_model, build_case_study_static_model, EmbeddedModel, ModelState, ATTITUDE, RATE,
};
use crate::error::{dim_err, EmcError, Result};
use crate::statespace::{self, mat, place_siso, solve_diophantine, Mat, Poly, Side, Vector};

/// `w = L e + N q`, `q' = A_q q + B_q e`.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicNoiseEstimator {
    pub l: Mat,
    pub n: Mat,
    pub a_q: Mat,
    pub b_q: Mat,
    pub q: Vector,
}

impl DynamicNoiseEstimator {
    pub fn new(l: Mat, n: Mat, a_q: Mat, b_q: Mat) -> Result<Self> {
        let nq = a_q.nrows();
        if a_q.ncols() != nq {
            return Err(EmcError::NotSquare { rows: nq, cols: a_q.ncols() });
        }
        if n.shape() != (l.nrows(), nq) {
            return Err(dim_err("N shape", format!("{}x{nq}", l.nrows()), format!("{:?}", n.shape())));
        }
        if b_q.shape() != (nq, l.ncols()) {
            return Err(dim_err("B_q shape", format!("{nq}x{}", l.ncols()), format!("{:?}", b_q.shape())));
        }
        Ok(Self { l, n, a_q, b_q, q: Vector::zeros(nq) })
    }

    /// Pure estimator step from an explicit internal state.
    pub fn estimate_from(&self, q: &Vector, e: &Vector) -> Result<(Vector, Vector)> {
        if e.len() != self.l.ncols() {
            return Err(dim_err("model error", self.l.ncols(), e.len()));
        }
        if q.len() != self.a_q.nrows() {
            return Err(dim_err("estimator state", self.a_q.nrows(), q.len()));
        }
        if !e.iter().all(|v| v.is_finite()) {
            return Err(EmcError::NonFinite("model error"));
        }
        Ok((&self.l * e + &self.n * q, &self.a_q * q + &self.b_q * e))
    }

    pub fn estimate(&mut self, e: &Vector) -> Result<Vector> {
        let (w, q) = self.estimate_from(&self.q, e)?;
        self.q = q;
        Ok(w)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Dynamic,
    Static,
}

impl std::str::FromStr for EstimatorKind {
    type Err = EmcError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dynamic" => Ok(Self::Dynamic),
            "static" => Ok(Self::Static),
            other => Err(EmcError::InvalidParameter(format!("unknown estimator kind {other}"))),
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Dynamic => "dynamic",
            Self::Static => "static",
        })
    }
}

/// Attitude-channel gains of the dynamic estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttitudeGains {
    pub l: f64,
    pub m: f64,
    pub beta: f64,
}

fn check_schedule(e_q: Option<f64>, i: u64, n_q: usize) -> Result<()> {
    let due = i.is_multiple_of(n_q as u64);
    match (due, e_q) {
        (true, None) => Err(EmcError::Schedule(format!("attitude error missing at attitude step {i}"))),
        (false, Some(_)) => Err(EmcError::Schedule(format!(
            "attitude error supplied at step {i}, not a multiple of {n_q}"
        ))),
        _ => Ok(()),
    }
}

fn check_finite_errors(e_q: Option<f64>, e_g: f64) -> Result<()> {
    if e_g.is_finite() && e_q.is_none_or(f64::is_finite) {
        Ok(())
    } else {
        Err(EmcError::NonFinite("model error"))
    }
}

/// Multi-rate dynamic estimator: noise `[w_g, w_u, w_a, w_s]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseStudyEstimator {
    pub attitude: AttitudeGains,
    pub rate: [f64; 3],
    pub n_q: usize,
    /// Attitude-channel integrator state, updated at attitude steps.
    pub p: f64,
}

impl CaseStudyEstimator {
    pub fn new(attitude: AttitudeGains, rate: [f64; 3], n_q: usize) -> Result<Self> {
        if !(attitude.beta > 0.0 && attitude.beta < 2.0) {
            return Err(EmcError::InvalidParameter(format!("beta = {} outside (0, 2)", attitude.beta)));
        }
        if n_q == 0 {
            return Err(EmcError::InvalidParameter("n_q must be at least 1".into()));
        }
        Ok(Self { attitude, rate, n_q, p: 0.0 })
    }

    pub fn estimate(&mut self, e_q: Option<f64>, e_g: f64, i: u64) -> Result<Vector> {
        check_schedule(e_q, i, self.n_q)?;
        check_finite_errors(e_q, e_g)?;
        let mut w = Vector::zeros(4);
        if let Some(e) = e_q {
            let g = &self.attitude;
            w[0] = g.l * e + g.m * self.p;
            self.p = (1.0 - g.beta) * self.p + e;
        }
        w[1] = self.rate[0] * e_g;
        w[2] = self.rate[1] * e_g;
        w[3] = self.rate[2] * e_g;
        Ok(w)
    }

    /// The attitude channel as a generic dynamic estimator on the lifted rate.
    pub fn attitude_as_generic(&self) -> DynamicNoiseEstimator {
        let g = &self.attitude;
        DynamicNoiseEstimator::new(mat(&[&[g.l]]), mat(&[&[g.m]]), mat(&[&[1.0 - g.beta]]), mat(&[&[1.0]]))
            .expect("scalar estimator dimensions")
    }
}

/// Static (Kalman-like) estimator: noise `[w_g, w_u, w_a, w_s, w_q]`, with the
/// parasitic `w_q` entering the attitude row of the model directly.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticEstimator {
    /// Gains for `(w_q, w_g)` from the attitude error.
    pub l_q: [f64; 2],
    pub rate: [f64; 3],
    pub n_q: usize,
}

impl StaticEstimator {
    pub fn new(l_q: [f64; 2], rate: [f64; 3], n_q: usize) -> Result<Self> {
        if n_q == 0 {
            return Err(EmcError::InvalidParameter("n_q must be at least 1".into()));
        }
        Ok(Self { l_q, rate, n_q })
    }

    pub fn estimate(&self, e_q: Option<f64>, e_g: f64, i: u64) -> Result<Vector> {
        check_schedule(e_q, i, self.n_q)?;
        check_finite_errors(e_q, e_g)?;
        let mut w = Vector::zeros(5);
        if let Some(e) = e_q {
            w[4] = self.l_q[0] * e;
            w[0] = self.l_q[1] * e;
        }
        w[1] = self.rate[0] * e_g;
        w[2] = self.rate[1] * e_g;
        w[3] = self.rate[2] * e_g;
        Ok(w)
    }
}

/// Either case-study estimator, together with its tuning targets.
#[derive(Clone, Debug, PartialEq)]
pub enum Estimator {
    Dynamic(CaseStudyEstimator),
    Static(StaticEstimator),
}

impl Estimator {
    pub fn kind(&self) -> EstimatorKind {
        match self {
            Self::Dynamic(_) => EstimatorKind::Dynamic,
            Self::Static(_) => EstimatorKind::Static,
        }
    }

    pub fn n_q(&self) -> usize {
        match self {
            Self::Dynamic(e) => e.n_q,
            Self::Static(e) => e.n_q,
        }
    }

    pub fn rate_gains(&self) -> [f64; 3] {
        match self {
            Self::Dynamic(e) => e.rate,
            Self::Static(e) => e.rate,
        }
    }

    /// The embedded model whose noise vector this estimator produces.
    pub fn model(&self) -> EmbeddedModel {
        match self {
            Self::Dynamic(_) => build_case_study_model(),
            Self::Static(_) => build_case_study_static_model(),
        }
    }

    pub fn estimate(&mut self, e_q: Option<f64>, e_g: f64, i: u64) -> Result<Vector> {
        match self {
            Self::Dynamic(e) => e.estimate(e_q, e_g, i),
            Self::Static(e) => e.estimate(e_q, e_g, i),
        }
    }

    pub fn reset(&mut self) {
        if let Self::Dynamic(e) = self {
            e.p = 0.0;
        }
    }

    pub fn to_document(&self, gamma_attitude: f64, gamma_rate: f64) -> MatrixDocument {
        let mut doc = MatrixDocument::new("noise_estimator_gains");
        let r = self.rate_gains();
        doc.put("L_g", &mat(&[&[r[0]], &[r[1]], &[r[2]]]))
            .put_scalar("gamma_attitude", gamma_attitude)
            .put_scalar("gamma_rate", gamma_rate)
            .put_scalar("n_q", self.n_q() as f64);
        match self {
            Self::Dynamic(e) => {
                doc.put_scalar("l_q", e.attitude.l)
                    .put_scalar("m_q", e.attitude.m)
                    .put_scalar("beta_q", e.attitude.beta);
            }
            Self::Static(e) => {
                doc.put("L_q", &mat(&[&[e.l_q[0]], &[e.l_q[1]]]));
            }
        }
        doc.put_scalar("static", if self.kind() == EstimatorKind::Static { 1.0 } else { 0.0 });
        doc
    }

    pub fn from_document(doc: &MatrixDocument) -> Result<Self> {
        doc.expect_kind("noise_estimator_gains")?;
        let lg = doc.get("L_g")?;
        if lg.shape() != (3, 1) {
            return Err(EmcError::Format("L_g must be 3x1".into()));
        }
        let rate = [lg[0], lg[1], lg[2]];
        let n_q = doc.scalar("n_q")? as usize;
        if doc.scalar("static")? != 0.0 {
            let lq = doc.get("L_q")?;
            if lq.shape() != (2, 1) {
                return Err(EmcError::Format("L_q must be 2x1".into()));
            }
            Ok(Self::Static(StaticEstimator::new([lq[0], lq[1]], rate, n_q)?))
        } else {
            let attitude = AttitudeGains {
                l: doc.scalar("l_q")?,
                m: doc.scalar("m_q")?,
                beta: doc.scalar("beta_q")?,
            };
            Ok(Self::Dynamic(CaseStudyEstimator::new(attitude, rate, n_q)?))
        }
    }
}

/// A single-output channel extracted from the composite model, lifted to the
/// channel's sampling period: `x' = A x + B w`, measured `C x`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelModel {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
}

/// Restricts the composite model to `states`, driven by the noise columns
/// `noise` and observed through `output`, then lifts it over `decimation`
/// steps assuming noise is applied only at the first step of each period.
/// Couplings to states outside the channel are dropped.
pub fn extract_channel(
    model: &EmbeddedModel,
    states: &[usize],
    noise: &[usize],
    output: usize,
    decimation: usize,
) -> ChannelModel {
    let a_full = model.composite_a();
    let g_full = model.composite_noise_input();
    let c_full = model.composite_c();
    let a = Mat::from_fn(states.len(), states.len(), |i, j| a_full[(states[i], states[j])]);
    let b = Mat::from_fn(states.len(), noise.len(), |i, j| g_full[(states[i], noise[j])]);
    let c = Mat::from_fn(1, states.len(), |_, j| c_full[(output, states[j])]);
    let mut a_pow = Mat::identity(states.len(), states.len());
    for _ in 1..decimation {
        a_pow = &a * a_pow;
    }
    ChannelModel {
        a: &a * &a_pow,
        b: a_pow * b,
        c,
    }
}

/// Rate channel `(ω, a, s)` driven by `(w_u, w_a, w_s)` at the base step.
/// Composite indices: `[q, ω, s_g, a, s]`; noise `[w_g, w_u, w_a, w_s, (w_q)]`.
pub fn rate_channel(model: &EmbeddedModel) -> ChannelModel {
    extract_channel(model, &[1, 3, 4], &[1, 2, 3], RATE, 1)
}

/// Attitude channel `(q, s_g)` lifted to the attitude period, driven by `w_g`
/// (dynamic) or `(w_q, w_g)` (static).
pub fn attitude_channel(model: &EmbeddedModel, kind: EstimatorKind, n_q: usize) -> ChannelModel {
    match kind {
        EstimatorKind::Dynamic => extract_channel(model, &[0, 2], &[0], ATTITUDE, n_q),
        EstimatorKind::Static => extract_channel(model, &[0, 2], &[4, 0], ATTITUDE, n_q),
    }
}

fn check_gamma(gamma: f64, what: &str) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(EmcError::InvalidParameter(format!("{what} = {gamma} outside (0, 1)")))
    }
}

fn tune_rate(model: &EmbeddedModel, gamma: f64) -> Result<[f64; 3]> {
    let ch = rate_channel(model);
    let obs = place_siso(&ch.a, &ch.c, &Poly::repeated_root(1.0 - gamma, 3), Side::Observer)?;
    let l = ch
        .b
        .clone()
        .lu()
        .solve(&obs)
        .ok_or(EmcError::Unobservable { rank: statespace::rank(&ch.b, statespace::RANK_TOL), n: 3 })?;
    Ok([l[0], l[1], l[2]])
}

/// Assigns all eigenvalues of each channel loop to `1 - γ`: the rate channel at
/// the base step, the attitude channel at the attitude sampling period.
pub fn tune_by_eigenvalues(kind: EstimatorKind, gamma_attitude: f64, gamma_rate: f64, n_q: usize) -> Result<Estimator> {
    check_gamma(gamma_attitude, "attitude gamma")?;
    check_gamma(gamma_rate, "rate gamma")?;
    if n_q == 0 {
        return Err(EmcError::InvalidParameter("n_q must be at least 1".into()));
    }
    let est = match kind {
        EstimatorKind::Dynamic => {
            let model = build_case_study_model();
            let rate = tune_rate(&model, gamma_rate)?;
            let ch = attitude_channel(&model, kind, n_q);
            let den = statespace::char_poly(&ch.a)?;
            let num = statespace::siso_numerator(&ch.a, &ch.b, &ch.c)?;
            let (x, y) = solve_diophantine(&den, &num, &Poly::repeated_root(1.0 - gamma_attitude, 3))?;
            let beta = 1.0 + x.coeff(0);
            let l = y.coeff(1);
            let m = y.coeff(0) + l * (1.0 - beta);
            Estimator::Dynamic(CaseStudyEstimator::new(AttitudeGains { l, m, beta }, rate, n_q)?)
        }
        EstimatorKind::Static => {
            let model = build_case_study_static_model();
            let rate = tune_rate(&model, gamma_rate)?;
            let ch = attitude_channel(&model, kind, n_q);
            let g = place_siso(&ch.a, &ch.c, &Poly::repeated_root(1.0 - gamma_attitude, 2), Side::Observer)?;
            let lq = ch.b.clone().lu().solve(&g).ok_or(EmcError::Unobservable { rank: 1, n: 2 })?;
            Estimator::Static(StaticEstimator::new([lq[0], lq[1]], rate, n_q)?)
        }
    };
    let report = ChannelLoops::of(&est);
    for (name, loop_matrix, gamma) in [
        ("rate", &report.rate, gamma_rate),
        ("attitude", &report.attitude, gamma_attitude),
    ] {
        let rho = statespace::spectral_radius(loop_matrix)?;
        if (rho - (1.0 - gamma)).abs() > 1e-4 {
            return Err(EmcError::InvalidParameter(format!(
                "{name} channel placement check failed: spectral radius {rho}"
            )));
        }
    }
    Ok(est)
}

/// Homogeneous closed loops of the decoupled channels used for tuning.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelLoops {
    /// 3x3, base rate.
    pub rate: Mat,
    /// Lifted to the attitude period: 3x3 (dynamic) or 2x2 (static).
    pub attitude: Mat,
}

impl ChannelLoops {
    pub fn of(est: &Estimator) -> Self {
        let model = est.model();
        let rc = rate_channel(&model);
        let r = est.rate_gains();
        let rate = &rc.a - &rc.b * mat(&[&[r[0]], &[r[1]], &[r[2]]]) * &rc.c;
        let ac = attitude_channel(&model, est.kind(), est.n_q());
        let attitude = match est {
            Estimator::Dynamic(e) => {
                let g = &e.attitude;
                let top = &ac.a - &ac.b * g.l * &ac.c;
                let mut m = Mat::zeros(3, 3);
                m.view_mut((0, 0), (2, 2)).copy_from(&top);
                m.view_mut((0, 2), (2, 1)).copy_from(&(&ac.b * g.m));
                m.view_mut((2, 0), (1, 2)).copy_from(&(-&ac.c));
                m[(2, 2)] = 1.0 - g.beta;
                m
            }
            Estimator::Static(e) => &ac.a - &ac.b * mat(&[&[e.l_q[0]], &[e.l_q[1]]]) * &ac.c,
        };
        Self { rate, attitude }
    }
}

/// Transition matrix of the full multi-rate predictor (model states plus
/// estimator state) over one attitude period, with measurements held at zero.
/// Built by probing the runtime model and estimator with unit states.
pub fn predictor_period_map(est: &Estimator) -> Result<Mat> {
    let model = est.model();
    let (nc, nd) = (model.nc(), model.nd());
    let extra = usize::from(est.kind() == EstimatorKind::Dynamic);
    let n = nc + nd + extra;
    let mut period = Mat::identity(n, n);
    for i in 0..est.n_q() as u64 {
        let mut step = Mat::zeros(n, n);
        for j in 0..n {
            let mut basis = Vector::zeros(n);
            basis[j] = 1.0;
            let state = ModelState {
                xc: basis.rows(0, nc).into_owned(),
                xd: basis.rows(nc, nd).into_owned(),
            };
            let mut probe = est.clone();
            if let Estimator::Dynamic(e) = &mut probe {
                e.p = basis[n - 1];
            }
            let y_hat = &model.controllable.c * &state.xc;
            let e_q = (i % est.n_q() as u64 == 0).then(|| -y_hat[ATTITUDE]);
            let w = probe.estimate(e_q, -y_hat[RATE], i)?;
            let (next, _) = model.step(&state, &Vector::zeros(1), &w)?;
            let mut col = Vector::zeros(n);
            col.rows_mut(0, nc).copy_from(&next.xc);
            col.rows_mut(nc, nd).copy_from(&next.xd);
            if let Estimator::Dynamic(e) = &probe {
                col[n - 1] = e.p;
            }
            step.set_column(j, &col);
        }
        period = step * period;
    }
    Ok(period)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::{char_poly, eigenvalues, vector, Complex64};

    #[test]
    fn generic_estimator_cases() {
        let mut est = DynamicNoiseEstimator::new(Mat::identity(2, 2), Mat::zeros(2, 1), mat(&[&[0.5]]), Mat::zeros(1, 2)).unwrap();
        assert_eq!(est.estimate(&Vector::zeros(2)).unwrap(), Vector::zeros(2));
        assert_eq!(est.q, Vector::zeros(1));
        assert_eq!(est.estimate(&vector(&[0.3, -2.0])).unwrap(), vector(&[0.3, -2.0]));
        assert!(est.estimate(&vector(&[1.0])).is_err());
    }

    #[test]
    fn generic_form_reproduces_attitude_channel() {
        let gains = AttitudeGains { l: 0.2, m: -0.05, beta: 0.1 };
        let mut cs = CaseStudyEstimator::new(gains, [0.0; 3], 10).unwrap();
        let mut gen = cs.attitude_as_generic();
        for (k, e) in [1.0, -0.5, 0.25, 2.0].iter().enumerate() {
            let w = cs.estimate(Some(*e), 0.0, 10 * k as u64).unwrap();
            let wg = gen.estimate(&vector(&[*e])).unwrap();
            assert!((w[0] - wg[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn attitude_update_rule() {
        let gains = AttitudeGains { l: 0.2, m: -0.05, beta: 0.1 };
        let mut cs = CaseStudyEstimator::new(gains, [0.09, 0.0027, 2.7e-5], 10).unwrap();
        let w = cs.estimate(Some(1.0), 0.0, 0).unwrap();
        assert_eq!(w[0], 0.2);
        assert_eq!(cs.p, 1.0);
        let w = cs.estimate(None, 0.0, 3).unwrap();
        assert_eq!(w, Vector::zeros(4));
        assert_eq!(cs.p, 1.0);
        let w = cs.estimate(Some(0.0), 0.0, 10).unwrap();
        assert!((w[0] + 0.05).abs() < 1e-15);
        assert!((cs.p - 0.9).abs() < 1e-15);
        let w = cs.estimate(None, 2.0, 11).unwrap();
        assert_eq!(w, vector(&[0.0, 0.18, 0.0054, 5.4e-5]));
    }

    #[test]
    fn schedule_is_enforced() {
        let mut est = tune_by_eigenvalues(EstimatorKind::Dynamic, 0.03, 0.03, 10).unwrap();
        assert!(matches!(est.estimate(Some(0.1), 0.0, 5), Err(EmcError::Schedule(_))));
        assert!(matches!(est.estimate(None, 0.0, 20), Err(EmcError::Schedule(_))));
        let mut st = tune_by_eigenvalues(EstimatorKind::Static, 0.03, 0.03, 10).unwrap();
        assert!(matches!(st.estimate(Some(0.1), 0.0, 5), Err(EmcError::Schedule(_))));
    }

    #[test]
    fn rate_gains_closed_form() {
        let est = tune_by_eigenvalues(EstimatorKind::Dynamic, 0.03, 0.03, 10).unwrap();
        let r = est.rate_gains();
        let g: f64 = 0.03;
        assert!((r[0] - 3.0 * g).abs() < 1e-14);
        assert!((r[1] - 3.0 * g * g).abs() < 1e-15);
        assert!((r[2] - g.powi(3)).abs() < 1e-15);
    }

    #[test]
    fn dynamic_attitude_gains_closed_form() {
        let est = tune_by_eigenvalues(EstimatorKind::Dynamic, 0.03, 0.03, 10).unwrap();
        let Estimator::Dynamic(e) = est else { panic!() };
        let (g, n): (f64, f64) = (0.03, 10.0);
        let l = (3.0 * g * g - (n - 1.0) * g.powi(3) / n) / n;
        let beta = 3.0 * g - (n - 1.0) * l;
        let m = g.powi(3) / n - l * beta;
        assert!((e.attitude.l - l).abs() < 1e-15, "{} vs {l}", e.attitude.l);
        assert!((e.attitude.beta - beta).abs() < 1e-14);
        assert!((e.attitude.m - m).abs() < 1e-15);
    }

    #[test]
    fn static_attitude_gains_closed_form() {
        let est = tune_by_eigenvalues(EstimatorKind::Static, 0.03, 0.03, 10).unwrap();
        let Estimator::Static(e) = est else { panic!() };
        // lifted observer gain G = [2γ, γ²], then L_q = A^{-(N-1)} G
        let (g1, g2) = (0.06, 9e-4 / 10.0);
        assert!((e.l_q[1] - g2).abs() < 1e-16);
        assert!((e.l_q[0] - (g1 - 9.0 * g2)).abs() < 1e-15);
    }

    #[test]
    fn channel_loops_have_target_spectrum() {
        for kind in [EstimatorKind::Dynamic, EstimatorKind::Static] {
            let est = tune_by_eigenvalues(kind, 0.03, 0.05, 10).unwrap();
            let loops = ChannelLoops::of(&est);
            let n = loops.attitude.nrows();
            assert!(char_poly(&loops.attitude).unwrap().max_coeff_diff(&Poly::repeated_root(0.97, n)) < 1e-12);
            assert!(char_poly(&loops.rate).unwrap().max_coeff_diff(&Poly::repeated_root(0.95, 3)) < 1e-12);
            for z in eigenvalues(&loops.rate).unwrap() {
                assert!((z - Complex64::new(0.95, 0.0)).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn full_predictor_is_stable() {
        for kind in [EstimatorKind::Dynamic, EstimatorKind::Static] {
            let est = tune_by_eigenvalues(kind, 0.03, 0.03, 10).unwrap();
            let rho = statespace::spectral_radius(&predictor_period_map(&est).unwrap()).unwrap();
            assert!(rho < 1.0 - 0.03 / 2.0, "{kind}: {rho}");
        }
    }

    #[test]
    fn gammas_validated_and_small_gamma_gives_small_gains() {
        assert!(tune_by_eigenvalues(EstimatorKind::Dynamic, 0.0, 0.03, 10).is_err());
        assert!(tune_by_eigenvalues(EstimatorKind::Dynamic, 0.03, 1.0, 10).is_err());
        let est = tune_by_eigenvalues(EstimatorKind::Dynamic, 1e-4, 1e-4, 10).unwrap();
        let Estimator::Dynamic(e) = est else { panic!() };
        assert!(e.attitude.l.abs() < 1e-7 && e.rate[0] < 1e-3 && e.attitude.beta < 1e-3);
    }

    #[test]
    fn gains_document_round_trip() {
        for kind in [EstimatorKind::Dynamic, EstimatorKind::Static] {
            let est = tune_by_eigenvalues(kind, 0.03, 0.03, 10).unwrap();
            let doc = est.to_document(0.03, 0.03);
            let back = Estimator::from_document(&MatrixDocument::from_json(&doc.to_json().unwrap()).unwrap()).unwrap();
            assert_eq!(back, est);
        }
    }
}
