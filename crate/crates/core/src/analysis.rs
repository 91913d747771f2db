//! Frequency-domain robustness analysis of the state predictor.
//!
//! The predictor (embedded model closed by the noise estimator) maps the
//! measurement to the model error through the sensitivity `S_m`; its
//! complement `V_m = I - S_m` maps it to the predicted output. Plant/model
//! mismatch is described by the fractional error `E = M⁻¹P - 1` between the
//! uncertain plant `P` and the rigid model `M = 1/(J₀ s²)`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::embedded_model::EmbeddedModel;
use crate::error::{dim_err, EmcError, Result};
use crate::noise_estimator::{attitude_channel, rate_channel, ChannelModel, Estimator};
use crate::plant::DesignModelParams;
use crate::statespace::{self, log_grid, mat, CMat, Complex64, DiscreteLti, Mat};

/// Closed-loop predictor with the measurement as input.
///
/// States `(x, q)`: model states and estimator states. The complement `V_m`
/// reads the predicted output `C x`; the sensitivity `S_m` reads the model
/// error `y - C x`. Both are kept as separate realizations.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictorErrorSystem {
    pub a_m: Mat,
    pub b_m: Mat,
    pub c_m: Mat,
    pub step: f64,
    v: DiscreteLti,
    s: DiscreteLti,
}

impl PredictorErrorSystem {
    /// Model `x' = A x + G w`, output `C x`; estimator `w = L e + N q`, `q' = A_q q + B_q e`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(a: &Mat, g: &Mat, c: &Mat, l: &Mat, n: &Mat, a_q: &Mat, b_q: &Mat, step: f64) -> Result<Self> {
        let nx = a.nrows();
        let nq = a_q.nrows();
        let p = c.nrows();
        if g.nrows() != nx || c.ncols() != nx || l.shape() != (g.ncols(), p) {
            return Err(dim_err("predictor model/estimator", format!("G {nx}xw, C px{nx}, L wxp"), "mismatch"));
        }
        if n.shape() != (g.ncols(), nq) || b_q.shape() != (nq, p) {
            return Err(dim_err("predictor estimator state", format!("N wx{nq}, B_q {nq}xp"), "mismatch"));
        }
        let n_tot = nx + nq;
        let mut a_m = Mat::zeros(n_tot, n_tot);
        a_m.view_mut((0, 0), (nx, nx)).copy_from(&(a - g * l * c));
        a_m.view_mut((0, nx), (nx, nq)).copy_from(&(g * n));
        a_m.view_mut((nx, 0), (nq, nx)).copy_from(&(-(b_q * c)));
        a_m.view_mut((nx, nx), (nq, nq)).copy_from(a_q);
        let mut b_m = Mat::zeros(n_tot, p);
        b_m.view_mut((0, 0), (nx, p)).copy_from(&(g * l));
        b_m.view_mut((nx, 0), (nq, p)).copy_from(b_q);
        let mut c_m = Mat::zeros(p, n_tot);
        c_m.view_mut((0, 0), (p, nx)).copy_from(c);
        let v = DiscreteLti::new(a_m.clone(), b_m.clone(), c_m.clone(), Mat::zeros(p, p), step)?;
        let s = DiscreteLti::new(a_m.clone(), b_m.clone(), -&c_m, Mat::identity(p, p), step)?;
        Ok(Self { a_m, b_m, c_m, step, v, s })
    }

    /// Whole embedded model closed by a generic dynamic estimator.
    pub fn from_model(model: &EmbeddedModel, l: &Mat, n: &Mat, a_q: &Mat, b_q: &Mat, step: f64) -> Result<Self> {
        Self::new(&model.composite_a(), &model.composite_noise_input(), &model.composite_c(), l, n, a_q, b_q, step)
    }

    fn from_channel(ch: &ChannelModel, l: &Mat, n: &Mat, a_q: &Mat, b_q: &Mat, step: f64) -> Result<Self> {
        Self::new(&ch.a, &ch.b, &ch.c, l, n, a_q, b_q, step)
    }

    pub fn nyquist_hz(&self) -> f64 {
        0.5 / self.step
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        statespace::spectral_radius(&self.a_m)
    }

    pub fn is_stable(&self) -> Result<bool> {
        Ok(self.spectral_radius()? < 1.0)
    }

    pub fn v_m(&self, f_hz: f64) -> Result<CMat> {
        self.v.freq_response(f_hz)
    }

    pub fn s_m(&self, f_hz: f64) -> Result<CMat> {
        self.s.freq_response(f_hz)
    }

    /// Scalar responses of a single-output channel.
    pub fn siso(&self, f_hz: f64) -> Result<(Complex64, Complex64)> {
        Ok((self.s_m(f_hz)?[(0, 0)], self.v_m(f_hz)?[(0, 0)]))
    }
}

/// Decoupled case-study channels: attitude at the attitude period, rate at
/// the base step.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseStudyChannels {
    pub attitude: PredictorErrorSystem,
    pub rate: PredictorErrorSystem,
}

pub fn build_predictor_error_system(est: &Estimator, step: f64) -> Result<CaseStudyChannels> {
    let model = est.model();
    let n_q = est.n_q();
    let ach = attitude_channel(&model, est.kind(), n_q);
    let step_q = step * n_q as f64;
    let attitude = match est {
        Estimator::Dynamic(e) => {
            let g = &e.attitude;
            PredictorErrorSystem::from_channel(&ach, &mat(&[&[g.l]]), &mat(&[&[g.m]]), &mat(&[&[1.0 - g.beta]]), &mat(&[&[1.0]]), step_q)?
        }
        Estimator::Static(e) => PredictorErrorSystem::from_channel(
            &ach,
            &mat(&[&[e.l_q[0]], &[e.l_q[1]]]),
            &Mat::zeros(2, 0),
            &Mat::zeros(0, 0),
            &Mat::zeros(0, 1),
            step_q,
        )?,
    };
    let r = est.rate_gains();
    let rate = PredictorErrorSystem::from_channel(
        &rate_channel(&model),
        &mat(&[&[r[0]], &[r[1]], &[r[2]]]),
        &Mat::zeros(3, 0),
        &Mat::zeros(0, 0),
        &Mat::zeros(0, 1),
        step,
    )?;
    Ok(CaseStudyChannels { attitude, rate })
}

/// `S_m` and `V_m` at each grid frequency.
pub fn sensitivities(sys: &PredictorErrorSystem, grid: &[f64]) -> Result<Vec<(f64, CMat, CMat)>> {
    grid.iter().map(|&f| Ok((f, sys.s_m(f)?, sys.v_m(f)?))).collect()
}

/// Slope of `|H|` in decades per decade between two frequencies.
pub fn log_slope(h1: Complex64, f1: f64, h2: Complex64, f2: f64) -> f64 {
    (h2.norm() / h1.norm()).log10() / (f2 / f1).log10()
}

fn jw(f_hz: f64) -> Complex64 {
    Complex64::new(0.0, 2.0 * PI * f_hz)
}

/// Flexible-mode factor `v² + 2ζv` with `v = s/ω_f`.
fn flex_term(p: &DesignModelParams, s: Complex64) -> Complex64 {
    let v = s / p.omega_f;
    v * v + v * (2.0 * p.zeta_f)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FractionalError {
    /// `M⁻¹P - 1`.
    pub exact: Complex64,
    /// First-order expansion `-(1-∂J)/(sτ+1) + ∂J + v² + 2ζv`.
    pub approx: Complex64,
    /// Neglected high-frequency dynamics `1/(1 + v² + 2ζv) - 1`.
    pub neglected: Complex64,
}

/// Whether a channel's sensor sees the flexible mode. The gyro reads the
/// rigid rate, so the rate channel is `Rigid` and only friction and inertia
/// errors reach it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeExposure {
    Flexible,
    Rigid,
}

pub fn fractional_error(p: &DesignModelParams, f_hz: f64) -> FractionalError {
    fractional_error_for(p, f_hz, ModeExposure::Flexible)
}

pub fn fractional_error_for(p: &DesignModelParams, f_hz: f64, exposure: ModeExposure) -> FractionalError {
    let s = jw(f_hz);
    let x = match exposure {
        ModeExposure::Flexible => flex_term(p, s),
        ModeExposure::Rigid => Complex64::new(0.0, 0.0),
    };
    let st1 = s * p.tau + 1.0;
    let exact = if f_hz == 0.0 {
        Complex64::new(-1.0, 0.0)
    } else {
        s * p.tau / (st1 * (1.0 + p.d_j) * (x + 1.0)) - 1.0
    };
    let approx = -(1.0 - p.d_j) / st1 + p.d_j + x;
    let neglected = Complex64::new(1.0, 0.0) / (x + 1.0) - 1.0;
    FractionalError { exact, approx, neglected }
}

/// Friction and inertia mismatch routed through the disturbance channel:
/// `M ∂m ≈ -1/(sτ) - ∂J`. Unbounded at `f = 0`.
pub fn cross_coupling(p: &DesignModelParams, f_hz: f64) -> Result<Complex64> {
    if f_hz == 0.0 {
        return Err(EmcError::Singular { f_hz });
    }
    Ok(-Complex64::new(1.0, 0.0) / (jw(f_hz) * p.tau) - p.d_j)
}

/// Winding number of a closed curve around `point`.
pub fn winding_number(curve: &[Complex64], point: Complex64) -> i64 {
    if curve.len() < 2 {
        return 0;
    }
    let mut total = 0.0;
    for k in 0..curve.len() {
        let a = curve[k] - point;
        let b = curve[(k + 1) % curve.len()] - point;
        total += (b / a).arg();
    }
    (total / (2.0 * PI)).round() as i64
}

/// Frequencies `(-f_max, f_max]` ordered for a Nyquist contour: a log grid
/// mirrored to negative frequencies plus DC.
pub fn nyquist_contour(f_lo: f64, f_max: f64, per_decade: usize) -> Vec<f64> {
    let pos = log_grid(f_lo, f_max, per_decade);
    let mut out: Vec<f64> = pos.iter().rev().map(|f| -f).collect();
    out.push(0.0);
    out.extend(pos);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CornerReport {
    pub corner_id: usize,
    pub params: DesignModelParams,
    /// `max |V_m ∂E|`
    pub v_de_max: f64,
    /// `max |S_m M∂m|`
    pub s_dm_max: f64,
    pub eta: f64,
    /// `max |V_m E|` with the exact fractional error.
    pub v_e_max: f64,
    /// Winding of `V_m ∂E` around `-1`.
    pub winding: i64,
    pub grid_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub channel: String,
    pub exposure: ModeExposure,
    pub nyquist_hz: f64,
    pub predictor_spectral_radius: f64,
    pub corners: Vec<CornerReport>,
    /// Worst combined bound over corners.
    pub eta: f64,
    /// Sufficient condition `η < 1`.
    pub small_gain_pass: bool,
    /// Sufficient condition `max |V_m E| < 1` with the exact fractional error.
    pub strict_pass: bool,
    /// Worst `η` on a grid four times coarser, to show grid sensitivity.
    pub eta_coarse: f64,
    pub no_encirclement: bool,
}

fn corner_report(
    sys: &PredictorErrorSystem,
    exposure: ModeExposure,
    corner_id: usize,
    p: &DesignModelParams,
    per_decade: usize,
) -> Result<CornerReport> {
    let f_max = sys.nyquist_hz();
    let contour = nyquist_contour(1e-5, f_max, per_decade);
    let mut v_de_max: f64 = 0.0;
    let mut s_dm_max: f64 = 0.0;
    let mut v_e_max: f64 = 0.0;
    let mut curve = Vec::with_capacity(contour.len());
    for &f in &contour {
        let (s, v) = sys.siso(f)?;
        let e = fractional_error_for(p, f, exposure);
        let vde = v * e.neglected;
        curve.push(vde);
        v_de_max = v_de_max.max(vde.norm());
        v_e_max = v_e_max.max((v * e.exact).norm());
        if f != 0.0 {
            s_dm_max = s_dm_max.max((s * cross_coupling(p, f)?).norm());
        }
    }
    Ok(CornerReport {
        corner_id,
        params: *p,
        v_de_max,
        s_dm_max,
        eta: v_de_max + s_dm_max,
        v_e_max,
        winding: winding_number(&curve, Complex64::new(-1.0, 0.0)),
        grid_points: contour.len(),
    })
}

/// Small-gain certification over parameter corners. `η` is reported whether
/// or not it meets the sufficient bound.
pub fn small_gain_check(
    sys: &PredictorErrorSystem,
    channel: &str,
    exposure: ModeExposure,
    corners: &[DesignModelParams],
    per_decade: usize,
) -> Result<StabilityReport> {
    let reports: Vec<CornerReport> = corners
        .par_iter()
        .enumerate()
        .map(|(k, p)| corner_report(sys, exposure, k, p, per_decade))
        .collect::<Result<_>>()?;
    let coarse: Vec<f64> = corners
        .par_iter()
        .enumerate()
        .map(|(k, p)| corner_report(sys, exposure, k, p, (per_decade / 4).max(1)).map(|r| r.eta))
        .collect::<Result<_>>()?;
    let eta = reports.iter().map(|r| r.eta).fold(0.0, f64::max);
    let v_e = reports.iter().map(|r| r.v_e_max).fold(0.0, f64::max);
    Ok(StabilityReport {
        channel: channel.to_string(),
        exposure,
        nyquist_hz: sys.nyquist_hz(),
        predictor_spectral_radius: sys.spectral_radius()?,
        no_encirclement: reports.iter().all(|r| r.winding == 0),
        corners: reports,
        eta,
        small_gain_pass: eta < 1.0,
        strict_pass: v_e < 1.0,
        eta_coarse: coarse.into_iter().fold(0.0, f64::max),
    })
}

/// `ΔS = (1 + V_m ∂E - S_m M∂m)⁻¹`; `None` where the bracket vanishes.
pub fn error_loop_operator(s: Complex64, v: Complex64, de: Complex64, dm: Complex64) -> Option<Complex64> {
    let denom = Complex64::new(1.0, 0.0) + v * de - s * dm;
    (denom.norm() > 1e-12).then(|| Complex64::new(1.0, 0.0) / denom)
}

/// Forced a priori tracking error `ΔS [V_m (E + W_y) - S_m M(Δm + D)]` at one
/// frequency, given the output-noise spectrum `W_y` and the disturbance
/// spectrum `D` seen through the model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorLoopPoint {
    pub f_hz: f64,
    pub delta_s: Complex64,
    pub e_y: Complex64,
}

pub fn error_loop_response(
    sys: &PredictorErrorSystem,
    de: impl Fn(f64) -> Complex64,
    dm: impl Fn(f64) -> Complex64,
    input: impl Fn(f64) -> (Complex64, Complex64),
    grid: &[f64],
) -> Result<Vec<ErrorLoopPoint>> {
    grid.iter()
        .map(|&f| {
            let (s, v) = sys.siso(f)?;
            let delta_s = error_loop_operator(s, v, de(f), dm(f)).ok_or(EmcError::Singular { f_hz: f })?;
            let (out_noise, dist) = input(f);
            Ok(ErrorLoopPoint { f_hz: f, delta_s, e_y: delta_s * (v * out_noise - s * dist) })
        })
        .collect()
}

/// RMS of a white input of standard deviation `sigma` sampled at the system
/// rate after filtering by `h`, from the one-sided integral of `|h|²`.
pub fn white_noise_rms(h: impl Fn(f64) -> Result<Complex64>, sigma: f64, f_max: f64, points: usize) -> Result<f64> {
    let df = f_max / points as f64;
    let mut acc = 0.0;
    for k in 0..points {
        let f = (k as f64 + 0.5) * df;
        acc += h(f)?.norm_sqr();
    }
    Ok(sigma * (acc / points as f64).sqrt())
}

/// One row of a Bode/Nyquist export.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseRow {
    pub f_hz: f64,
    pub value: Complex64,
    pub channel: String,
    pub corner_id: Option<usize>,
}

pub fn write_response_csv(path: &Path, header_comment: &str, rows: &[ResponseRow]) -> Result<()> {
    let io = |source| EmcError::Io { path: path.to_path_buf(), source };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(f, "# {header_comment}").map_err(io)?;
    writeln!(f, "f_hz,re,im,mag_db,phase_deg,channel,corner_id").map_err(io)?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{}",
            r.f_hz,
            r.value.re,
            r.value.im,
            20.0 * r.value.norm().log10(),
            r.value.arg().to_degrees(),
            r.channel,
            r.corner_id.map(|c| c.to_string()).unwrap_or_default()
        )
        .map_err(io)?;
    }
    f.flush().map_err(io)
}

/// Bode rows of `S_m` and `V_m` plus the Nyquist rows of `V_m ∂E` per corner.
pub fn response_rows(
    sys: &PredictorErrorSystem,
    channel: &str,
    exposure: ModeExposure,
    corners: &[DesignModelParams],
    per_decade: usize,
) -> Result<Vec<ResponseRow>> {
    let mut rows = Vec::new();
    for f in log_grid(1e-5, sys.nyquist_hz(), per_decade) {
        let (s, v) = sys.siso(f)?;
        rows.push(ResponseRow { f_hz: f, value: s, channel: format!("{channel}_S"), corner_id: None });
        rows.push(ResponseRow { f_hz: f, value: v, channel: format!("{channel}_V"), corner_id: None });
    }
    for (k, p) in corners.iter().enumerate() {
        for f in nyquist_contour(1e-5, sys.nyquist_hz(), per_decade) {
            let (_, v) = sys.siso(f)?;
            rows.push(ResponseRow {
                f_hz: f,
                value: v * fractional_error_for(p, f, exposure).neglected,
                channel: format!("{channel}_VdE"),
                corner_id: Some(k),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedded_model::build_case_study_model;
    use crate::noise_estimator::{tune_by_eigenvalues, EstimatorKind};

    fn channels(kind: EstimatorKind, gamma: f64) -> CaseStudyChannels {
        build_predictor_error_system(&tune_by_eigenvalues(kind, gamma, gamma, 10).unwrap(), 0.01).unwrap()
    }

    #[test]
    fn zero_gains_leave_open_loop_integrators() {
        let model = build_case_study_model();
        let sys = PredictorErrorSystem::from_model(&model, &Mat::zeros(4, 2), &Mat::zeros(4, 0), &Mat::zeros(0, 0), &Mat::zeros(0, 2), 0.01).unwrap();
        assert_eq!(sys.a_m, model.composite_a());
        assert!(!sys.is_stable().unwrap());
    }

    #[test]
    fn tuned_channels_are_stable_and_sized() {
        let dynamic = channels(EstimatorKind::Dynamic, 0.03);
        let stat = channels(EstimatorKind::Static, 0.03);
        assert!(dynamic.attitude.is_stable().unwrap() && dynamic.rate.is_stable().unwrap());
        assert_eq!(dynamic.attitude.a_m.nrows(), 3);
        assert_eq!(stat.attitude.a_m.nrows(), 2);
        assert!((dynamic.attitude.spectral_radius().unwrap() - 0.97).abs() < 1e-9);
    }

    #[test]
    fn complement_identity_and_shapes() {
        let ch = channels(EstimatorKind::Dynamic, 0.03);
        for sys in [&ch.attitude, &ch.rate] {
            for f in log_grid(1e-4, sys.nyquist_hz(), 40) {
                let (s, v) = sys.siso(f).unwrap();
                assert!((s + v - 1.0).norm() < 1e-12);
            }
            let (s_lo, _) = sys.siso(1e-5).unwrap();
            assert!(s_lo.norm() < 1e-6);
            let (_, v_hi) = sys.siso(sys.nyquist_hz()).unwrap();
            let (_, v_mid) = sys.siso(sys.nyquist_hz() / 100.0).unwrap();
            assert!(v_hi.norm() < v_mid.norm());
        }
    }

    #[test]
    fn low_frequency_slopes() {
        let ch = channels(EstimatorKind::Dynamic, 0.03);
        let slope = |sys: &PredictorErrorSystem| {
            let (s1, _) = sys.siso(1e-4).unwrap();
            let (s2, _) = sys.siso(1e-3).unwrap();
            log_slope(s1, 1e-4, s2, 1e-3)
        };
        assert!(slope(&ch.rate) > 2.9);
        assert!(slope(&ch.attitude) > 1.9);
    }

    #[test]
    fn fractional_error_limits() {
        let p = DesignModelParams::nominal();
        assert!((fractional_error(&p, 1e3).exact.norm() - 1.0).abs() < 1e-3);
        assert_eq!(fractional_error(&p, 0.0).approx, Complex64::new(-1.0, 0.0));
        let q = DesignModelParams { d_j: 0.15, ..p };
        assert!((fractional_error(&q, 0.0).approx.re - (2.0 * 0.15 - 1.0)).abs() < 1e-15);
        assert_eq!(fractional_error(&p, 0.0).exact, Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn exact_and_approximate_agree_outside_the_notch() {
        let p = DesignModelParams::nominal();
        let f_f = p.omega_f / (2.0 * PI);
        let rel = |f: f64| {
            let e = fractional_error(&p, f);
            (e.exact.norm() - e.approx.norm()).abs() / e.exact.norm()
        };
        for f in log_grid(1e-3, 0.09, 50).into_iter().chain(log_grid(0.25, f_f / 3.5, 50)) {
            assert!(rel(f) < 0.1, "f={f} rel={}", rel(f));
        }
        // where friction roll-off and flexible term cancel, |E| dips and the
        // first-order form is off by up to ~20%; at f_f/3 the gap is ~10.6%
        let worst = log_grid(0.09, 0.25, 200).into_iter().map(rel).fold(0.0, f64::max);
        assert!(worst > 0.1 && worst < 0.25, "{worst}");
        assert!((rel(f_f / 3.0) - 0.106).abs() < 0.005);
    }

    #[test]
    fn cross_coupling_limits() {
        let p = DesignModelParams::nominal();
        assert!(cross_coupling(&p, 1e3).unwrap().norm() < 1e-5);
        assert!(cross_coupling(&p, 1e-7).unwrap().norm() > 1e4);
        assert!(cross_coupling(&p, 0.0).is_err());
    }

    #[test]
    fn winding_of_circles() {
        let circle = |c: Complex64, r: f64| (0..100).map(|k| c + Complex64::from_polar(r, 2.0 * PI * k as f64 / 100.0)).collect::<Vec<_>>();
        assert_eq!(winding_number(&circle(Complex64::new(-1.0, 0.0), 0.5), Complex64::new(-1.0, 0.0)), 1);
        assert_eq!(winding_number(&circle(Complex64::new(0.0, 0.0), 0.5), Complex64::new(-1.0, 0.0)), 0);
        let back: Vec<_> = circle(Complex64::new(-1.0, 0.0), 0.5).into_iter().rev().collect();
        assert_eq!(winding_number(&back, Complex64::new(-1.0, 0.0)), -1);
    }

    #[test]
    fn no_uncertainty_gives_zero_eta() {
        let ch = channels(EstimatorKind::Dynamic, 0.03);
        let rigid = DesignModelParams { d_j: 0.0, tau: 1e300, omega_f: 1e300, zeta_f: 0.01, j0: 1200.0 };
        let r = small_gain_check(&ch.attitude, "attitude", ModeExposure::Flexible, &[rigid], 40).unwrap();
        assert!(r.eta < 1e-12, "{}", r.eta);
        assert!(r.small_gain_pass);
    }

    #[test]
    fn error_loop_without_uncertainty_is_identity() {
        let ch = channels(EstimatorKind::Dynamic, 0.03);
        let grid = log_grid(1e-3, 1.0, 10);
        let pts = error_loop_response(
            &ch.attitude,
            |_| Complex64::new(0.0, 0.0),
            |_| Complex64::new(0.0, 0.0),
            |_| (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
            &grid,
        )
        .unwrap();
        for p in pts {
            assert_eq!(p.delta_s, Complex64::new(1.0, 0.0));
            let (_, v) = ch.attitude.siso(p.f_hz).unwrap();
            assert!((p.e_y - v).norm() < 1e-15);
        }
    }

    #[test]
    fn flexible_output_lags_rigid_response_over_first_step() {
        use crate::plant::build_plant;
        let p = DesignModelParams::nominal();
        let t = 0.01;
        let plant = build_plant(&p, t).unwrap();
        let u = crate::statespace::vector(&[1.0, 0.0]);
        let x1 = &plant.b * &u;
        let flex = x1[2].abs();
        let rigid = t * t / (2.0 * p.j0);
        assert!(flex / rigid < 0.1);
    }
}
