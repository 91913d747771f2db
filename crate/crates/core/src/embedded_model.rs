//! The real-time embedded model: controllable dynamics driven by the command
//! and by the output of a noise-driven disturbance dynamics.
//!
//! States are in per-step normalized units (attitude in rad, rate in rad/step,
//! accelerations in rad/step²). Conversion to SI happens at the plant boundary.

use std::fmt;
use std::sync::Arc;

use crate::document::MatrixDocument;
use crate::error::{dim_err, EmcError, Result};
use crate::statespace::{self, check_finite, mat, Mat, Vector, RANK_TOL};

/// Known part of a state-dependent disturbance, evaluated on the controllable
/// state and injected through the command matrix.
pub type KnownCoupling = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

#[derive(Clone, Debug, PartialEq)]
pub struct ControllableDynamics {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
}

impl ControllableDynamics {
    pub fn new(a: Mat, b: Mat, c: Mat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(EmcError::NotSquare { rows: n, cols: a.ncols() });
        }
        if b.nrows() != n {
            return Err(dim_err("B_c rows", n, b.nrows()));
        }
        if c.ncols() != n {
            return Err(dim_err("C_c columns", n, c.ncols()));
        }
        for (m, w) in [(&a, "A_c"), (&b, "B_c"), (&c, "C_c")] {
            check_finite(m, w)?;
        }
        let ctrb = statespace::rank(&statespace::controllability_matrix(&a, &b)?, RANK_TOL);
        if ctrb < n {
            return Err(EmcError::Uncontrollable { rank: ctrb, n });
        }
        let obsv = statespace::rank(&statespace::observability_matrix(&a, &c)?, RANK_TOL);
        if obsv < n {
            return Err(EmcError::Unobservable { rank: obsv, n });
        }
        Ok(Self { a, b, c })
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisturbanceDynamics {
    pub a: Mat,
    /// Noise into the disturbance state.
    pub g: Mat,
    /// Disturbance state into the controllable dynamics.
    pub h: Mat,
    /// Noise directly into the controllable dynamics.
    pub g_c: Mat,
}

impl DisturbanceDynamics {
    pub fn states(&self) -> usize {
        self.a.nrows()
    }
    pub fn noise_dim(&self) -> usize {
        self.g.ncols()
    }
}

#[derive(Clone)]
pub struct EmbeddedModel {
    pub controllable: ControllableDynamics,
    pub disturbance: DisturbanceDynamics,
    known_coupling: Option<KnownCoupling>,
}

impl fmt::Debug for EmbeddedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmbeddedModel")
            .field("controllable", &self.controllable)
            .field("disturbance", &self.disturbance)
            .field("known_coupling", &self.known_coupling.is_some())
            .finish()
    }
}

impl EmbeddedModel {
    pub fn new(controllable: ControllableDynamics, disturbance: DisturbanceDynamics) -> Result<Self> {
        let nc = controllable.states();
        let nd = disturbance.a.nrows();
        if disturbance.a.ncols() != nd {
            return Err(EmcError::NotSquare { rows: nd, cols: disturbance.a.ncols() });
        }
        if disturbance.g.nrows() != nd {
            return Err(dim_err("G_d rows", nd, disturbance.g.nrows()));
        }
        if disturbance.h.shape() != (nc, nd) {
            return Err(dim_err("H_c shape", format!("{nc}x{nd}"), format!("{:?}", disturbance.h.shape())));
        }
        if disturbance.g_c.shape() != (nc, disturbance.noise_dim()) {
            return Err(dim_err(
                "G_c shape",
                format!("{nc}x{}", disturbance.noise_dim()),
                format!("{:?}", disturbance.g_c.shape()),
            ));
        }
        for (m, w) in [
            (&disturbance.a, "A_d"),
            (&disturbance.g, "G_d"),
            (&disturbance.h, "H_c"),
            (&disturbance.g_c, "G_c"),
        ] {
            check_finite(m, w)?;
        }
        let model = Self {
            controllable,
            disturbance,
            known_coupling: None,
        };
        let n = nc + nd;
        let r = statespace::rank(
            &statespace::observability_matrix(&model.composite_a(), &model.composite_c())?,
            RANK_TOL,
        );
        if r < n {
            return Err(EmcError::Unobservable { rank: r, n });
        }
        Ok(model)
    }

    pub fn with_known_coupling(mut self, coupling: KnownCoupling) -> Self {
        self.known_coupling = Some(coupling);
        self
    }

    pub fn known_coupling(&self, xc: &Vector) -> Option<Vector> {
        self.known_coupling.as_ref().map(|h| h(xc))
    }

    pub fn nc(&self) -> usize {
        self.controllable.states()
    }
    pub fn nd(&self) -> usize {
        self.disturbance.states()
    }
    pub fn nw(&self) -> usize {
        self.disturbance.noise_dim()
    }

    /// `[[A_c, H_c], [0, A_d]]`
    pub fn composite_a(&self) -> Mat {
        let (nc, nd) = (self.nc(), self.nd());
        let mut a = Mat::zeros(nc + nd, nc + nd);
        a.view_mut((0, 0), (nc, nc)).copy_from(&self.controllable.a);
        a.view_mut((0, nc), (nc, nd)).copy_from(&self.disturbance.h);
        a.view_mut((nc, nc), (nd, nd)).copy_from(&self.disturbance.a);
        a
    }

    /// `[C_c, 0]`
    pub fn composite_c(&self) -> Mat {
        let (nc, nd) = (self.nc(), self.nd());
        let mut c = Mat::zeros(self.controllable.outputs(), nc + nd);
        c.view_mut((0, 0), (self.controllable.outputs(), nc)).copy_from(&self.controllable.c);
        c
    }

    /// `[G_c; G_d]`
    pub fn composite_noise_input(&self) -> Mat {
        let (nc, nd, nw) = (self.nc(), self.nd(), self.nw());
        let mut g = Mat::zeros(nc + nd, nw);
        g.view_mut((0, 0), (nc, nw)).copy_from(&self.disturbance.g_c);
        g.view_mut((nc, 0), (nd, nw)).copy_from(&self.disturbance.g);
        g
    }

    /// True when the disturbance enters only through the command matrix.
    pub fn is_collocated(&self) -> bool {
        let b = &self.controllable.b;
        let h = &self.disturbance.h;
        let mut joined = Mat::zeros(b.nrows(), b.ncols() + h.ncols());
        joined.view_mut((0, 0), b.shape()).copy_from(b);
        joined.view_mut((0, b.ncols()), h.shape()).copy_from(h);
        statespace::rank(&joined, RANK_TOL) == statespace::rank(b, RANK_TOL)
    }

    /// One real-time step. Returns the next state and the model output of the
    /// current (pre-update) state.
    pub fn step(&self, state: &ModelState, u: &Vector, w: &Vector) -> Result<(ModelState, Vector)> {
        if state.xc.len() != self.nc() || state.xd.len() != self.nd() {
            return Err(dim_err("model state", format!("{}+{}", self.nc(), self.nd()), format!("{}+{}", state.xc.len(), state.xd.len())));
        }
        if u.len() != self.controllable.inputs() {
            return Err(dim_err("command", self.controllable.inputs(), u.len()));
        }
        if w.len() != self.nw() {
            return Err(dim_err("noise", self.nw(), w.len()));
        }
        if !u.iter().chain(w.iter()).all(|v| v.is_finite()) {
            return Err(EmcError::NonFinite("model input"));
        }
        let ctl = &self.controllable;
        let dist = &self.disturbance;
        let mut d = &dist.h * &state.xd + &dist.g_c * w;
        if let Some(m) = self.known_coupling(&state.xc) {
            d += &ctl.b * m;
        }
        let y = &ctl.c * &state.xc;
        let next = ModelState {
            xc: &ctl.a * &state.xc + &ctl.b * u + d,
            xd: &dist.a * &state.xd + &dist.g * w,
        };
        Ok((next, y))
    }

    pub fn to_document(&self) -> MatrixDocument {
        let mut doc = MatrixDocument::new("embedded_model");
        doc.put("A_c", &self.controllable.a)
            .put("B_c", &self.controllable.b)
            .put("C_c", &self.controllable.c)
            .put("A_d", &self.disturbance.a)
            .put("G_d", &self.disturbance.g)
            .put("H_c", &self.disturbance.h)
            .put("G_c", &self.disturbance.g_c);
        doc
    }

    pub fn from_document(doc: &MatrixDocument) -> Result<Self> {
        doc.expect_kind("embedded_model")?;
        Self::new(
            ControllableDynamics::new(doc.get("A_c")?, doc.get("B_c")?, doc.get("C_c")?)?,
            DisturbanceDynamics {
                a: doc.get("A_d")?,
                g: doc.get("G_d")?,
                h: doc.get("H_c")?,
                g_c: doc.get("G_c")?,
            },
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    pub xc: Vector,
    pub xd: Vector,
}

impl ModelState {
    pub fn zeros(model: &EmbeddedModel) -> Self {
        Self {
            xc: Vector::zeros(model.nc()),
            xd: Vector::zeros(model.nd()),
        }
    }

    pub fn stacked(&self) -> Vector {
        Vector::from_iterator(self.xc.len() + self.xd.len(), self.xc.iter().chain(self.xd.iter()).copied())
    }
}

/// Multi-rate availability: output channel `k` is sampled at steps `i` with
/// `i mod decimation[k] == 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiRateSchedule {
    pub step: f64,
    pub decimation: Vec<usize>,
}

impl MultiRateSchedule {
    pub fn new(step: f64, decimation: Vec<usize>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(EmcError::InvalidParameter(format!("time step must be positive, got {step}")));
        }
        if decimation.contains(&0) {
            return Err(EmcError::InvalidParameter("decimation factors must be at least 1".into()));
        }
        Ok(Self { step, decimation })
    }

    pub fn is_available(&self, channel: usize, i: u64) -> bool {
        i.is_multiple_of(self.decimation[channel] as u64)
    }
}

/// Masked a posteriori model error: measured minus predicted output for the
/// channels sampled at step `i`, `None` elsewhere.
pub fn model_error(y: &[Option<f64>], y_hat: &Vector, schedule: &MultiRateSchedule, i: u64) -> Result<Vec<Option<f64>>> {
    if y.len() != y_hat.len() || y.len() != schedule.decimation.len() {
        return Err(dim_err("model_error channels", y_hat.len(), y.len()));
    }
    y.iter()
        .enumerate()
        .map(|(k, yk)| match (schedule.is_available(k, i), yk) {
            (true, Some(v)) => Ok(Some(v - y_hat[k])),
            (true, None) => Err(EmcError::Schedule(format!("channel {k} is due at step {i} but was not measured"))),
            (false, _) => Ok(None),
        })
        .collect()
}

/// Attitude and gyro channels of the case study.
pub const ATTITUDE: usize = 0;
pub const RATE: usize = 1;

/// Rigid single-axis attitude model with gyro-bias, rejected-acceleration and
/// acceleration-drift disturbance states `[s_g, a, s]`; noise `[w_g, w_u, w_a, w_s]`.
pub fn build_case_study_model() -> EmbeddedModel {
    build_model_with_g_c(
        mat(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0], &[0.0, 0.0, 0.0, 1.0]]),
        mat(&[&[0.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]]),
    )
}

/// Case-study model with an extra "parasitic" noise `w_q` (fifth column)
/// entering the attitude row directly, as needed by the static estimator.
pub fn build_case_study_static_model() -> EmbeddedModel {
    build_model_with_g_c(
        mat(&[
            &[1.0, 0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0, 0.0],
        ]),
        mat(&[&[0.0, 0.0, 0.0, 0.0, 1.0], &[0.0, 1.0, 0.0, 0.0, 0.0]]),
    )
}

fn build_model_with_g_c(g_d: Mat, g_c: Mat) -> EmbeddedModel {
    let controllable = ControllableDynamics::new(
        mat(&[&[1.0, 1.0], &[0.0, 1.0]]),
        mat(&[&[0.5], &[1.0]]),
        Mat::identity(2, 2),
    )
    .expect("case-study controllable dynamics are controllable and observable");
    let disturbance = DisturbanceDynamics {
        a: mat(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 1.0], &[0.0, 0.0, 1.0]]),
        g: g_d,
        h: mat(&[&[1.0, 0.5, 0.0], &[0.0, 1.0, 0.0]]),
        g_c,
    };
    EmbeddedModel::new(controllable, disturbance).expect("case-study composite model is observable")
}

/// The case-study schedule: attitude every `n_q` steps, gyro every step.
pub fn case_study_schedule(step: f64, n_q: usize) -> Result<MultiRateSchedule> {
    MultiRateSchedule::new(step, vec![n_q, 1])
}
