//! Dense linear state-space machinery.
//!
//! Everything here works on small (≤ ~10 states) dense matrices: simulation,
//! characteristic polynomials, eigenvalues, single-channel pole placement,
//! zero-order-hold discretization and frequency response. Frequencies are
//! always in Hz; a discrete system with step `T` is evaluated at
//! `z = exp(j·2π·f·T)`, a continuous one at `s = j·2π·f`.

use nalgebra::{Complex, DMatrix, DVector, SVD};

use crate::error::{dim_err, EmcError, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;
pub type Complex64 = Complex<f64>;
pub type CMat = DMatrix<Complex64>;

/// Builds a matrix from row slices. Panics on ragged input; intended for literals.
pub fn mat(rows: &[&[f64]]) -> Mat {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    assert!(rows.iter().all(|row| row.len() == c), "ragged matrix literal");
    Mat::from_fn(r, c, |i, j| rows[i][j])
}

pub fn vector(values: &[f64]) -> Vector {
    Vector::from_column_slice(values)
}

pub(crate) fn check_finite(m: &Mat, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(EmcError::NonFinite(what))
    }
}

fn check_square(a: &Mat) -> Result<usize> {
    if a.nrows() == a.ncols() {
        Ok(a.nrows())
    } else {
        Err(EmcError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        })
    }
}

/// Polynomial in `z`, coefficients stored highest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    /// General polynomial; leading zeros are stripped.
    pub fn new(coeffs: Vec<f64>) -> Self {
        let first = coeffs.iter().position(|c| *c != 0.0).unwrap_or(coeffs.len().saturating_sub(1));
        let coeffs = if coeffs.is_empty() { vec![0.0] } else { coeffs[first..].to_vec() };
        Self { coeffs }
    }

    /// Monic polynomial; rejects a leading coefficient other than one.
    pub fn monic(coeffs: Vec<f64>) -> Result<Self> {
        match coeffs.first() {
            Some(&1.0) => Ok(Self { coeffs }),
            _ => Err(EmcError::InvalidParameter(
                "monic polynomial must have leading coefficient 1".into(),
            )),
        }
    }

    pub fn from_real_roots(roots: &[f64]) -> Self {
        roots.iter().fold(Self { coeffs: vec![1.0] }, |acc, r| acc.mul(&Self { coeffs: vec![1.0, -r] }))
    }

    /// `(z - root)^n`
    pub fn repeated_root(root: f64, n: usize) -> Self {
        Self::from_real_roots(&vec![root; n])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs[0] == 1.0
    }

    /// Coefficient of `z^k`.
    pub fn coeff(&self, k: usize) -> f64 {
        if k > self.degree() {
            0.0
        } else {
            self.coeffs[self.degree() - k]
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.degree().max(other.degree());
        Poly::new((0..=n).rev().map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + Complex64::new(*c, 0.0))
    }

    /// Horner evaluation with a square matrix argument.
    pub fn eval_matrix(&self, a: &Mat) -> Mat {
        let n = a.nrows();
        self.coeffs
            .iter()
            .fold(Mat::zeros(n, n), |acc, c| a * acc + Mat::identity(n, n) * *c)
    }

    /// Largest coefficient-wise absolute difference (degrees must agree).
    pub fn max_coeff_diff(&self, other: &Poly) -> f64 {
        let n = self.degree().max(other.degree());
        (0..=n)
            .map(|k| (self.coeff(k) - other.coeff(k)).abs())
            .fold(0.0, f64::max)
    }
}

/// Characteristic polynomial `det(zI - A)` by the Faddeev–LeVerrier recursion.
pub fn char_poly(a: &Mat) -> Result<Poly> {
    let n = check_square(a)?;
    let mut coeffs = vec![0.0; n + 1];
    coeffs[0] = 1.0;
    let id = Mat::identity(n, n);
    let mut m = Mat::zeros(n, n);
    for k in 1..=n {
        m = a * &m + &id * coeffs[k - 1];
        coeffs[k] = -(a * &m).trace() / k as f64;
    }
    Ok(Poly { coeffs })
}

/// Raw eigenvalues from the real Schur form.
pub fn schur_eigenvalues(a: &Mat) -> Result<Vec<Complex64>> {
    check_square(a)?;
    check_finite(a, "eigenvalue input")?;
    let eig = a.clone().complex_eigenvalues();
    Ok(eig.iter().copied().collect())
}

fn null_vector(m: &CMat) -> Option<DVector<Complex64>> {
    let svd = SVD::new(m.clone(), false, true);
    let v_t = svd.v_t?;
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    Some(v_t.row(idx).transpose().map(|c| c.conj()))
}

/// Sensitivity `1/|y^H x|` of each eigenvalue (unit left/right eigenvectors).
pub fn eigenvalue_condition_numbers(a: &Mat, eig: &[Complex64]) -> Vec<f64> {
    let n = a.nrows();
    let ac: CMat = a.map(|v| Complex64::new(v, 0.0));
    eig.iter()
        .map(|&lambda| {
            let shifted = &ac - CMat::identity(n, n) * lambda;
            let right = null_vector(&shifted);
            let left = null_vector(&shifted.adjoint());
            match (right, left) {
                (Some(x), Some(y)) => {
                    let dot = y.dotc(&x).norm();
                    if dot > 0.0 {
                        1.0 / dot
                    } else {
                        f64::INFINITY
                    }
                }
                _ => f64::INFINITY,
            }
        })
        .collect()
}

/// Eigenvalues with multiple-eigenvalue clusters resolved.
///
/// A repeated (defective) eigenvalue of multiplicity k is only determined to
/// about `eps^(1/k)` by any backward-stable solver, while the mean of the
/// cluster stays accurate to working precision. Eigenvalues whose distance is
/// within their own first-order perturbation bound `8 (κ_i + κ_j) eps ‖A‖` are
/// grouped and reported as the cluster mean. Well-separated or
/// well-conditioned eigenvalues are returned untouched.
pub fn eigenvalues(a: &Mat) -> Result<Vec<Complex64>> {
    let raw = schur_eigenvalues(a)?;
    if raw.len() < 2 {
        return Ok(raw);
    }
    let kappa = eigenvalue_condition_numbers(a, &raw);
    let scale = a.norm().max(f64::MIN_POSITIVE) * f64::EPSILON * 8.0;
    let n = raw.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let bound = (kappa[i] + kappa[j]) * scale;
            if (raw[i] - raw[j]).norm() <= bound {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut out = raw.clone();
    for (i, slot) in out.iter_mut().enumerate() {
        let root = find(&mut parent, i);
        let members: Vec<usize> = (0..n).filter(|&j| find(&mut parent, j) == root).collect();
        if members.len() > 1 {
            let mean = members.iter().map(|&j| raw[j]).sum::<Complex64>() / members.len() as f64;
            // a cluster that straddles the real axis is real
            let bound = members.iter().map(|&j| kappa[j]).fold(0.0, f64::max) * scale;
            *slot = if mean.im.abs() <= bound {
                Complex64::new(mean.re, 0.0)
            } else {
                mean
            };
        }
    }
    Ok(out)
}

pub fn spectral_radius(a: &Mat) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Numerical rank from singular values, relative tolerance `tol`.
pub fn rank(m: &Mat, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > tol * max).count()
}

pub const RANK_TOL: f64 = 1e-10;

/// `[B, AB, ..., A^{n-1}B]`
pub fn controllability_matrix(a: &Mat, b: &Mat) -> Result<Mat> {
    let n = check_square(a)?;
    if b.nrows() != n {
        return Err(dim_err("controllability", format!("{n} rows"), b.nrows()));
    }
    let m = b.ncols();
    let mut out = Mat::zeros(n, n * m);
    let mut blk = b.clone();
    for k in 0..n {
        out.view_mut((0, k * m), (n, m)).copy_from(&blk);
        blk = a * blk;
    }
    Ok(out)
}

/// `[C; CA; ...; CA^{n-1}]`
pub fn observability_matrix(a: &Mat, c: &Mat) -> Result<Mat> {
    let n = check_square(a)?;
    if c.ncols() != n {
        return Err(dim_err("observability", format!("{n} columns"), c.ncols()));
    }
    let p = c.nrows();
    let mut out = Mat::zeros(n * p, n);
    let mut blk = c.clone();
    for k in 0..n {
        out.view_mut((k * p, 0), (p, n)).copy_from(&blk);
        blk *= a;
    }
    Ok(out)
}

pub fn is_controllable(a: &Mat, b: &Mat) -> Result<bool> {
    let n = check_square(a)?;
    Ok(rank(&controllability_matrix(a, b)?, RANK_TOL) == n)
}

pub fn is_observable(a: &Mat, c: &Mat) -> Result<bool> {
    let n = check_square(a)?;
    Ok(rank(&observability_matrix(a, c)?, RANK_TOL) == n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Gain `L` (n×1) with `char(A - L·C) = desired`; `inject` is the 1×n output row.
    Observer,
    /// Gain `K` (1×n) with `char(A - B·K) = desired`; `inject` is the n×1 input column.
    Controller,
}

/// Single-channel eigenvalue assignment by Ackermann's formula.
///
/// The observer case is handled by duality on `(Aᵀ, Cᵀ)`.
pub fn place_siso(a: &Mat, inject: &Mat, desired: &Poly, side: Side) -> Result<Mat> {
    let n = check_square(a)?;
    if !desired.is_monic() {
        return Err(EmcError::InvalidParameter("desired polynomial must be monic".into()));
    }
    if desired.degree() != n {
        return Err(EmcError::DegreeMismatch {
            expected: n,
            found: desired.degree(),
        });
    }
    let (a_ctrl, b_ctrl) = match side {
        Side::Controller => {
            if inject.shape() != (n, 1) {
                return Err(dim_err("place_siso input column", format!("{n}x1"), format!("{:?}", inject.shape())));
            }
            (a.clone(), inject.clone())
        }
        Side::Observer => {
            if inject.shape() != (1, n) {
                return Err(dim_err("place_siso output row", format!("1x{n}"), format!("{:?}", inject.shape())));
            }
            (a.transpose(), inject.transpose())
        }
    };
    let ctrb = controllability_matrix(&a_ctrl, &b_ctrl)?;
    let r = rank(&ctrb, RANK_TOL);
    if r < n {
        return Err(match side {
            Side::Controller => EmcError::Uncontrollable { rank: r, n },
            Side::Observer => EmcError::Unobservable { rank: r, n },
        });
    }
    let mut last = Mat::zeros(1, n);
    last[(0, n - 1)] = 1.0;
    // e_nᵀ 𝒞⁻¹ via the transposed solve
    let row = ctrb
        .transpose()
        .lu()
        .solve(&last.transpose())
        .ok_or(EmcError::Uncontrollable { rank: r, n })?
        .transpose();
    let gain = row * desired.eval_matrix(&a_ctrl);
    Ok(match side {
        Side::Controller => gain,
        Side::Observer => gain.transpose(),
    })
}

/// Monic `X` and `Y` with `den·X + num·Y = target`, `deg Y = deg den - 1`.
///
/// Places the closed-loop characteristic polynomial of a single-loop plant
/// `num/den` under a dynamic compensator `Y/X`.
pub fn solve_diophantine(den: &Poly, num: &Poly, target: &Poly) -> Result<(Poly, Poly)> {
    let dd = den.degree();
    let dt = target.degree();
    if dd == 0 || dt < dd || num.degree() >= dd {
        return Err(EmcError::DegreeMismatch { expected: dd, found: dt });
    }
    let dx = dt - dd;
    let unknowns = dx + dd;
    // rows: coefficients z^0 .. z^{dt-1}; leading z^{dt} is matched by monic X
    let mut m = Mat::zeros(unknowns, unknowns);
    let mut rhs = Vector::zeros(unknowns);
    for row in 0..unknowns {
        rhs[row] = target.coeff(row) - if row >= dx { den.coeff(row - dx) } else { 0.0 };
    }
    for k in 0..dx {
        for row in 0..unknowns {
            if row >= k {
                m[(row, k)] = den.coeff(row - k);
            }
        }
    }
    for k in 0..dd {
        for row in 0..unknowns {
            if row >= k {
                m[(row, dx + k)] = num.coeff(row - k);
            }
        }
    }
    let sol = m.clone().lu().solve(&rhs).ok_or(EmcError::RankDeficient {
        rank: rank(&m, RANK_TOL),
        unknowns,
        residual: f64::NAN,
    })?;
    let mut x = vec![1.0];
    x.extend((0..dx).rev().map(|k| sol[k]));
    let y: Vec<f64> = (0..dd).rev().map(|k| sol[dx + k]).collect();
    Ok((Poly { coeffs: x }, Poly::new(y)))
}

/// Transfer-function numerator of the single-channel system `(A, b, c)`:
/// `c·adj(zI - A)·b = det(zI - A + b·c) - det(zI - A)`.
pub fn siso_numerator(a: &Mat, b: &Mat, c: &Mat) -> Result<Poly> {
    let n = check_square(a)?;
    if b.shape() != (n, 1) || c.shape() != (1, n) {
        return Err(dim_err("siso_numerator", format!("{n}x1 and 1x{n}"), format!("{:?}, {:?}", b.shape(), c.shape())));
    }
    Ok(char_poly(&(a - b * c))?.sub(&char_poly(a)?))
}

fn check_lti(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> Result<()> {
    let n = check_square(a)?;
    if b.nrows() != n {
        return Err(dim_err("B rows", n, b.nrows()));
    }
    if c.ncols() != n {
        return Err(dim_err("C columns", n, c.ncols()));
    }
    if d.shape() != (c.nrows(), b.ncols()) {
        return Err(dim_err("D shape", format!("{}x{}", c.nrows(), b.ncols()), format!("{}x{}", d.nrows(), d.ncols())));
    }
    for (m, w) in [(a, "A"), (b, "B"), (c, "C"), (d, "D")] {
        check_finite(m, w)?;
    }
    Ok(())
}

/// `x(i+1) = A x(i) + B u(i)`, `y(i) = C x(i) + D u(i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteLti {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
    pub step: f64,
}

impl DiscreteLti {
    pub fn new(a: Mat, b: Mat, c: Mat, d: Mat, step: f64) -> Result<Self> {
        check_lti(&a, &b, &c, &d)?;
        if !(step > 0.0 && step.is_finite()) {
            return Err(EmcError::InvalidParameter(format!("time step must be positive, got {step}")));
        }
        Ok(Self { a, b, c, d, step })
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

    pub fn nyquist_hz(&self) -> f64 {
        0.5 / self.step
    }

    /// Returns `(x(i), y(i))` for every input sample.
    pub fn simulate(&self, x0: &Vector, inputs: &[Vector]) -> Result<Vec<(Vector, Vector)>> {
        if x0.len() != self.states() {
            return Err(dim_err("simulate x0", self.states(), x0.len()));
        }
        let mut x = x0.clone();
        let mut out = Vec::with_capacity(inputs.len());
        for u in inputs {
            if u.len() != self.inputs() {
                return Err(dim_err("simulate input", self.inputs(), u.len()));
            }
            let y = &self.c * &x + &self.d * u;
            let next = &self.a * &x + &self.b * u;
            out.push((x, y));
            x = next;
        }
        Ok(out)
    }

    /// `C (zI - A)^{-1} B + D` at `z = exp(j 2π f T)`.
    pub fn freq_response(&self, f_hz: f64) -> Result<CMat> {
        if !f_hz.is_finite() || f_hz.abs() > self.nyquist_hz() * (1.0 + 1e-12) {
            return Err(EmcError::InvalidParameter(format!(
                "frequency {f_hz} Hz outside the Nyquist band ±{} Hz",
                self.nyquist_hz()
            )));
        }
        let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f_hz * self.step);
        resolvent_response(&self.a, &self.b, &self.c, &self.d, z, f_hz)
    }

    /// Series connection `self` then `next`.
    pub fn series(&self, next: &DiscreteLti) -> Result<DiscreteLti> {
        if next.inputs() != self.outputs() {
            return Err(dim_err("series", self.outputs(), next.inputs()));
        }
        let (n1, n2) = (self.states(), next.states());
        let mut a = Mat::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((n1, 0), (n2, n1)).copy_from(&(&next.b * &self.c));
        a.view_mut((n1, n1), (n2, n2)).copy_from(&next.a);
        let mut b = Mat::zeros(n1 + n2, self.inputs());
        b.view_mut((0, 0), (n1, self.inputs())).copy_from(&self.b);
        b.view_mut((n1, 0), (n2, self.inputs())).copy_from(&(&next.b * &self.d));
        let mut c = Mat::zeros(next.outputs(), n1 + n2);
        c.view_mut((0, 0), (next.outputs(), n1)).copy_from(&(&next.d * &self.c));
        c.view_mut((0, n1), (next.outputs(), n2)).copy_from(&next.c);
        let d = &next.d * &self.d;
        DiscreteLti::new(a, b, c, d, self.step)
    }
}

fn resolvent_response(a: &Mat, b: &Mat, c: &Mat, d: &Mat, z: Complex64, f_hz: f64) -> Result<CMat> {
    let n = a.nrows();
    let to_c = |m: &Mat| m.map(|v| Complex64::new(v, 0.0));
    let shifted = CMat::identity(n, n) * z - to_c(a);
    let x = shifted.lu().solve(&to_c(b)).ok_or(EmcError::Singular { f_hz })?;
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(EmcError::Singular { f_hz });
    }
    Ok(to_c(c) * x + to_c(d))
}

/// `ẋ = A x + B u`, `y = C x + D u`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousLti {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
}

impl ContinuousLti {
    pub fn new(a: Mat, b: Mat, c: Mat, d: Mat) -> Result<Self> {
        check_lti(&a, &b, &c, &d)?;
        Ok(Self { a, b, c, d })
    }

    /// Exact zero-order-hold equivalent from `exp([[A, B], [0, 0]] T)`.
    pub fn zoh_discretize(&self, step: f64) -> Result<DiscreteLti> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(EmcError::InvalidParameter(format!("time step must be positive, got {step}")));
        }
        let n = self.a.nrows();
        let m = self.b.ncols();
        let mut aug = Mat::zeros(n + m, n + m);
        aug.view_mut((0, 0), (n, n)).copy_from(&(&self.a * step));
        aug.view_mut((0, n), (n, m)).copy_from(&(&self.b * step));
        let e = aug.exp();
        DiscreteLti::new(
            e.view((0, 0), (n, n)).into_owned(),
            e.view((0, n), (n, m)).into_owned(),
            self.c.clone(),
            self.d.clone(),
            step,
        )
    }

    /// `C (sI - A)^{-1} B + D` at `s = j 2π f`.
    pub fn freq_response(&self, f_hz: f64) -> Result<CMat> {
        let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f_hz);
        resolvent_response(&self.a, &self.b, &self.c, &self.d, s, f_hz)
    }
}

/// Log-spaced grid `[f_lo, f_hi]` with `per_decade` points per decade.
pub fn log_grid(f_lo: f64, f_hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(f_lo > 0.0 && f_hi > f_lo && per_decade > 0);
    let decades = (f_hi / f_lo).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    (0..=n)
        .map(|k| f_lo * 10f64.powf(decades * k as f64 / n as f64))
        .collect()
}
