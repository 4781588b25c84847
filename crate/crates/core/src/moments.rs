//! Exact moments of polynomials under a centred Gaussian weight `exp(-x^T Q x)`.
//!
//! Coordinates of the two-mode system are always ordered `(u1, u2, v1, v2)`
//! where `z_k = u_k + i v_k`. Everything built on top of this module (inner
//! products, Husimi densities, quadrature) relies on that order.
//!
//! Moments are evaluated with Isserlis' theorem in its recursive form
//! `E[x_i m(x)] = sum_j C_ij E[d m / d x_j]`, memoized on the exponent vector
//! for the duration of one engine.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::husimi;
use crate::poly::{MonomialIndex, RealPoly, MAX_DIM};
use crate::sbs::{self, Coupling, Ladder, Mode, Observable};

/// Largest total degree accepted by the moment engine (`4 * N_MAX + 4`).
pub const MAX_DEGREE: u32 = 4 * sbs::N_MAX + 4;

pub const U1: usize = 0;
pub const U2: usize = 1;
pub const V1: usize = 2;
pub const V2: usize = 3;

/// Symmetric positive-definite form `Q` with weight `exp(-x^T Q x)`.
#[derive(Clone, Debug)]
pub struct GaussianForm {
    dim: usize,
    qmatrix: DMatrix<f64>,
    covariance: DMatrix<f64>,
    /// `x = W y` maps the isotropic weight `exp(-|y|^2)` onto this one.
    whitening: DMatrix<f64>,
    log_norm: f64,
}

impl GaussianForm {
    /// General constructor; diagonalizes `Q` numerically.
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        let dim = q.nrows();
        if dim == 0 || dim > MAX_DIM || q.ncols() != dim {
            return Err(Error::InvalidArgument(format!("form of shape {}x{}", dim, q.ncols())));
        }
        if (&q - q.transpose()).amax() > 1e-12 * q.amax().max(1.0) {
            return Err(Error::InvalidArgument("form is not symmetric".into()));
        }
        let eig = q.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self::from_eigen(q, eig.eigenvectors, eig.eigenvalues.as_slice()))
    }

    fn from_eigen(q: DMatrix<f64>, vectors: DMatrix<f64>, values: &[f64]) -> Self {
        let dim = q.nrows();
        let mut whitening = vectors;
        for (j, &l) in values.iter().enumerate() {
            let s = 1.0 / l.sqrt();
            for i in 0..dim {
                whitening[(i, j)] *= s;
            }
        }
        let covariance = &whitening * whitening.transpose() * 0.5;
        let log_det: f64 = values.iter().map(|l| l.ln()).sum();
        GaussianForm {
            dim,
            qmatrix: q,
            covariance,
            whitening,
            log_norm: 0.5 * dim as f64 * PI.ln() - 0.5 * log_det,
        }
    }

    /// Isotropic form `scale * I`.
    pub fn isotropic(dim: usize, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let q = DMatrix::identity(dim, dim) * scale;
        Ok(Self::from_eigen(q, DMatrix::identity(dim, dim), &vec![scale; dim]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn qmatrix(&self) -> &DMatrix<f64> {
        &self.qmatrix
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn whitening(&self) -> &DMatrix<f64> {
        &self.whitening
    }

    /// `ln ∫ exp(-x^T Q x) dx`.
    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub fn det(&self) -> f64 {
        (2.0 * (0.5 * self.dim as f64 * PI.ln() - self.log_norm)).exp()
    }

    /// `x^T Q x`.
    pub fn quad(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            let mut row = 0.0;
            for j in 0..self.dim {
                row += self.qmatrix[(i, j)] * x[j];
            }
            acc += x[i] * row;
        }
        acc
    }

    /// Form with `Q` replaced by `factor * Q`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(GaussianForm {
            dim: self.dim,
            qmatrix: &self.qmatrix * factor,
            covariance: &self.covariance / factor,
            whitening: &self.whitening / factor.sqrt(),
            log_norm: self.log_norm - 0.5 * self.dim as f64 * factor.ln(),
        })
    }

    /// Maps a whitened point `y` to `x = W y`.
    pub fn unwhiten(&self, y: &[f64], x: &mut [f64]) {
        for i in 0..self.dim {
            let mut acc = 0.0;
            for j in 0..self.dim {
                acc += self.whitening[(i, j)] * y[j];
            }
            x[i] = acc;
        }
    }
}

/// The quadratic form of the entangled ground-state Husimi density over
/// `(u1, u2, v1, v2)`: unit diagonal, `-tanh η` between `u1,u2` and `+tanh η`
/// between `v1,v2`. Eigenvectors are the ±45° rotations of each plane.
pub fn coupled_form(coupling: &Coupling) -> GaussianForm {
    let tau = coupling.tanh();
    let (lo, hi) = (coupling.one_minus_tanh(), coupling.one_plus_tanh());
    let mut q = DMatrix::identity(4, 4);
    q[(U1, U2)] = -tau;
    q[(U2, U1)] = -tau;
    q[(V1, V2)] = tau;
    q[(V2, V1)] = tau;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    // columns: (u1+u2), (u1-u2), (v1+v2), (v1-v2)
    let vectors = DMatrix::from_row_slice(
        4,
        4,
        &[
            r, r, 0.0, 0.0, //
            r, -r, 0.0, 0.0, //
            0.0, 0.0, r, r, //
            0.0, 0.0, r, -r,
        ],
    );
    GaussianForm::from_eigen(q, vectors, &[lo, hi, hi, lo])
}

/// Memoizing Isserlis evaluator for one form.
pub struct MomentEngine<'a> {
    form: &'a GaussianForm,
    cache: HashMap<MonomialIndex, f64>,
}

impl<'a> MomentEngine<'a> {
    pub fn new(form: &'a GaussianForm) -> Self {
        MomentEngine {
            form,
            cache: HashMap::new(),
        }
    }

    /// Normalized moment `E[x^idx]`.
    pub fn moment(&mut self, idx: &MonomialIndex) -> Result<f64> {
        let deg = idx.degree();
        if deg > MAX_DEGREE {
            return Err(Error::DegreeCap(deg));
        }
        if idx.0[self.form.dim..].iter().any(|&p| p != 0) {
            return Err(Error::InvalidArgument(format!(
                "monomial {:?} uses coordinates beyond dim {}",
                idx.0, self.form.dim
            )));
        }
        Ok(self.pairings(*idx))
    }

    fn pairings(&mut self, idx: MonomialIndex) -> f64 {
        let deg = idx.degree();
        if deg == 0 {
            return 1.0;
        }
        if deg % 2 == 1 {
            return 0.0;
        }
        if let Some(&v) = self.cache.get(&idx) {
            return v;
        }
        let i = idx.0.iter().position(|&p| p > 0).unwrap();
        let mut rest = idx;
        rest.0[i] -= 1;
        let mut acc = 0.0;
        for j in 0..self.form.dim {
            let mult = rest.0[j];
            if mult == 0 {
                continue;
            }
            let c = self.form.covariance[(i, j)];
            if c == 0.0 {
                continue;
            }
            let mut reduced = rest;
            reduced.0[j] -= 1;
            acc += c * mult as f64 * self.pairings(reduced);
        }
        self.cache.insert(idx, acc);
        acc
    }

    /// `E[p(x)]`, linear over the terms of `p`.
    pub fn expectation(&mut self, poly: &RealPoly) -> Result<f64> {
        if poly.dim() != self.form.dim {
            return Err(Error::InvalidArgument(format!(
                "polynomial dim {} vs form dim {}",
                poly.dim(),
                self.form.dim
            )));
        }
        let mut acc = 0.0;
        for (idx, &c) in poly.iter() {
            acc += c * self.moment(idx)?;
        }
        Ok(acc)
    }
}

/// `∫ x^idx exp(-x^T Q x) dx / ∫ exp(-x^T Q x) dx`.
pub fn moment(form: &GaussianForm, idx: &MonomialIndex) -> Result<f64> {
    MomentEngine::new(form).moment(idx)
}

pub fn polynomial_expectation(form: &GaussianForm, poly: &RealPoly) -> Result<f64> {
    MomentEngine::new(form).expectation(poly)
}

/// One observable computed both from its closed form and from the moment engine.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct CrossCheck {
    pub analytic: f64,
    pub numeric: f64,
    pub discrepancy: f64,
}

impl CrossCheck {
    pub fn new(analytic: f64, numeric: f64) -> Self {
        CrossCheck {
            analytic,
            numeric,
            discrepancy: (analytic - numeric).abs(),
        }
    }
}

/// Ground-state observables of the coupled pair.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ObservableReport {
    pub eta: f64,
    /// `<N_{z1}> = <z1 ∂1>`
    pub occupation: CrossCheck,
    pub corr_z1_z2: CrossCheck,
    pub corr_x1_x2: CrossCheck,
    pub corr_p1_p2: CrossCheck,
    /// `Δx1 Δp1`
    pub uncertainty: CrossCheck,
    pub purity: CrossCheck,
}

impl ObservableReport {
    pub fn entries(&self) -> [(&'static str, &CrossCheck); 6] {
        [
            ("occupation", &self.occupation),
            ("corr_z1_z2", &self.corr_z1_z2),
            ("corr_x1_x2", &self.corr_x1_x2),
            ("corr_p1_p2", &self.corr_p1_p2),
            ("uncertainty", &self.uncertainty),
            ("purity", &self.purity),
        ]
    }

    pub fn max_discrepancy(&self) -> f64 {
        self.entries().iter().map(|(_, c)| c.discrepancy).fold(0.0, f64::max)
    }
}

pub fn observable_report(coupling: &Coupling) -> Result<ObservableReport> {
    let ground = sbs::ground_state(coupling);
    let (sh, ch) = (coupling.sinh(), coupling.cosh());

    let real = |obs: &Observable| -> Result<f64> { Ok(sbs::expectation(&ground, obs)?.re) };

    let occupation = real(&Observable::number(Mode::One))?;
    let z1z2 = real(&Observable::word(&[Ladder::Create(Mode::One), Ladder::Create(Mode::Two)]))?;
    let x1x2 = real(&Observable::position(Mode::One).compose(&Observable::position(Mode::Two)))?;
    let p1p2 = real(&Observable::momentum(Mode::One).compose(&Observable::momentum(Mode::Two)))?;

    let x1 = real(&Observable::position(Mode::One))?;
    let p1 = real(&Observable::momentum(Mode::One))?;
    let x1sq = real(&Observable::position(Mode::One).compose(&Observable::position(Mode::One)))?;
    let p1sq = real(&Observable::momentum(Mode::One).compose(&Observable::momentum(Mode::One)))?;
    let dx = (x1sq - x1 * x1).max(0.0).sqrt();
    let dp = (p1sq - p1 * p1).max(0.0).sqrt();

    let purity = husimi::purity(&husimi::husimi_of(&ground)?)?;
    let sech = coupling.sech();

    Ok(ObservableReport {
        eta: coupling.eta(),
        occupation: CrossCheck::new(sh * sh, occupation),
        corr_z1_z2: CrossCheck::new((2.0 * coupling.eta()).sinh() / 2.0, z1z2),
        corr_x1_x2: CrossCheck::new(sh * ch, x1x2),
        corr_p1_p2: CrossCheck::new(-sh * ch, p1p2),
        uncertainty: CrossCheck::new(0.5 + sh * sh, dx * dp),
        purity: CrossCheck::new(sech * sech, purity),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn idx(p: &[u16]) -> MonomialIndex {
        MonomialIndex::new(p)
    }

    #[test]
    fn decoupled_form_is_identity() {
        let f = coupled_form(&Coupling::new(0.0).unwrap());
        assert_abs_diff_eq!((f.qmatrix() - DMatrix::<f64>::identity(4, 4)).amax(), 0.0);
        assert_abs_diff_eq!((f.covariance() - DMatrix::<f64>::identity(4, 4) * 0.5).amax(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn coupled_determinant_is_sech4() {
        let f = coupled_form(&Coupling::new(1.0).unwrap());
        // (1 - tanh^2 1)^2
        assert_abs_diff_eq!(f.det(), 0.176_378_447_614_134_67, epsilon = 1e-12);
        let numeric = GaussianForm::new(f.qmatrix().clone()).unwrap();
        assert_abs_diff_eq!(numeric.det(), f.det(), epsilon = 1e-12);
        assert_abs_diff_eq!((numeric.covariance() - f.covariance()).amax(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn covariance_is_half_inverse() {
        let f = coupled_form(&Coupling::new(0.7).unwrap());
        let inv = f.qmatrix().clone().try_inverse().unwrap() * 0.5;
        assert_abs_diff_eq!((inv - f.covariance()).amax(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ground_husimi_normalization() {
        // sech^2/π^2 ∫ exp(-x^T Q x) = 1
        let c = Coupling::new(1.3).unwrap();
        let f = coupled_form(&c);
        let total = (2.0 * c.sech().ln() - 2.0 * PI.ln() + f.log_norm()).exp();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn low_order_moments() {
        let c = Coupling::new(1.0).unwrap();
        let f = coupled_form(&c);
        assert_eq!(moment(&f, &idx(&[0, 0, 0, 0])).unwrap(), 1.0);
        let m = moment(&f, &idx(&[1, 1, 0, 0])).unwrap();
        assert_abs_diff_eq!(m, c.sinh() * c.cosh() / 2.0, epsilon = 1e-14);
        let f0 = coupled_form(&Coupling::new(0.0).unwrap());
        assert_abs_diff_eq!(moment(&f0, &idx(&[2, 0, 0, 0])).unwrap(), 0.5);
    }

    #[test]
    fn odd_moments_vanish() {
        let f = coupled_form(&Coupling::new(0.4).unwrap());
        for p in [[1, 0, 0, 0], [1, 1, 1, 0], [3, 2, 0, 0], [2, 2, 2, 1]] {
            assert_eq!(moment(&f, &MonomialIndex(p)).unwrap(), 0.0);
        }
    }

    #[test]
    fn degree_cap_enforced() {
        let f = coupled_form(&Coupling::new(0.4).unwrap());
        let err = moment(&f, &idx(&[MAX_DEGREE as u16 + 2, 0, 0, 0])).unwrap_err();
        assert!(matches!(err, Error::DegreeCap(_)));
    }

    #[test]
    fn polynomial_expectations() {
        let f0 = coupled_form(&Coupling::new(0.0).unwrap());
        let mut p = RealPoly::zero(4);
        p.add_term(idx(&[2, 0, 0, 0]), 1.0);
        p.add_term(idx(&[0, 0, 2, 0]), 1.0);
        assert_abs_diff_eq!(polynomial_expectation(&f0, &p).unwrap(), 1.0, epsilon = 1e-15);

        let c = Coupling::new(0.8).unwrap();
        let f = coupled_form(&c);
        let mut q = RealPoly::zero(4);
        q.add_term(idx(&[1, 1, 0, 0]), 1.0);
        q.add_term(idx(&[0, 0, 1, 1]), -1.0);
        assert_abs_diff_eq!(polynomial_expectation(&f, &q).unwrap(), c.sinh() * c.cosh(), epsilon = 1e-13);

        // equipartition
        let qf = RealPoly::quadratic_form(f.qmatrix());
        assert_abs_diff_eq!(polynomial_expectation(&f, &qf).unwrap(), 2.0, epsilon = 1e-13);
    }

    #[test]
    fn relabeling_symmetry() {
        // (u1,u2,v1,v2) -> (u2,u1,v2,v1) preserves the coupled form
        let f = coupled_form(&Coupling::new(0.9).unwrap());
        for p in [[2u16, 4, 1, 3], [3, 1, 0, 2], [1, 1, 2, 2]] {
            let swapped = [p[1], p[0], p[3], p[2]];
            let a = moment(&f, &MonomialIndex(p)).unwrap();
            let b = moment(&f, &MonomialIndex(swapped)).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn observables_at_zero_and_one() {
        let r0 = observable_report(&Coupling::new(0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(r0.occupation.numeric, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r0.corr_x1_x2.numeric, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r0.uncertainty.numeric, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(r0.purity.numeric, 1.0, epsilon = 1e-13);

        let r1 = observable_report(&Coupling::new(1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(r1.occupation.analytic, 1.381_097_845_541_816, epsilon = 1e-12);
        assert_abs_diff_eq!(r1.purity.analytic, 0.419_974_341_614_026_1, epsilon = 1e-12);
        assert_abs_diff_eq!(r1.corr_z1_z2.analytic, 1.813_430_203_923_509, epsilon = 1e-12);
        assert!(r1.max_discrepancy() < 1e-10, "{r1:?}");
    }
}
