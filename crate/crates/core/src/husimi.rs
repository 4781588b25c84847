//! Husimi densities `F(z) = π^{-d} |f(z)|^2 exp(-|z|^2)` of Segal-Bargmann states.
//!
//! A density is kept in closed form as `exp(log_prefactor) * p(x) * exp(-x^T Q x)`
//! with `p` a nonnegative real polynomial. Marginals, normalization and purity
//! are all evaluated exactly with the moment engine.
//!
//! Internal coordinates follow the moment engine: `(u1, u2, v1, v2)` for both
//! modes, `(u, v)` for a single mode. [`PhasePoint`] is the user-facing order
//! `(u1, v1, u2, v2)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::moments::{self, GaussianForm, MomentEngine, U1, U2, V1, V2};
use crate::poly::{MonomialIndex, RealPoly};
use crate::sbs::{self, Mode, SBState};

/// Smallest density value passed to a logarithm.
pub const LOG_FLOOR: f64 = 1e-300;

const NORM_TOL: f64 = 1e-8;

/// Point in phase space, ordered `(u1, v1[, u2, v2])`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    coords: Vec<f64>,
}

impl PhasePoint {
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.len() != 2 && coords.len() != 4 {
            return Err(Error::InvalidArgument(format!("phase point needs 2 or 4 coordinates, got {}", coords.len())));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("phase point"));
        }
        Ok(PhasePoint { coords: coords.to_vec() })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Coordinates in the internal `(u1, u2, v1, v2)` order.
    fn internal(&self) -> Vec<f64> {
        match self.coords.len() {
            4 => vec![self.coords[0], self.coords[2], self.coords[1], self.coords[3]],
            _ => self.coords.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HusimiDensity {
    modes: Vec<Mode>,
    poly: RealPoly,
    form: GaussianForm,
    log_prefactor: f64,
}

impl HusimiDensity {
    pub fn new(modes: Vec<Mode>, poly: RealPoly, form: GaussianForm, log_prefactor: f64) -> Result<Self> {
        let dim = 2 * modes.len();
        if modes.is_empty() || modes.len() > 2 || poly.dim() != dim || form.dim() != dim {
            return Err(Error::InvalidArgument("inconsistent density dimensions".into()));
        }
        Ok(HusimiDensity {
            modes,
            poly,
            form,
            log_prefactor,
        })
    }

    pub fn dim_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn poly(&self) -> &RealPoly {
        &self.poly
    }

    pub fn form(&self) -> &GaussianForm {
        &self.form
    }

    pub fn log_prefactor(&self) -> f64 {
        self.log_prefactor
    }

    /// Density at internal coordinates.
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.log_prefactor - self.form.quad(x)).exp() * self.poly.eval(x)
    }

    pub fn eval_point(&self, p: &PhasePoint) -> Result<f64> {
        if p.coords.len() != 2 * self.dim_modes() {
            return Err(Error::InvalidArgument("phase point dimension does not match density".into()));
        }
        Ok(self.eval(&p.internal()))
    }

    /// `ln F(x)` assembled term by term so far tails stay finite.
    pub fn ln_eval(&self, x: &[f64]) -> f64 {
        self.log_prefactor + self.poly.eval(x).max(LOG_FLOOR).ln() - self.form.quad(x)
    }

    /// `∫ F`, exact.
    pub fn total_mass(&self) -> Result<f64> {
        let e = moments::polynomial_expectation(&self.form, &self.poly)?;
        Ok((self.log_prefactor + self.form.log_norm()).exp() * e)
    }

    /// Coordinate pairs `(u, v)` of each mode, in internal indices.
    pub fn mode_coords(&self, mode: Mode) -> Option<[usize; 2]> {
        match (self.modes.len(), self.modes.iter().position(|&m| m == mode)) {
            (2, Some(0)) => Some([U1, V1]),
            (2, Some(1)) => Some([U2, V2]),
            (1, Some(0)) => Some([0, 1]),
            _ => None,
        }
    }
}

/// Husimi density of a normalized two-mode state.
pub fn husimi_of(state: &SBState) -> Result<HusimiDensity> {
    let n = sbs::norm_sq(state)?;
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(n));
    }
    let poly = state.abs_sq_poly()?;
    let log_prefactor = state.prefactor().norm_sqr().ln() - 2.0 * PI.ln();
    HusimiDensity::new(
        vec![Mode::One, Mode::Two],
        poly,
        moments::coupled_form(state.coupling()),
        log_prefactor,
    )
}

fn block(q: &DMatrix<f64>, rows: &[usize; 2], cols: &[usize; 2]) -> DMatrix<f64> {
    DMatrix::from_fn(2, 2, |i, j| q[(rows[i], cols[j])])
}

/// Integrates out every mode except `keep`.
///
/// With `x = (a, b)`, the exponent splits as
/// `(b - M a)^T Q_bb (b - M a) + a^T S a` where `M = -Q_bb^{-1} Q_ba` and `S` is
/// the Schur complement. The polynomial is rewritten in `(a, y = b - M a)` and
/// the `y` moments are taken under `Q_bb`.
pub fn marginal(density: &HusimiDensity, keep: Mode) -> Result<HusimiDensity> {
    if density.dim_modes() != 2 {
        return Err(Error::InvalidArgument("marginal needs a two-mode density".into()));
    }
    let a = density.mode_coords(keep).unwrap();
    let b = density.mode_coords(keep.other()).unwrap();
    let q = density.form.qmatrix();
    let q_aa = block(q, &a, &a);
    let q_ab = block(q, &a, &b);
    let q_bb = block(q, &b, &b);
    let q_bb_inv = q_bb.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let m = -&q_bb_inv * q_ab.transpose();
    let schur = &q_aa + &q_ab * &m;
    let schur = (&schur + schur.transpose()) * 0.5;

    // substitution variables: 0,1 = kept coords; 2,3 = y
    let mut images: [RealPoly; 4] = std::array::from_fn(|_| RealPoly::zero(4));
    for (slot, &coord) in a.iter().enumerate() {
        images[coord] = RealPoly::var(4, slot);
    }
    for (j, &coord) in b.iter().enumerate() {
        let mut lin = RealPoly::var(4, 2 + j);
        for i in 0..2 {
            lin.add_term(MonomialIndex::unit(i), m[(j, i)]);
        }
        images[coord] = lin;
    }
    let substituted = substitute(&density.poly, &images);

    let y_form = GaussianForm::new(q_bb)?;
    let mut engine = MomentEngine::new(&y_form);
    let mut poly = RealPoly::zero(2);
    for (idx, &c) in substituted.iter() {
        let p = idx.powers();
        let my = engine.moment(&MonomialIndex::new(&[p[2], p[3]]))?;
        poly.add_term(MonomialIndex::new(&[p[0], p[1]]), c * my);
    }
    let poly = poly.cleaned(1e-15);

    HusimiDensity::new(
        vec![keep],
        poly,
        GaussianForm::new(schur)?,
        density.log_prefactor + y_form.log_norm(),
    )
}

/// `p(images[0], images[1], ...)`.
fn substitute(p: &RealPoly, images: &[RealPoly; 4]) -> RealPoly {
    let dim = images[0].dim();
    let max = p.max_powers();
    let powers: Vec<Vec<RealPoly>> = (0..p.dim())
        .map(|i| {
            let mut v = vec![RealPoly::constant(dim, 1.0)];
            for k in 1..=max[i] as usize {
                let next = v[k - 1].mul(&images[i]);
                v.push(next);
            }
            v
        })
        .collect();
    let mut out = RealPoly::zero(dim);
    for (idx, &c) in p.iter() {
        let mut term = RealPoly::constant(dim, c);
        for i in 0..p.dim() {
            let e = idx.powers()[i] as usize;
            if e > 0 {
                term = term.mul(&powers[i][e]);
            }
        }
        out = out.add(&term);
    }
    out
}

/// `tr ρ^2 = (2π)^d ∫ F^2`, exact for polynomial × Gaussian densities.
pub fn purity(density: &HusimiDensity) -> Result<f64> {
    let doubled = density.form.scaled(2.0)?;
    let sq = density.poly.mul(&density.poly);
    let e = moments::polynomial_expectation(&doubled, &sq)?;
    let d = density.dim_modes() as f64;
    let log = d * (2.0 * PI).ln() + 2.0 * density.log_prefactor + doubled.log_norm();
    Ok(log.exp() * e)
}

/// Section of a two-mode density at a fixed mode-2 point, as a function of `(u1, v1)`.
#[derive(Clone, Debug)]
pub struct Slice<'a> {
    density: &'a HusimiDensity,
    fixed: [f64; 2],
}

pub const DEFAULT_SLICE_GRID: usize = 101;

pub fn slice(density: &HusimiDensity, fixed: [f64; 2]) -> Result<Slice<'_>> {
    if density.dim_modes() != 2 {
        return Err(Error::InvalidArgument("slice needs a two-mode density".into()));
    }
    if fixed.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("slice point"));
    }
    Ok(Slice { density, fixed })
}

impl Slice<'_> {
    pub fn eval(&self, u1: f64, v1: f64) -> f64 {
        let x = [u1, self.fixed[0], v1, self.fixed[1]];
        self.density.eval(&x)
    }

    /// Conditional mode-1 maximum of the Gaussian factor, `-Q_11^{-1} Q_12 x_2`.
    pub fn gaussian_centre(&self) -> [f64; 2] {
        let q = self.density.form.qmatrix();
        let q11 = block(q, &[U1, V1], &[U1, V1]);
        let q12 = block(q, &[U1, V1], &[U2, V2]);
        let inv = q11.try_inverse().unwrap_or_else(|| DMatrix::identity(2, 2));
        let c = -(inv * q12) * nalgebra::DVector::from_column_slice(&self.fixed);
        [c[0], c[1]]
    }

    /// Half-width of the default grid, `4 + |centre|_∞`.
    pub fn default_extent(&self) -> f64 {
        let c = self.gaussian_centre();
        4.0 + c[0].abs().max(c[1].abs())
    }

    /// Row-major `(u1, v1, value)` samples on an `n × n` grid over `[-extent, extent]^2`.
    pub fn grid(&self, n: usize, extent: f64) -> Result<Vec<(f64, f64, f64)>> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("grid size must be at least 2, got {n}")));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid extent must be positive, got {extent}")));
        }
        let step = 2.0 * extent / (n - 1) as f64;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            let u1 = -extent + step * i as f64;
            for j in 0..n {
                let v1 = -extent + step * j as f64;
                out.push((u1, v1, self.eval(u1, v1)));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbs::{excited_state, ground_state, Coupling};
    use approx::assert_abs_diff_eq;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn ground_density_at_origin() {
        let d = husimi_of(&ground_state(&Coupling::new(0.0).unwrap())).unwrap();
        let v = d.eval_point(&PhasePoint::new(&[0.0; 4]).unwrap()).unwrap();
        assert_abs_diff_eq!(v, 0.101_321_183_642_337_8, epsilon = 1e-15);
    }

    #[test]
    fn ground_density_matches_closed_form() {
        let k = Coupling::new(0.7).unwrap();
        let d = husimi_of(&ground_state(&k)).unwrap();
        let (u1, v1, u2, v2) = (0.3, -0.4, 1.1, 0.2);
        let expected = k.sech().powi(2) / PI.powi(2)
            * (-u1 * u1 - v1 * v1 - u2 * u2 - v2 * v2 + 2.0 * k.tanh() * (u1 * u2 - v1 * v2)).exp();
        let got = d.eval_point(&PhasePoint::new(&[u1, v1, u2, v2]).unwrap()).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(d.total_mass().unwrap(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn unnormalized_state_rejected() {
        let k = Coupling::new(0.3).unwrap();
        let s = sbs::apply_z_creation(&ground_state(&k), Mode::One);
        assert!(matches!(husimi_of(&s), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn single_mode_excited_density() {
        let k = Coupling::new(0.0).unwrap();
        for n in 0..4u32 {
            let d = husimi_of(&excited_state(&k, n, 0).unwrap()).unwrap();
            let m = marginal(&d, Mode::One).unwrap();
            for &(u, v) in &[(0.0, 0.0), (0.5, -1.0), (1.3, 0.7)] {
                let r2: f64 = u * u + v * v;
                let expected = r2.powi(n as i32) * (-r2).exp() / (PI * factorial(n));
                assert_abs_diff_eq!(m.eval(&[u, v]), expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn ground_marginal_closed_form() {
        let k = Coupling::new(1.2).unwrap();
        let d = husimi_of(&ground_state(&k)).unwrap();
        for keep in [Mode::One, Mode::Two] {
            let m = marginal(&d, keep).unwrap();
            let s2 = k.sech().powi(2);
            for &(u, v) in &[(0.0, 0.0), (0.9, -0.2), (-2.0, 1.5)] {
                let expected = s2 / PI * (-s2 * (u * u + v * v)).exp();
                assert_abs_diff_eq!(m.eval(&[u, v]), expected, epsilon = 1e-14);
            }
            assert_abs_diff_eq!(m.total_mass().unwrap(), 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn first_excited_other_marginal() {
        let k = Coupling::new(0.8).unwrap();
        let d = husimi_of(&excited_state(&k, 1, 0).unwrap()).unwrap();
        let m = marginal(&d, Mode::Two).unwrap();
        let (s2, t2) = (k.sech().powi(2), k.tanh().powi(2));
        for &(u, v) in &[(0.0, 0.0), (0.4, 1.2), (-1.7, -0.3)] {
            let r2 = u * u + v * v;
            let expected = s2 * s2 / PI * (-s2 * r2).exp() * (t2 * r2 + 1.0);
            assert_abs_diff_eq!(m.eval(&[u, v]), expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn purity_values() {
        let d0 = husimi_of(&ground_state(&Coupling::new(0.0).unwrap())).unwrap();
        assert_abs_diff_eq!(purity(&d0).unwrap(), 1.0, epsilon = 1e-13);
        let k = Coupling::new(1.0).unwrap();
        let d1 = husimi_of(&ground_state(&k)).unwrap();
        assert_abs_diff_eq!(purity(&d1).unwrap(), 0.419_974_341_614_026_1, epsilon = 1e-12);
        for eta in [0.2, 1.0, 2.5] {
            let k = Coupling::new(eta).unwrap();
            let m = marginal(&husimi_of(&ground_state(&k)).unwrap(), Mode::One).unwrap();
            assert_abs_diff_eq!(purity(&m).unwrap(), k.sech().powi(2), epsilon = 1e-12);
        }
    }

    #[test]
    fn slice_maximum_follows_coupling() {
        let k = Coupling::new(3.0).unwrap();
        let d = husimi_of(&ground_state(&k)).unwrap();
        let s = slice(&d, [1.0, -1.0]).unwrap();
        let c = s.gaussian_centre();
        assert_abs_diff_eq!(c[0], k.tanh(), epsilon = 1e-12);
        assert_abs_diff_eq!(c[1], k.tanh(), epsilon = 1e-12);
        let grid = s.grid(DEFAULT_SLICE_GRID, s.default_extent()).unwrap();
        let best = grid.iter().cloned().fold((0.0, 0.0, -1.0), |a, b| if b.2 > a.2 { b } else { a });
        let cell = 2.0 * s.default_extent() / (DEFAULT_SLICE_GRID - 1) as f64;
        assert!((best.0 - k.tanh()).abs() <= cell && (best.1 - k.tanh()).abs() <= cell);
    }

    #[test]
    fn slice_at_origin_peaks_at_origin() {
        for eta in [0.0, 0.9, 2.0] {
            let d = husimi_of(&ground_state(&Coupling::new(eta).unwrap())).unwrap();
            let s = slice(&d, [0.0, 0.0]).unwrap();
            let grid = s.grid(41, 4.0).unwrap();
            let best = grid.iter().cloned().fold((9.0, 9.0, -1.0), |a, b| if b.2 > a.2 { b } else { a });
            assert_abs_diff_eq!(best.0, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(best.1, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn decoupled_slice_shape_is_scaled_ground() {
        let d = husimi_of(&ground_state(&Coupling::new(0.0).unwrap())).unwrap();
        let s = slice(&d, [0.7, -1.3]).unwrap();
        let scale = s.eval(0.0, 0.0);
        for &(u, v) in &[(0.5, 0.5), (-1.0, 2.0)] {
            assert_abs_diff_eq!(s.eval(u, v) / scale, (-(u * u + v * v)).exp(), epsilon = 1e-14);
        }
        assert!(s.grid(0, 4.0).is_err());
    }
}
