//! Two-mode Segal-Bargmann states.
//!
//! A state is stored as `prefactor * P(z1, z2) * exp(tanh η z1 z2)` with `P` a
//! sparse holomorphic polynomial. Creation operators act as multiplication by
//! `z_k`, annihilation operators as `∂/∂z_k`; the Gaussian kernel is carried
//! along analytically so every operator maps polynomials to polynomials.
//!
//! Units: ℏ = 1 throughout. Restoring ℏ rescales every Wehrl entropy by the
//! additive constant `d ln ℏ` for `d` modes; nothing in this crate depends on it.
//! The Bogoliubov phase is fixed to zero, so the transformation is real.
//!
//! Operator words are applied right to left: the word `[z1, ∂1]` acting on `f`
//! is `z1 (∂1 f)`, i.e. the number operator.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{self, MomentEngine, U1, U2, V1, V2};
use crate::poly::{MonomialIndex, RealPoly};

/// Largest accepted |η|.
pub const ETA_MAX: f64 = 20.0;
/// Largest accepted excitation index per mode.
pub const N_MAX: u32 = 12;
/// Coefficients below this fraction of the largest contribution are dropped.
pub const CLEANUP_REL: f64 = 1e-14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Coupling parameter η of the Bogoliubov transformation with cached
/// hyperbolic functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    eta: f64,
    tau: f64,
    sech: f64,
}

impl Coupling {
    pub fn new(eta: f64) -> Result<Self> {
        if !eta.is_finite() || eta.abs() > ETA_MAX {
            return Err(Error::EtaOutOfRange(eta));
        }
        Ok(Coupling {
            eta,
            tau: eta.tanh(),
            sech: 1.0 / eta.cosh(),
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn tanh(&self) -> f64 {
        self.tau
    }

    pub fn sech(&self) -> f64 {
        self.sech
    }

    pub fn cosh(&self) -> f64 {
        self.eta.cosh()
    }

    pub fn sinh(&self) -> f64 {
        self.eta.sinh()
    }

    /// `1 - tanh η` without cancellation.
    pub fn one_minus_tanh(&self) -> f64 {
        2.0 / (1.0 + (2.0 * self.eta).exp())
    }

    /// `1 + tanh η` without cancellation.
    pub fn one_plus_tanh(&self) -> f64 {
        2.0 / (1.0 + (-2.0 * self.eta).exp())
    }

    /// `ln cosh η`, stable for large |η|.
    pub fn ln_cosh(&self) -> f64 {
        ln_cosh(self.eta)
    }
}

pub(crate) fn ln_cosh(eta: f64) -> f64 {
    let a = eta.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Oscillator parameters of the coupled Hamiltonian. Carried as metadata only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianParams {
    pub omega: f64,
    pub lambda: f64,
    pub h0: f64,
}

impl HamiltonianParams {
    /// Parameters whose coupling diagonalizes with the given η: `λ = -ω tanh 2η`.
    pub fn from_coupling(coupling: &Coupling, omega: f64, h0: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::InvalidArgument(format!("omega must be positive, got {omega}")));
        }
        Ok(HamiltonianParams {
            omega,
            lambda: -omega * (2.0 * coupling.eta()).tanh(),
            h0,
        })
    }

    pub fn is_consistent_with(&self, coupling: &Coupling) -> bool {
        let expected = -self.omega * (2.0 * coupling.eta()).tanh();
        (self.lambda - expected).abs() <= 1e-12 * self.omega.max(1.0)
    }

    /// Decoupled frequency `ω sech 2η`.
    pub fn omega_prime(&self) -> f64 {
        let t = self.lambda / self.omega;
        self.omega * (1.0 - t * t).sqrt()
    }

    pub fn h0_prime(&self) -> f64 {
        self.omega_prime() - self.omega + self.h0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    One,
    Two,
}

impl Mode {
    pub fn other(self) -> Mode {
        match self {
            Mode::One => Mode::Two,
            Mode::Two => Mode::One,
        }
    }

    pub fn from_index(i: u8) -> Result<Mode> {
        match i {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            _ => Err(Error::InvalidArgument(format!("mode must be 1 or 2, got {i}"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Mode::One => 1,
            Mode::Two => 2,
        }
    }

    fn shift(self, (a, b): (u32, u32)) -> (u32, u32) {
        match self {
            Mode::One => (a + 1, b),
            Mode::Two => (a, b + 1),
        }
    }

    /// Exponent of this mode and the key with it lowered by one.
    fn lower(self, (a, b): (u32, u32)) -> Option<(u32, (u32, u32))> {
        match self {
            Mode::One if a > 0 => Some((a, (a - 1, b))),
            Mode::Two if b > 0 => Some((b, (a, b - 1))),
            _ => None,
        }
    }
}

/// Sums contributions and drops cancellation residue relative to the largest
/// contribution seen.
struct Accumulator {
    terms: BTreeMap<(u32, u32), Complex64>,
    scale: f64,
}

impl Accumulator {
    fn new() -> Self {
        Accumulator {
            terms: BTreeMap::new(),
            scale: 0.0,
        }
    }

    fn add(&mut self, key: (u32, u32), c: Complex64) {
        if c == ZERO {
            return;
        }
        self.scale = self.scale.max(c.norm());
        *self.terms.entry(key).or_insert(ZERO) += c;
    }

    fn finish(self) -> BTreeMap<(u32, u32), Complex64> {
        let cut = CLEANUP_REL * self.scale;
        self.terms.into_iter().filter(|(_, c)| c.norm() >= cut && *c != ZERO).collect()
    }
}

/// `prefactor * Σ c_ab z1^a z2^b * exp(tanh η z1 z2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SBState {
    coupling: Coupling,
    poly: BTreeMap<(u32, u32), Complex64>,
    prefactor: Complex64,
}

impl SBState {
    /// Builds a state from explicit coefficients; zeros are dropped.
    pub fn from_terms(
        coupling: Coupling,
        terms: impl IntoIterator<Item = ((u32, u32), Complex64)>,
        prefactor: Complex64,
    ) -> Self {
        let mut acc = Accumulator::new();
        for (k, c) in terms {
            acc.add(k, c);
        }
        SBState {
            coupling,
            poly: acc.finish(),
            prefactor,
        }
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    pub fn prefactor(&self) -> Complex64 {
        self.prefactor
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &Complex64)> {
        self.poly.iter()
    }

    pub fn coeff(&self, a: u32, b: u32) -> Complex64 {
        self.poly.get(&(a, b)).copied().unwrap_or(ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_empty() || self.prefactor == ZERO
    }

    pub fn degree(&self) -> u32 {
        self.poly.keys().map(|(a, b)| a + b).max().unwrap_or(0)
    }

    fn with_poly(&self, poly: BTreeMap<(u32, u32), Complex64>) -> SBState {
        SBState {
            coupling: self.coupling,
            poly,
            prefactor: self.prefactor,
        }
    }

    /// Same function with the exponents of the two modes exchanged.
    pub fn swapped(&self) -> SBState {
        self.with_poly(self.poly.iter().map(|(&(a, b), &c)| ((b, a), c)).collect())
    }

    /// Value of the function at `(z1, z2)`.
    pub fn eval(&self, z: [Complex64; 2]) -> Complex64 {
        let p: Complex64 = self
            .poly
            .iter()
            .map(|(&(a, b), &c)| c * z[0].powu(a) * z[1].powu(b))
            .sum();
        self.prefactor * p * (z[0] * z[1] * self.coupling.tanh()).exp()
    }

    /// `P` expanded over the real coordinates `(u1, u2, v1, v2)` as (real, imaginary) parts.
    pub fn real_expansion(&self) -> (RealPoly, RealPoly) {
        let c = expand_real(&self.poly);
        split(&c)
    }

    /// `|P|^2` over `(u1, u2, v1, v2)`; the prefactor is not included.
    pub fn abs_sq_poly(&self) -> Result<RealPoly> {
        let p = expand_real(&self.poly);
        let (re, im) = split(&conj_mul(&p, &p));
        let scale = re.iter().fold(0.0f64, |m, (_, c)| m.max(c.abs()));
        let resid = im.iter().fold(0.0f64, |m, (_, c)| m.max(c.abs()));
        if resid > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::ImaginaryResidue(resid / scale));
        }
        Ok(re)
    }
}

impl fmt::Display for SBState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) * [", self.prefactor)?;
        for (i, ((a, b), c)) in self.poly.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c}) z1^{a} z2^{b}")?;
        }
        write!(f, "] * exp({} z1 z2)", self.coupling.tanh())
    }
}

type CRealPoly = BTreeMap<MonomialIndex, Complex64>;

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => ONE,
        1 => Complex64::i(),
        2 => -ONE,
        _ => -Complex64::i(),
    }
}

/// `Σ c z1^a z2^b` with `z_k = u_k + i v_k` expanded binomially.
fn expand_real(poly: &BTreeMap<(u32, u32), Complex64>) -> CRealPoly {
    let mut out = CRealPoly::new();
    for (&(a, b), &c) in poly {
        for j in 0..=a {
            let cj = binomial(a, j);
            for k in 0..=b {
                let mut idx = MonomialIndex::default();
                idx.0[U1] = (a - j) as u16;
                idx.0[V1] = j as u16;
                idx.0[U2] = (b - k) as u16;
                idx.0[V2] = k as u16;
                *out.entry(idx).or_insert(ZERO) += c * i_pow(j + k) * (cj * binomial(b, k));
            }
        }
    }
    out
}

/// `conj(p) * q`.
fn conj_mul(p: &CRealPoly, q: &CRealPoly) -> CRealPoly {
    let mut out = CRealPoly::new();
    for (ka, ca) in p {
        for (kb, cb) in q {
            *out.entry(ka.mul(kb)).or_insert(ZERO) += ca.conj() * cb;
        }
    }
    out
}

fn split(p: &CRealPoly) -> (RealPoly, RealPoly) {
    let mut re = RealPoly::zero(4);
    let mut im = RealPoly::zero(4);
    for (k, c) in p {
        re.add_term(*k, c.re);
        im.add_term(*k, c.im);
    }
    (re, im)
}

/// `Ω_w = sech η exp(tanh η z1 z2)`.
pub fn ground_state(coupling: &Coupling) -> SBState {
    SBState {
        coupling: *coupling,
        poly: BTreeMap::from([((0, 0), ONE)]),
        prefactor: Complex64::new(coupling.sech(), 0.0),
    }
}

/// Multiplication by `z_mode`.
pub fn apply_z_creation(state: &SBState, mode: Mode) -> SBState {
    state.with_poly(state.poly.iter().map(|(&k, &c)| (mode.shift(k), c)).collect())
}

/// `∂/∂z_mode`, including the derivative of the kernel:
/// `∂1 (P e^{τ z1 z2}) = (∂1 P + τ z2 P) e^{τ z1 z2}`.
pub fn apply_z_annihilation(state: &SBState, mode: Mode) -> SBState {
    let tau = state.coupling.tanh();
    let mut acc = Accumulator::new();
    for (&k, &c) in &state.poly {
        if let Some((n, lowered)) = mode.lower(k) {
            acc.add(lowered, c * n as f64);
        }
        acc.add(mode.other().shift(k), c * tau);
    }
    state.with_poly(acc.finish())
}

/// Annihilator of the decoupled modes, `w̄_k = cosh η ∂_k - sinh η z_other`.
pub fn apply_w_annihilation(state: &SBState, mode: Mode) -> SBState {
    let d = apply_z_annihilation(state, mode);
    let z = apply_z_creation(state, mode.other());
    linear_combination(state, &[(state.coupling.cosh(), &d), (-state.coupling.sinh(), &z)])
}

/// Creator of the decoupled modes, `w_k = cosh η z_k - sinh η ∂_other`.
///
/// Evaluated in the reduced form `sech η z_k P - sinh η ∂_other P` (kernel
/// derivative folded in), which avoids the `cosh - sinh tanh` cancellation at
/// large η.
pub fn apply_w_creation(state: &SBState, mode: Mode) -> SBState {
    let (sech, sinh) = (state.coupling.sech(), state.coupling.sinh());
    let mut acc = Accumulator::new();
    for (&k, &c) in &state.poly {
        acc.add(mode.shift(k), c * sech);
        if let Some((n, lowered)) = mode.other().lower(k) {
            acc.add(lowered, -c * (sinh * n as f64));
        }
    }
    state.with_poly(acc.finish())
}

/// `Σ s_i * state_i` for states sharing the coupling and prefactor of `like`.
fn linear_combination(like: &SBState, parts: &[(f64, &SBState)]) -> SBState {
    let mut acc = Accumulator::new();
    for (s, st) in parts {
        debug_assert_eq!(st.prefactor, like.prefactor);
        for (&k, &c) in &st.poly {
            acc.add(k, c * *s);
        }
    }
    like.with_poly(acc.finish())
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `w1^{n1} w2^{n2} Ω_w / sqrt(n1! n2!)`, normalized.
///
/// The result is canonicalized so that its largest coefficient is 1 and the
/// remaining scale lives in the prefactor.
pub fn excited_state(coupling: &Coupling, n1: u32, n2: u32) -> Result<SBState> {
    for n in [n1, n2] {
        if n > N_MAX {
            return Err(Error::ExcitationTooHigh(n));
        }
    }
    let mut state = ground_state(coupling);
    for _ in 0..n2 {
        state = apply_w_creation(&state, Mode::Two);
    }
    for _ in 0..n1 {
        state = apply_w_creation(&state, Mode::One);
    }
    state.prefactor /= (factorial(n1) * factorial(n2)).sqrt();
    Ok(canonicalize(state))
}

fn canonicalize(mut state: SBState) -> SBState {
    let pivot = state
        .poly
        .iter()
        .max_by(|(ka, ca), (kb, cb)| {
            ca.norm()
                .total_cmp(&cb.norm())
                // prefer the lower total degree, then the symmetric ordering
                .then_with(|| (kb.0 + kb.1).cmp(&(ka.0 + ka.1)))
                .then_with(|| kb.0.max(kb.1).cmp(&ka.0.max(ka.1)))
        })
        .map(|(_, &c)| c);
    if let Some(p) = pivot {
        for c in state.poly.values_mut() {
            *c /= p;
        }
        state.prefactor *= p;
    }
    state
}

/// `⟨f, g⟩ = ∫ conj(f) g dμ` with `dμ = π^{-2} exp(-|z1|^2 - |z2|^2) d^4x`.
pub fn inner_product(f: &SBState, g: &SBState) -> Result<Complex64> {
    if f.coupling.eta() != g.coupling.eta() {
        return Err(Error::CouplingMismatch(f.coupling.eta(), g.coupling.eta()));
    }
    if f.is_zero() || g.is_zero() {
        return Ok(ZERO);
    }
    let form = moments::coupled_form(&f.coupling);
    let (re, im) = split(&conj_mul(&expand_real(&f.poly), &expand_real(&g.poly)));
    let mut engine = MomentEngine::new(&form);
    let e = Complex64::new(engine.expectation(&re)?, engine.expectation(&im)?);
    // π^{-2} ∫ exp(-x^T Q x) d^4x = cosh^2 η
    let norm = (2.0 * f.coupling.ln_cosh()).exp();
    let out = f.prefactor.conj() * g.prefactor * e * norm;
    if !(out.re.is_finite() && out.im.is_finite()) {
        return Err(Error::NonFinite("inner product"));
    }
    Ok(out)
}

pub fn norm_sq(state: &SBState) -> Result<f64> {
    Ok(inner_product(state, state)?.re)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ladder {
    /// `z_k`
    Create(Mode),
    /// `∂/∂z_k`
    Annihilate(Mode),
}

/// Finite linear combination of operator words.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    terms: Vec<(Complex64, Vec<Ladder>)>,
}

impl Observable {
    pub fn word(word: &[Ladder]) -> Self {
        Observable {
            terms: vec![(ONE, word.to_vec())],
        }
    }

    pub fn identity() -> Self {
        Self::word(&[])
    }

    /// `N_k = z_k ∂_k`.
    pub fn number(mode: Mode) -> Self {
        Self::word(&[Ladder::Create(mode), Ladder::Annihilate(mode)])
    }

    /// `x_k = (z_k + ∂_k) / √2`.
    pub fn position(mode: Mode) -> Self {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Observable {
            terms: vec![(s, vec![Ladder::Create(mode)]), (s, vec![Ladder::Annihilate(mode)])],
        }
    }

    /// `p_k = i (z_k - ∂_k) / √2`.
    pub fn momentum(mode: Mode) -> Self {
        let s = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
        Observable {
            terms: vec![(s, vec![Ladder::Create(mode)]), (-s, vec![Ladder::Annihilate(mode)])],
        }
    }

    pub fn scaled(mut self, s: Complex64) -> Self {
        for t in &mut self.terms {
            t.0 *= s;
        }
        self
    }

    pub fn plus(mut self, other: &Observable) -> Self {
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    /// Operator product `self · other` (`other` acts first).
    pub fn compose(&self, other: &Observable) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ca, wa) in &self.terms {
            for (cb, wb) in &other.terms {
                let mut w = wa.clone();
                w.extend_from_slice(wb);
                terms.push((ca * cb, w));
            }
        }
        Observable { terms }
    }

    /// Applies the observable; each word acts right to left.
    pub fn apply(&self, state: &SBState) -> SBState {
        let mut acc = Accumulator::new();
        for (c, word) in &self.terms {
            let mut s = state.clone();
            for op in word.iter().rev() {
                s = match *op {
                    Ladder::Create(m) => apply_z_creation(&s, m),
                    Ladder::Annihilate(m) => apply_z_annihilation(&s, m),
                };
            }
            for (&k, &v) in &s.poly {
                acc.add(k, v * c);
            }
        }
        state.with_poly(acc.finish())
    }
}

/// `⟨state, O state⟩`.
pub fn expectation(state: &SBState, observable: &Observable) -> Result<Complex64> {
    inner_product(state, &observable.apply(state))
}

/// Reproducing kernel `K(z, w) = exp(z1 conj(w1) + z2 conj(w2))`.
pub fn kernel_eval(z: [Complex64; 2], w: [Complex64; 2]) -> Complex64 {
    (z[0] * w[0].conj() + z[1] * w[1].conj()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn coupling_validation() {
        assert!(Coupling::new(20.0).is_ok());
        assert!(matches!(Coupling::new(25.0), Err(Error::EtaOutOfRange(_))));
        assert!(Coupling::new(f64::NAN).is_err());
        for eta in [-5.0, -0.3, 0.0, 1.0, 5.0] {
            let k = Coupling::new(eta).unwrap();
            assert_abs_diff_eq!(k.sech().powi(2) + k.tanh().powi(2), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(k.one_minus_tanh(), 1.0 - k.tanh(), epsilon = 1e-15);
            assert_abs_diff_eq!(k.ln_cosh(), eta.cosh().ln(), epsilon = 1e-14);
        }
        assert!(Coupling::new(20.0).unwrap().one_minus_tanh() > 0.0);
    }

    #[test]
    fn hamiltonian_metadata() {
        let k = Coupling::new(0.4).unwrap();
        let h = HamiltonianParams::from_coupling(&k, 2.0, 0.1).unwrap();
        assert!(h.is_consistent_with(&k));
        assert!(!h.is_consistent_with(&Coupling::new(0.5).unwrap()));
        assert_abs_diff_eq!(h.omega_prime(), 2.0 / (0.8f64).cosh(), epsilon = 1e-14);
        assert!(HamiltonianParams::from_coupling(&k, 0.0, 0.0).is_err());
    }

    #[test]
    fn ground_state_parameters() {
        let g0 = ground_state(&Coupling::new(0.0).unwrap());
        assert_eq!(g0.prefactor(), ONE);
        assert_eq!(g0.coupling().tanh(), 0.0);
        let g1 = ground_state(&Coupling::new(1.0).unwrap());
        assert_abs_diff_eq!(g1.prefactor().re, 0.648_054_273_663_885_4, epsilon = 1e-15);
        assert_abs_diff_eq!(g1.coupling().tanh(), 0.761_594_155_955_764_9, epsilon = 1e-15);
        for eta in [-2.0, 0.0, 0.5, 3.0] {
            let g = ground_state(&Coupling::new(eta).unwrap());
            assert_abs_diff_eq!(norm_sq(&g).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn creation_shifts_exponents() {
        let k = Coupling::new(0.3).unwrap();
        let m = SBState::from_terms(k, [((2, 0), ONE)], ONE);
        assert_eq!(apply_z_creation(&m, Mode::One).coeff(3, 0), ONE);
        let g = ground_state(&k);
        let s = apply_z_creation(&apply_z_creation(&apply_z_creation(&g, Mode::One), Mode::One), Mode::Two);
        assert_eq!(s.terms().count(), 1);
        assert_eq!(s.coeff(2, 1), ONE);
        assert_eq!(s.prefactor(), g.prefactor());
    }

    #[test]
    fn annihilation_on_vacuum_and_monomials() {
        let k = Coupling::new(0.8).unwrap();
        let d = apply_z_annihilation(&ground_state(&k), Mode::One);
        assert_eq!(d.terms().count(), 1);
        assert_eq!(d.coeff(0, 1), c(k.tanh()));

        let k0 = Coupling::new(0.0).unwrap();
        let m = SBState::from_terms(k0, [((5, 0), ONE)], ONE);
        let d = apply_z_annihilation(&m, Mode::One);
        assert_eq!(d.terms().count(), 1);
        assert_eq!(d.coeff(4, 0), c(5.0));

        let g = ground_state(&k);
        let a = apply_z_annihilation(&apply_z_annihilation(&g, Mode::One), Mode::Two);
        let b = apply_z_annihilation(&apply_z_annihilation(&g, Mode::Two), Mode::One);
        assert_eq!(a, b);
    }

    #[test]
    fn vacuum_is_annihilated() {
        for eta in [-3.0, -0.5, 0.0, 0.5, 3.0, 15.0] {
            let g = ground_state(&Coupling::new(eta).unwrap());
            assert!(apply_w_annihilation(&g, Mode::One).is_zero());
            assert!(apply_w_annihilation(&g, Mode::Two).is_zero());
        }
    }

    #[test]
    fn w_annihilation_reduces_at_zero_coupling() {
        let k = Coupling::new(0.0).unwrap();
        let s = SBState::from_terms(k, [((2, 1), ONE), ((0, 3), c(0.5))], ONE);
        assert_eq!(apply_w_annihilation(&s, Mode::One), apply_z_annihilation(&s, Mode::One));
    }

    #[test]
    fn reduced_w_creation_matches_definition() {
        let k = Coupling::new(0.7).unwrap();
        let s = SBState::from_terms(k, [((1, 2), ONE), ((0, 0), c(-0.3)), ((2, 0), Complex64::new(0.1, 0.4))], ONE);
        for mode in [Mode::One, Mode::Two] {
            let direct = linear_combination(
                &s,
                &[
                    (k.cosh(), &apply_z_creation(&s, mode)),
                    (-k.sinh(), &apply_z_annihilation(&s, mode.other())),
                ],
            );
            let reduced = apply_w_creation(&s, mode);
            assert_eq!(direct.poly.len(), reduced.poly.len());
            for (key, v) in &direct.poly {
                assert_abs_diff_eq!((reduced.poly[key] - v).norm(), 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn excited_single_mode_form() {
        let k = Coupling::new(0.9).unwrap();
        for n in 0..=5u32 {
            let s = excited_state(&k, n, 0).unwrap();
            assert_eq!(s.terms().count(), 1);
            assert_eq!(s.coeff(n, 0), ONE);
            let expected = k.sech().powi(n as i32 + 1) / factorial(n).sqrt();
            assert_abs_diff_eq!(s.prefactor().re, expected, epsilon = 1e-15);
        }
        assert_eq!(excited_state(&k, 0, 0).unwrap(), ground_state(&k));
        let k0 = Coupling::new(0.0).unwrap();
        let s = excited_state(&k0, 1, 1).unwrap();
        assert_eq!(s.terms().count(), 1);
        assert_eq!(s.coeff(1, 1), ONE);
        assert!(matches!(excited_state(&k, N_MAX + 1, 0), Err(Error::ExcitationTooHigh(_))));
    }

    #[test]
    fn inner_product_examples() {
        let k0 = Coupling::new(0.0).unwrap();
        for n in 0..5u32 {
            for m in 0..5u32 {
                let a = SBState::from_terms(k0, [((n, 0), ONE)], c(1.0 / factorial(n).sqrt()));
                let b = SBState::from_terms(k0, [((m, 0), ONE)], c(1.0 / factorial(m).sqrt()));
                let ip = inner_product(&a, &b).unwrap();
                assert_abs_diff_eq!(ip.re, if n == m { 1.0 } else { 0.0 }, epsilon = 1e-13);
                assert_abs_diff_eq!(ip.im, 0.0, epsilon = 1e-13);
            }
        }
        let k = Coupling::new(1.2).unwrap();
        let g = ground_state(&k);
        let z1g = apply_z_creation(&g, Mode::One);
        assert_abs_diff_eq!(inner_product(&g, &z1g).unwrap().norm(), 0.0, epsilon = 1e-14);
        let other = ground_state(&Coupling::new(1.0).unwrap());
        assert!(matches!(inner_product(&g, &other), Err(Error::CouplingMismatch(..))));
    }

    #[test]
    fn expectation_examples() {
        let k = Coupling::new(1.1).unwrap();
        let g = ground_state(&k);
        let n = expectation(&g, &Observable::number(Mode::One)).unwrap();
        assert_abs_diff_eq!(n.re, k.sinh().powi(2), epsilon = 1e-12);
        let zz = expectation(&g, &Observable::word(&[Ladder::Create(Mode::One), Ladder::Create(Mode::Two)])).unwrap();
        assert_abs_diff_eq!(zz.re, (2.2f64).sinh() / 2.0, epsilon = 1e-12);
        let z1sq = expectation(&g, &Observable::word(&[Ladder::Create(Mode::One), Ladder::Create(Mode::One)])).unwrap();
        assert_abs_diff_eq!(z1sq.norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn word_order_is_right_to_left() {
        // ∂1 z1 = z1 ∂1 + 1
        let k = Coupling::new(0.6).unwrap();
        let g = ground_state(&k);
        let dz = expectation(&g, &Observable::word(&[Ladder::Annihilate(Mode::One), Ladder::Create(Mode::One)])).unwrap();
        let zd = expectation(&g, &Observable::number(Mode::One)).unwrap();
        assert_abs_diff_eq!((dz - zd).re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn kernel_values() {
        let o = [ZERO, ZERO];
        assert_eq!(kernel_eval(o, o), ONE);
        let e = kernel_eval([ONE, ZERO], [ONE, ZERO]);
        assert_abs_diff_eq!(e.re, std::f64::consts::E, epsilon = 1e-15);
    }

    #[test]
    fn abs_sq_is_real_and_matches_pointwise() {
        let k = Coupling::new(0.5).unwrap();
        let s = excited_state(&k, 2, 1).unwrap();
        let p = s.abs_sq_poly().unwrap();
        let z = [Complex64::new(0.3, -0.7), Complex64::new(-1.1, 0.2)];
        let direct: Complex64 = s.terms().map(|(&(a, b), &c)| c * z[0].powu(a) * z[1].powu(b)).sum();
        let x = [z[0].re, z[1].re, z[0].im, z[1].im];
        assert_abs_diff_eq!(p.eval(&x), direct.norm_sqr(), epsilon = 1e-12);
    }
}
