//! Wehrl entropies `S = -∫ F ln F` of Husimi densities, their closed forms for
//! the entangled ground state and single-mode excitations, and the mutual
//! information `I = S_1 + S_2 - S`.

pub mod special;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::husimi::{self, HusimiDensity, LOG_FLOOR};
use crate::moments::{MomentEngine, U1, U2, V1, V2};
use crate::poly::RealPoly;
use crate::quadrature::{self, QuadratureSpec};
use crate::sbs::{self, ln_cosh, Coupling, Mode, N_MAX};

pub use special::{exp_gamma0, gamma0, harmonic, ln_factorial, EULER_GAMMA};

use std::f64::consts::PI;

/// Numerically evaluated entropy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub est_err: f64,
    pub converged: bool,
}

/// Wehrl entropy of a polynomial × Gaussian density.
///
/// With `F = e^c p(x) e^{-x^T Q x}` and `∫ F = 1`,
/// `S = -c + E_F[x^T Q x] - E_F[ln p]`. The first two terms are exact
/// moments; only `E_F[ln p]` is integrated numerically, and only when `p` is
/// not constant. The polar rule leads with the plane on which `p` vanishes to
/// the highest order, so that zero sits at the radial endpoint.
pub fn wehrl_numeric(density: &HusimiDensity, spec: &QuadratureSpec) -> Result<EntropyEstimate> {
    let form = density.form();
    let poly = density.poly();
    let mut engine = MomentEngine::new(form);
    let mean_p = engine.expectation(poly)?;
    if !(mean_p > 0.0) {
        return Err(Error::NonFinite("density polynomial has nonpositive mean"));
    }
    let qform = RealPoly::quadratic_form(form.qmatrix());
    let mean_quad = engine.expectation(&poly.mul(&qform))? / mean_p;

    let (mean_ln_p, est_err, converged) = if poly.degree() == 0 {
        (poly.coeff(&Default::default()).ln(), 0.0, true)
    } else {
        // E_F[ln p] = E_G[q ln q] + ln E_G[p], q = p / E_G[p]
        let eval = poly.scale(1.0 / mean_p).evaluator();
        let r = quadrature::integrate_polar(
            |x| {
                let q = eval.eval(x);
                if q > LOG_FLOOR {
                    q * q.ln()
                } else {
                    0.0
                }
            },
            form,
            leading_plane(density),
            spec,
        )?;
        (r.value + mean_p.ln(), r.est_err, r.converged)
    };

    let value = -density.log_prefactor() + mean_quad - mean_ln_p;
    if !value.is_finite() {
        return Err(Error::NonFinite("Wehrl entropy"));
    }
    Ok(EntropyEstimate {
        value,
        est_err,
        converged,
    })
}

fn leading_plane(density: &HusimiDensity) -> [usize; 2] {
    if density.dim_modes() == 1 {
        return [0, 1];
    }
    let p = density.poly();
    let (o1, o2) = (p.vanishing_order(&[U1, V1]), p.vanishing_order(&[U2, V2]));
    let first = density.modes()[0];
    let lead = if o2 > o1 { first.other() } else { first };
    density.mode_coords(lead).unwrap()
}

/// `2 + 2 ln π + 2 ln cosh η`
pub fn s_total_ground(eta: f64) -> f64 {
    2.0 + 2.0 * PI.ln() + 2.0 * ln_cosh(eta)
}

/// `1 + ln π + 2 ln cosh η`, either subsystem.
pub fn s_partial_ground(eta: f64) -> f64 {
    1.0 + PI.ln() + 2.0 * ln_cosh(eta)
}

pub fn mutual_info_ground(eta: f64) -> f64 {
    2.0 * ln_cosh(eta)
}

/// Entropy added by `n` quanta in one mode, `n (1 + γ - H_n) + ln n!`.
fn excitation_term(n: u32) -> f64 {
    n as f64 * (1.0 + EULER_GAMMA - harmonic(n)) + ln_factorial(n)
}

/// Total entropy of `(n, 0)` (equivalently `(0, n)`).
pub fn s_total_excited(eta: f64, n: u32) -> f64 {
    2.0 * (1.0 + PI.ln() + ln_cosh(eta)) + excitation_term(n)
}

/// Marginal entropy of the excited subsystem of `(n, 0)`.
pub fn s_partial_excited_same(eta: f64, n: u32) -> f64 {
    1.0 + PI.ln() + 2.0 * ln_cosh(eta) + excitation_term(n)
}

/// `tanh²η e^{csch²η} Γ(0, csch²η)`, continuous at η = 0 where it vanishes.
fn gamma_term(eta: f64) -> f64 {
    if eta == 0.0 {
        return 0.0;
    }
    let sh = eta.sinh();
    let t2 = eta.tanh().powi(2);
    if eta.abs() < 1e-6 {
        // e^x E1(x) ~ 1/x - 1/x^2 + 2/x^3 with 1/x = sinh^2 η
        let s2 = sh * sh;
        return t2 * s2 * (1.0 - s2 + 2.0 * s2 * s2);
    }
    let x = 1.0 / (sh * sh);
    t2 * exp_gamma0(x).expect("csch^2 is positive")
}

/// Marginal entropy of the non-excited subsystem of `(1, 0)`:
/// `1 + ln π + 4 ln cosh η - tanh²η e^{csch²η} Γ(0, csch²η)`.
pub fn s_partial_other_first_excited(eta: f64) -> f64 {
    1.0 + PI.ln() + 4.0 * ln_cosh(eta) - gamma_term(eta)
}

/// `4 ln cosh η - tanh²η e^{csch²η} Γ(0, csch²η)`
pub fn mutual_info_first_excited(eta: f64) -> f64 {
    4.0 * ln_cosh(eta) - gamma_term(eta)
}

/// Analytic, numeric and discrepancy for one entropy-like quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyValue {
    pub analytic: Option<f64>,
    pub numeric: f64,
    /// `|analytic - numeric|` when a closed form exists.
    pub err: Option<f64>,
}

impl EntropyValue {
    fn new(analytic: Option<f64>, numeric: f64) -> Self {
        EntropyValue {
            analytic,
            numeric,
            err: analytic.map(|a| (a - numeric).abs()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub eta: f64,
    pub state: (u32, u32),
    pub s_total: EntropyValue,
    pub s_partial_1: EntropyValue,
    pub s_partial_2: EntropyValue,
    pub mutual_info: EntropyValue,
    pub flags: Vec<String>,
}

impl EntropyReport {
    pub fn converged(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn values(&self) -> [(&'static str, &EntropyValue); 4] {
        [
            ("s_total", &self.s_total),
            ("s_partial_1", &self.s_partial_1),
            ("s_partial_2", &self.s_partial_2),
            ("mutual_info", &self.mutual_info),
        ]
    }
}

fn analytic_total(eta: f64, n1: u32, n2: u32) -> Option<f64> {
    match (n1, n2) {
        (n, 0) | (0, n) => Some(s_total_excited(eta, n)),
        _ => None,
    }
}

/// Closed form for the marginal of a mode holding `own` quanta while the other holds `other`.
fn analytic_partial(eta: f64, own: u32, other: u32) -> Option<f64> {
    match (own, other) {
        (n, 0) => Some(s_partial_excited_same(eta, n)),
        (0, 1) => Some(s_partial_other_first_excited(eta)),
        _ => None,
    }
}

/// Full entropy report for the state `(n1, n2)` at coupling `eta`.
pub fn report(eta: f64, n1: u32, n2: u32, spec: &QuadratureSpec) -> Result<EntropyReport> {
    for n in [n1, n2] {
        if n > N_MAX {
            return Err(Error::ExcitationTooHigh(n));
        }
    }
    let coupling = Coupling::new(eta)?;
    let state = sbs::excited_state(&coupling, n1, n2)?;
    let density = husimi::husimi_of(&state)?;
    let m1 = husimi::marginal(&density, Mode::One)?;
    let m2 = husimi::marginal(&density, Mode::Two)?;

    let (total, (p1, p2)) = rayon::join(
        || wehrl_numeric(&density, spec),
        || rayon::join(|| wehrl_numeric(&m1, spec), || wehrl_numeric(&m2, spec)),
    );
    let (total, p1, p2) = (total?, p1?, p2?);

    let mut flags = Vec::new();
    for (name, e) in [("s_total", &total), ("s_partial_1", &p1), ("s_partial_2", &p2)] {
        if !e.converged {
            flags.push(format!("{name}: quadrature not converged (est_err {:.3e})", e.est_err));
        }
    }

    let a_total = analytic_total(eta, n1, n2);
    let a_p1 = analytic_partial(eta, n1, n2);
    let a_p2 = analytic_partial(eta, n2, n1);
    let a_mutual = match (a_total, a_p1, a_p2) {
        (Some(s), Some(s1), Some(s2)) => Some(s1 + s2 - s),
        _ => None,
    };

    Ok(EntropyReport {
        eta,
        state: (n1, n2),
        s_total: EntropyValue::new(a_total, total.value),
        s_partial_1: EntropyValue::new(a_p1, p1.value),
        s_partial_2: EntropyValue::new(a_p2, p2.value),
        mutual_info: EntropyValue::new(a_mutual, p1.value + p2.value - total.value),
        flags,
    })
}
