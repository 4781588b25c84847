//! Euler's constant, harmonic numbers and `Γ(0, x) = E_1(x)`.

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant, 0.57721566490153286061.
#[allow(clippy::excessive_precision)]
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

const MAX_ITER: usize = 500;

/// `H_n = 1 + 1/2 + ... + 1/n`; summed exactly as a rational for moderate `n`.
pub fn harmonic(n: u32) -> f64 {
    if n <= 40 {
        let h = (1..=n as i128).fold(Ratio::from_integer(0i128), |acc, k| acc + Ratio::new(1, k));
        *h.numer() as f64 / *h.denom() as f64
    } else {
        (1..=n).rev().map(|k| 1.0 / k as f64).sum()
    }
}

pub fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Upper incomplete gamma function at `s = 0`, `∫_x^∞ e^{-t}/t dt`.
pub fn gamma0(x: f64) -> Result<f64> {
    Ok(exp_gamma0(x)? * (-x).exp())
}

/// `e^x Γ(0, x)`, finite for all `x > 0`.
///
/// Power series for `x <= 1`, modified Lentz continued fraction otherwise.
pub fn exp_gamma0(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::InvalidArgument(format!("Γ(0, x) needs x > 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x <= 1.0 {
        // E1(x) = -γ - ln x - Σ_{k≥1} (-x)^k / (k k!)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..MAX_ITER {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        Ok((-EULER_GAMMA - x.ln() - sum) * x.exp())
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                return Ok(h);
            }
        }
        Err(Error::NonFinite("Γ(0, x) continued fraction did not converge"))
    }
}
