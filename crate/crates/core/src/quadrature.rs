//! Numerical integration against Gaussian weights in two and four dimensions.
//!
//! Three independent integrators live here:
//!
//! * [`integrate_gaussian`]: whitened tensor-product Gauss–Hermite with order
//!   doubling. Spectrally accurate for smooth integrands.
//! * [`integrate_polar`]: block-triangular whitening followed by polar
//!   coordinates in each complex plane, a double-exponential rule in the
//!   squared radius and the trapezoidal rule in the angle. Used for entropy
//!   integrands, whose `p ln p` factor is only continuous where the Husimi
//!   polynomial vanishes; tensor Gauss–Hermite converges like `O(N^-2)` there.
//! * [`mc_integrate`]: seeded Monte Carlo with exact Gaussian sampling.
//!
//! All three return normalized expectations `E[f] = ∫ f w / ∫ w` for the weight
//! `w = exp(-x^T Q x)`. Parallel sums are reduced in a fixed order, so results
//! do not depend on the number of worker threads.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::GaussianForm;
use crate::poly::MAX_DIM;

pub const MAX_GH_ORDER: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub base_order: usize,
    pub max_order: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            base_order: 24,
            max_order: 192,
            rel_tol: 1e-9,
            abs_tol: 1e-11,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(2 <= self.base_order && self.base_order <= self.max_order && self.max_order <= MAX_GH_ORDER) {
            return Err(Error::InvalidArgument(format!(
                "need 2 <= base_order ({}) <= max_order ({}) <= {MAX_GH_ORDER}",
                self.base_order, self.max_order
            )));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        Ok(())
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSpec {
    pub samples: usize,
    pub seed: u64,
    pub chunk: usize,
}

impl Default for McSpec {
    fn default() -> Self {
        McSpec {
            samples: 1_000_000,
            seed: 0x5eed_2024,
            chunk: 1 << 16,
        }
    }
}

impl McSpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 1000 {
            return Err(Error::InvalidArgument(format!("at least 1000 samples required, got {}", self.samples)));
        }
        if self.chunk == 0 {
            return Err(Error::InvalidArgument("chunk size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    /// Difference between the last two refinement levels.
    pub est_err: f64,
    pub converged: bool,
    /// Gauss–Hermite order per axis, or angle count for the polar rule.
    pub order: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub value: f64,
    pub stderr: f64,
}

/// Gauss–Hermite rule for the weight `exp(-t^2)`.
///
/// Nodes come from the Golub–Welsch eigenproblem and are polished with Newton
/// steps on the normalized Hermite recurrence; weights use the Christoffel
/// formula evaluated with Hermite functions so that nothing overflows at
/// order 200.
pub fn gh_nodes(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order == 0 || order > MAX_GH_ORDER {
        return Err(Error::OrderOutOfRange(order));
    }
    let n = order;
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (pn, pn1, _) = hermite_functions(n, *x);
            if pn1 == 0.0 {
                break;
            }
            // ψ_n' / ψ_n reduces to sqrt(2n) ψ_{n-1} / ψ_n at a root
            let dx = pn / ((2.0 * n as f64).sqrt() * pn1);
            *x -= dx;
            if dx.abs() < 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
    }
    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let (_, _, sum_sq) = hermite_functions(n, x);
            (-x * x).exp() / sum_sq
        })
        .collect();

    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -x;
        nodes[j] = x;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// `(ψ_n(x), ψ_{n-1}(x), Σ_{k<n} ψ_k(x)^2)` for orthonormal Hermite functions
/// `ψ_k = p_k e^{-x^2/2}`.
fn hermite_functions(n: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * x * x).exp();
    let mut sum_sq = 0.0;
    for k in 0..n {
        sum_sq += cur * cur;
        let next = (2.0 / (k as f64 + 1.0)).sqrt() * x * cur - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    (cur, prev, sum_sq)
}

/// Pairwise summation in index order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn order_sequence(spec: &QuadratureSpec) -> Vec<usize> {
    let mut orders = vec![spec.base_order];
    while *orders.last().unwrap() < spec.max_order {
        let next = (orders.last().unwrap() * 2).min(spec.max_order);
        orders.push(next);
    }
    orders
}

/// `E[f]` under `exp(-x^T Q x)` by tensor Gauss–Hermite in whitened coordinates.
pub fn integrate_gaussian<F>(f: F, form: &GaussianForm, spec: &QuadratureSpec) -> Result<QuadResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    spec.validate()?;
    let mut prev: Option<f64> = None;
    let mut last = QuadResult {
        value: f64::NAN,
        est_err: f64::INFINITY,
        converged: false,
        order: 0,
    };
    for order in order_sequence(spec) {
        let value = tensor_gh(&f, form, order)?;
        if let Some(p) = prev {
            let diff = (value - p).abs();
            last = QuadResult {
                value,
                est_err: diff,
                converged: diff <= spec.tolerance(value),
                order,
            };
            if last.converged {
                return Ok(last);
            }
        } else {
            last = QuadResult {
                value,
                est_err: f64::INFINITY,
                converged: false,
                order,
            };
        }
        prev = Some(value);
    }
    Ok(last)
}

fn tensor_gh<F>(f: &F, form: &GaussianForm, order: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = form.dim();
    let (nodes, weights) = gh_nodes(order)?;
    let norm = PI.powf(-0.5 * dim as f64);
    let outer: Vec<Result<f64>> = (0..order)
        .into_par_iter()
        .map(|i0| {
            let mut y = [0.0; MAX_DIM];
            let mut x = [0.0; MAX_DIM];
            let mut idx = [0usize; MAX_DIM];
            y[0] = nodes[i0];
            let inner_count = order.pow(dim as u32 - 1);
            let mut acc = 0.0;
            for _ in 0..inner_count {
                let mut w = weights[i0];
                for d in 1..dim {
                    y[d] = nodes[idx[d]];
                    w *= weights[idx[d]];
                }
                form.unwhiten(&y[..dim], &mut x[..dim]);
                let v = f(&x[..dim]);
                if !v.is_finite() {
                    return Err(Error::NonFinite("Gauss-Hermite integrand"));
                }
                acc += w * v;
                // odometer over axes 1..dim
                for d in (1..dim).rev() {
                    idx[d] += 1;
                    if idx[d] < order {
                        break;
                    }
                    idx[d] = 0;
                }
            }
            Ok(acc)
        })
        .collect();
    let partial: Vec<f64> = outer.into_iter().collect::<Result<_>>()?;
    Ok(norm * pairwise_sum(&partial))
}

/// Seeded Monte Carlo estimate of `E[f]` with exact Gaussian sampling.
///
/// Chunk `k` draws from its own ChaCha stream, and chunk statistics are merged
/// in index order, so the result depends only on `(seed, samples, chunk)`.
pub fn mc_integrate<F>(f: F, form: &GaussianForm, spec: &McSpec) -> Result<McResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    spec.validate()?;
    let dim = form.dim();
    let chunks = spec.samples.div_ceil(spec.chunk);
    let stats: Vec<Result<(f64, f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(k as u64);
            let len = spec.chunk.min(spec.samples - k * spec.chunk);
            let mut y = [0.0; MAX_DIM];
            let mut x = [0.0; MAX_DIM];
            let (mut mean, mut m2) = (0.0, 0.0);
            for i in 0..len {
                for yd in y.iter_mut().take(dim) {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    *yd = g * std::f64::consts::FRAC_1_SQRT_2;
                }
                form.unwhiten(&y[..dim], &mut x[..dim]);
                let v = f(&x[..dim]);
                if !v.is_finite() {
                    return Err(Error::NonFinite("Monte Carlo integrand"));
                }
                let delta = v - mean;
                mean += delta / (i + 1) as f64;
                m2 += delta * (v - mean);
            }
            Ok((len as f64, mean, m2))
        })
        .collect();
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for s in stats {
        let (nb, mb, m2b) = s?;
        let total = n + nb;
        let delta = mb - mean;
        mean += delta * nb / total;
        m2 += m2b + delta * delta * n * nb / total;
        n = total;
    }
    let var = if n > 1.0 { m2 / (n - 1.0) } else { 0.0 };
    Ok(McResult {
        value: mean,
        stderr: (var / n).sqrt(),
    })
}

/// Double-exponential rule for `∫_0^∞ g(t) e^{-t} dt` with `t = exp(s - e^{-s})`,
/// step `h` on `s ∈ [-6, 6]`. Returns `(t_k, weight_k)`; weights include `e^{-t}`.
pub fn de_laguerre_nodes(h: f64) -> Vec<(f64, f64)> {
    let k_max = (6.0 / h).round() as i64;
    (-k_max..=k_max)
        .filter_map(|k| {
            let s = k as f64 * h;
            let e = (-s).exp();
            let t = (s - e).exp();
            let w = h * t * (1.0 + e) * (-t).exp();
            (t > 0.0 && w > 0.0).then_some((t, w))
        })
        .collect()
}

/// Affine map `x = A y` sending `exp(-|y|^2)` to `exp(-x^T Q x)`, lower
/// block-triangular with respect to the coordinate planes: the leading plane
/// depends only on `(y0, y1)`.
#[derive(Clone, Debug)]
pub struct PlaneWhitening {
    dim: usize,
    matrix: DMatrix<f64>,
}

impl PlaneWhitening {
    /// `lead` names the two coordinates of the leading plane. For a 2-D form it
    /// must cover both coordinates.
    pub fn new(form: &GaussianForm, lead: [usize; 2]) -> Result<Self> {
        let dim = form.dim();
        if lead[0] == lead[1] || lead.iter().any(|&i| i >= dim) {
            return Err(Error::InvalidArgument(format!("bad leading plane {lead:?}")));
        }
        let q = form.qmatrix();
        match dim {
            2 => Ok(PlaneWhitening {
                dim,
                matrix: form.whitening().clone(),
            }),
            4 => {
                let rest: Vec<usize> = (0..4).filter(|i| !lead.contains(i)).collect();
                let b = [rest[0], rest[1]];
                let blk = |r: &[usize; 2], c: &[usize; 2]| DMatrix::from_fn(2, 2, |i, j| q[(r[i], c[j])]);
                let q_aa = blk(&lead, &lead);
                let q_ab = blk(&lead, &b);
                let q_bb = blk(&b, &b);
                let q_bb_inv = q_bb.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
                let m = -&q_bb_inv * q_ab.transpose();
                let schur = &q_aa + &q_ab * &m;
                let schur = (&schur + schur.transpose()) * 0.5;
                let w_a = GaussianForm::new(schur)?.whitening().clone();
                let w_b = GaussianForm::new(q_bb)?.whitening().clone();
                let mw = &m * &w_a;
                let mut a = DMatrix::zeros(4, 4);
                for i in 0..2 {
                    for j in 0..2 {
                        a[(lead[i], j)] = w_a[(i, j)];
                        a[(b[i], j)] = mw[(i, j)];
                        a[(b[i], 2 + j)] = w_b[(i, j)];
                    }
                }
                Ok(PlaneWhitening { dim, matrix: a })
            }
            _ => Err(Error::InvalidArgument(format!("polar rule supports dim 2 or 4, got {dim}"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, y: &[f64], x: &mut [f64]) {
        for i in 0..self.dim {
            let mut acc = 0.0;
            for j in 0..self.dim {
                acc += self.matrix[(i, j)] * y[j];
            }
            x[i] = acc;
        }
    }
}

const POLAR_BASE_STEP: f64 = 0.5;
const POLAR_MIN_STEP: f64 = 1.0 / 64.0;
const POLAR_BASE_ANGLES: usize = 8;
/// Angle cap per plane for 4-D integrands without a joint rotation symmetry;
/// `angles^2 * radial^2` evaluations per level.
const POLAR_MAX_ANGLES_4D: usize = 64;
/// Angle cap when only one angle is summed numerically.
const POLAR_MAX_ANGLES: usize = 1024;
/// The angle count is also bounded by this multiple of `QuadratureSpec::max_order`.
const POLAR_ANGLES_PER_ORDER: usize = 8;

/// Joint rotation `(y_a, y_b) -> (R(φ) y_a, R(±φ) y_b)` leaving a 4-D
/// integrand unchanged in whitened coordinates, if any. Returns the sign.
fn joint_rotation_sign<F>(f: &F, map: &PlaneWhitening) -> Option<f64>
where
    F: Fn(&[f64]) -> f64,
{
    const PROBES: [[f64; 4]; 4] = [
        [0.31, -0.72, 1.13, 0.27],
        [-1.4, 0.45, -0.38, 0.91],
        [0.83, 1.21, -0.66, -1.07],
        [-0.21, -0.94, 0.52, 1.6],
    ];
    const ANGLES: [f64; 2] = [0.7, 2.3];
    let eval = |y: &[f64; 4]| {
        let mut x = [0.0; 4];
        map.apply(y, &mut x);
        f(&x)
    };
    let base: Vec<f64> = PROBES.iter().map(eval).collect();
    let scale = base.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    [1.0, -1.0].into_iter().find(|&sign| {
        PROBES.iter().zip(&base).all(|(y, &v0)| {
            ANGLES.iter().all(|&phi| {
                let (c1, s1) = (phi.cos(), phi.sin());
                let (c2, s2) = ((sign * phi).cos(), (sign * phi).sin());
                let r = [
                    c1 * y[0] - s1 * y[1],
                    s1 * y[0] + c1 * y[1],
                    c2 * y[2] - s2 * y[3],
                    s2 * y[2] + c2 * y[3],
                ];
                (eval(&r) - v0).abs() <= 1e-11 * scale
            })
        })
    })
}

/// `E[f]` under `exp(-x^T Q x)` with polar coordinates in each whitened plane.
///
/// The radial step is halved until two levels agree, then the angle count is
/// doubled until two levels agree. A 4-D integrand invariant under a joint
/// rotation of both planes has its first angle integrated out exactly.
pub fn integrate_polar<F>(f: F, form: &GaussianForm, lead: [usize; 2], spec: &QuadratureSpec) -> Result<QuadResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    spec.validate()?;
    let map = PlaneWhitening::new(form, lead)?;
    let reduced = map.dim == 4 && joint_rotation_sign(&f, &map).is_some();
    let cap = if map.dim == 4 && !reduced {
        POLAR_MAX_ANGLES_4D
    } else {
        POLAR_MAX_ANGLES
    };
    let max_angles = cap.min(POLAR_ANGLES_PER_ORDER * spec.max_order).max(POLAR_BASE_ANGLES);
    let rule = |h: f64, angles: usize| polar_rule(&f, &map, h, angles, reduced);
    let mut angles = POLAR_BASE_ANGLES.min(max_angles);
    let mut h = POLAR_BASE_STEP;

    let mut value = rule(h, angles)?;
    let mut radial_ok = false;
    let mut est_err = f64::INFINITY;
    while h > POLAR_MIN_STEP {
        h *= 0.5;
        let next = rule(h, angles)?;
        est_err = (next - value).abs();
        value = next;
        if est_err <= spec.tolerance(value) {
            radial_ok = true;
            break;
        }
    }
    let mut angular_ok = false;
    while angles < max_angles {
        angles = (angles * 2).min(max_angles);
        let next = rule(h, angles)?;
        let diff = (next - value).abs();
        est_err = diff;
        value = next;
        if diff <= spec.tolerance(value) {
            angular_ok = true;
            break;
        }
    }
    Ok(QuadResult {
        value,
        est_err,
        converged: radial_ok && angular_ok,
        order: angles,
    })
}

fn polar_rule<F>(f: &F, map: &PlaneWhitening, h: f64, angles: usize, reduced: bool) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let radial = de_laguerre_nodes(h);
    let trig: Vec<(f64, f64)> = (0..angles)
        .map(|j| {
            let th = 2.0 * PI * (j as f64 + 0.5) / angles as f64;
            (th.cos(), th.sin())
        })
        .collect();
    let aw = 1.0 / angles as f64;
    let planes = map.dim / 2;
    let outer: &[(f64, f64)] = if reduced { &[(1.0, 0.0)] } else { &trig };
    let ow = 1.0 / outer.len() as f64;

    let partial: Vec<Result<f64>> = radial
        .par_iter()
        .map(|&(t1, w1)| {
            let r1 = t1.sqrt();
            let mut y = [0.0; MAX_DIM];
            let mut x = [0.0; MAX_DIM];
            let mut acc = 0.0;
            if planes == 1 {
                for &(c1, s1) in &trig {
                    y[0] = r1 * c1;
                    y[1] = r1 * s1;
                    map.apply(&y[..2], &mut x[..2]);
                    let v = f(&x[..2]);
                    if !v.is_finite() {
                        return Err(Error::NonFinite("polar integrand"));
                    }
                    acc += aw * v;
                }
                return Ok(w1 * acc);
            }
            for &(c1, s1) in outer {
                y[0] = r1 * c1;
                y[1] = r1 * s1;
                let mut inner = 0.0;
                for &(t2, w2) in &radial {
                    let r2 = t2.sqrt();
                    let mut ring = 0.0;
                    for &(c2, s2) in &trig {
                        y[2] = r2 * c2;
                        y[3] = r2 * s2;
                        map.apply(&y[..4], &mut x[..4]);
                        let v = f(&x[..4]);
                        if !v.is_finite() {
                            return Err(Error::NonFinite("polar integrand"));
                        }
                        ring += v;
                    }
                    inner += w2 * aw * ring;
                }
                acc += ow * inner;
            }
            Ok(w1 * acc)
        })
        .collect();
    let partial: Vec<f64> = partial.into_iter().collect::<Result<_>>()?;
    Ok(pairwise_sum(&partial))
}
