//! Self-checks behind `bargmann verify`. Each check reports its largest
//! discrepancy against a tolerance; Monte Carlo checks measure it in standard
//! errors.

use std::f64::consts::PI;

use bargmann::husimi::{husimi_of, marginal};
use bargmann::moments::{self, observable_report, GaussianForm};
use bargmann::poly::{MonomialIndex, RealPoly};
use bargmann::quadrature::{gh_nodes, integrate_gaussian, mc_integrate, McSpec, QuadratureSpec};
use bargmann::sbs::{
    apply_w_annihilation, apply_w_creation, apply_z_annihilation, apply_z_creation, excited_state, ground_state,
    inner_product, Coupling, Mode, SBState,
};
use bargmann::wehrl;
use bargmann::HusimiDensity;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub check_name: String,
    pub status: &'static str,
    pub max_discrepancy: f64,
    pub tolerance: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.status == "pass"
    }
}

const DEFAULTS: [(&str, f64); 15] = [
    ("bogoliubov_constraint", 1e-12),
    ("ccr_ladder", 1e-10),
    ("ccr_bogoliubov", 1e-10),
    ("vacuum_annihilation", 1e-14),
    ("orthonormality", 1e-10),
    ("swap_symmetry", 1e-10),
    ("observables_closed_form", 1e-10),
    ("isserlis_vs_gauss_hermite", 1e-10),
    ("gauss_hermite_vs_monte_carlo", 4.0),
    ("husimi_normalization", 1e-8),
    ("marginal_normalization", 1e-8),
    ("entropy_ground_total", 1e-7),
    ("entropy_ground_partial", 1e-7),
    ("entropy_excited_total", 1e-6),
    ("entropy_first_excited_partial", 1e-6),
];

/// Per-check tolerances after `name=value` overrides. An override applies to
/// every check whose name starts with it, so `entropy=1e-9` tightens all four
/// entropy checks.
#[derive(Clone, Debug)]
pub struct Tolerances {
    values: Vec<(&'static str, f64)>,
}

impl Tolerances {
    pub fn new(overrides: &[(String, f64)]) -> Result<Self, CliError> {
        let mut values = DEFAULTS.to_vec();
        for (name, v) in overrides {
            let mut hit = false;
            for (check, tol) in values.iter_mut() {
                if check.starts_with(name.as_str()) {
                    *tol = *v;
                    hit = true;
                }
            }
            if !hit {
                let known: Vec<&str> = DEFAULTS.iter().map(|(n, _)| *n).collect();
                return Err(CliError::Usage(format!("unknown check `{name}`; known: {}", known.join(", "))));
            }
        }
        Ok(Tolerances { values })
    }

    pub fn get(&self, name: &str) -> f64 {
        self.values.iter().find(|(n, _)| *n == name).map(|(_, v)| *v).expect("known check")
    }

    fn report(&self, name: &'static str, discrepancy: f64) -> CheckReport {
        let tolerance = self.get(name);
        CheckReport {
            check_name: name.to_string(),
            status: if discrepancy <= tolerance { "pass" } else { "fail" },
            max_discrepancy: discrepancy,
            tolerance,
        }
    }
}

const ETAS: [f64; 3] = [0.0, 0.5, 1.5];

const POINTS: [[Complex64; 2]; 3] = [
    [Complex64::new(0.3, -0.2), Complex64::new(-0.5, 0.7)],
    [Complex64::new(1.1, 0.4), Complex64::new(0.2, -0.9)],
    [Complex64::new(-0.6, -0.6), Complex64::new(0.8, 0.1)],
];

/// Fixed pseudo-random test states, reproducible without a generator.
fn sample_states() -> Vec<SBState> {
    (0..24)
        .map(|k| {
            let eta = -1.8 + 0.15 * k as f64;
            let terms = (0..4).map(|j| {
                let a = ((k * 7 + j * 3) % 4) as u32;
                let b = ((k * 5 + j * 11) % 4) as u32;
                let phase = 0.37 * (k * 4 + j) as f64;
                ((a, b), Complex64::from_polar(1.0 / (1.0 + j as f64), phase))
            });
            SBState::from_terms(Coupling::new(eta).unwrap(), terms, Complex64::new(1.0, 0.0))
        })
        .collect()
}

type Op = fn(&SBState, Mode) -> SBState;

fn ccr_residual(lower: Op, raise: Op) -> f64 {
    let mut worst: f64 = 0.0;
    for f in sample_states() {
        let scale = POINTS.iter().map(|&z| f.eval(z).norm()).fold(1.0, f64::max);
        for mode in [Mode::One, Mode::Two] {
            let ab = lower(&raise(&f, mode), mode);
            let ba = raise(&lower(&f, mode), mode);
            for &z in &POINTS {
                worst = worst.max((ab.eval(z) - ba.eval(z) - f.eval(z)).norm() / scale);
            }
        }
    }
    worst
}

fn bogoliubov_constraint() -> f64 {
    (0..=20)
        .map(|k| {
            let c = Coupling::new(-5.0 + 0.5 * k as f64).unwrap();
            (c.cosh().powi(2) - c.sinh().powi(2) - 1.0).abs() / c.cosh().powi(2)
        })
        .fold(0.0, f64::max)
}

fn vacuum_annihilation() -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..=10 {
        let g = ground_state(&Coupling::new(-2.0 + 0.4 * k as f64).unwrap());
        for mode in [Mode::One, Mode::Two] {
            let r = apply_w_annihilation(&g, mode);
            worst = worst.max(r.terms().map(|(_, c)| c.norm()).fold(0.0, f64::max));
        }
    }
    worst
}

fn orthonormality_and_swap() -> Result<(f64, f64), CliError> {
    let mut ortho: f64 = 0.0;
    let mut swap: f64 = 0.0;
    for eta in ETAS {
        let c = Coupling::new(eta)?;
        let idx: Vec<(u32, u32)> = (0..=3).flat_map(|a| (0..=3).map(move |b| (a, b))).collect();
        let states: Vec<SBState> = idx.iter().map(|&(a, b)| excited_state(&c, a, b)).collect::<Result<_, _>>()?;
        for i in 0..states.len() {
            for j in i..states.len() {
                let want = if i == j { 1.0 } else { 0.0 };
                ortho = ortho.max((inner_product(&states[i], &states[j])? - want).norm());
            }
            let (a, b) = idx[i];
            let mirror = &states[idx.iter().position(|&k| k == (b, a)).unwrap()];
            for &z in &POINTS {
                swap = swap.max((states[i].swapped().eval(z) - mirror.eval(z)).norm());
            }
        }
    }
    Ok((ortho, swap))
}

fn observables() -> Result<f64, CliError> {
    let mut worst: f64 = 0.0;
    for k in 0..11 {
        let r = observable_report(&Coupling::new(-2.0 + 0.4 * k as f64)?)?;
        worst = worst.max(r.max_discrepancy());
    }
    Ok(worst)
}

fn sample_forms() -> Vec<GaussianForm> {
    let q2 = DMatrix::from_row_slice(2, 2, &[1.3, 0.4, 0.4, 0.8]);
    let q4 = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.2, 0.3, -0.1, 0.0, //
            0.3, 0.9, 0.2, 0.1, //
            -0.1, 0.2, 1.5, -0.3, //
            0.0, 0.1, -0.3, 0.7,
        ],
    );
    vec![
        GaussianForm::new(q2).expect("positive definite"),
        GaussianForm::new(q4).expect("positive definite"),
        moments::coupled_form(&Coupling::new(0.8).unwrap()),
    ]
}

/// Isserlis moments of a 2-D form against a Cholesky-mapped product rule.
fn isserlis_vs_gauss_hermite() -> Result<f64, CliError> {
    let form = &sample_forms()[0];
    let l = form.qmatrix().clone().cholesky().ok_or(bargmann::Error::NotPositiveDefinite)?.l();
    let map = l.transpose().try_inverse().ok_or(bargmann::Error::NotPositiveDefinite)?;
    let (t, w) = gh_nodes(60)?;
    let mut worst: f64 = 0.0;
    for a in 0..=6u16 {
        for b in 0..=(6 - a) {
            let (mut num, mut den) = (0.0, 0.0);
            for (ti, wi) in t.iter().zip(&w) {
                for (tj, wj) in t.iter().zip(&w) {
                    let x0 = map[(0, 0)] * ti + map[(0, 1)] * tj;
                    let x1 = map[(1, 0)] * ti + map[(1, 1)] * tj;
                    num += wi * wj * x0.powi(a as i32) * x1.powi(b as i32);
                    den += wi * wj;
                }
            }
            let exact = moments::moment(form, &MonomialIndex::new(&[a, b]))?;
            worst = worst.max((exact - num / den).abs() / (1.0 + exact.abs()));
        }
    }
    Ok(worst)
}

/// Largest `|MC - GH| / stderr` over fixed polynomials and the ground-state entropy integrand.
fn gauss_hermite_vs_monte_carlo(spec: &QuadratureSpec, mc: &McSpec) -> Result<f64, CliError> {
    let mut worst: f64 = 0.0;
    for (i, form) in sample_forms().iter().enumerate() {
        let dim = form.dim();
        let mut p = RealPoly::constant(dim, 0.5);
        for j in 0..dim {
            let mut k = vec![0u16; dim];
            k[j] = 2;
            k[(j + 1) % dim] += 1;
            p.add_term(MonomialIndex::new(&k), 0.3 * (j as f64 + 1.0) - 0.1 * i as f64);
        }
        let ev = p.evaluator();
        let gh = integrate_gaussian(|x| ev.eval(x), form, spec)?.value;
        let r = mc_integrate(|x| ev.eval(x), form, &McSpec { seed: mc.seed.wrapping_add(i as u64), ..*mc })?;
        worst = worst.max((r.value - gh).abs() / r.stderr);
    }
    let d = husimi_of(&ground_state(&Coupling::new(1.0)?))?;
    let gh = integrate_gaussian(|x| -d.ln_eval(x), d.form(), spec)?.value;
    let r = mc_integrate(|x| -d.ln_eval(x), d.form(), mc)?;
    Ok(worst.max((r.value - gh).abs() / r.stderr))
}

/// `∫ F = e^c π^{d/2} det(Q)^{-1/2} E[p]` with `E[p]` by Gauss–Hermite.
fn quadrature_mass(d: &HusimiDensity, spec: &QuadratureSpec) -> Result<f64, CliError> {
    let ev = d.poly().evaluator();
    let r = integrate_gaussian(|x| ev.eval(x), d.form(), spec)?;
    let dim = d.form().dim() as f64;
    Ok(d.log_prefactor().exp() * PI.powf(dim / 2.0) / d.form().det().sqrt() * r.value)
}

fn normalization(spec: &QuadratureSpec) -> Result<(f64, f64), CliError> {
    let (mut full, mut marg) = (0.0f64, 0.0f64);
    for eta in ETAS {
        let c = Coupling::new(eta)?;
        for (a, b) in [(0, 0), (1, 0), (2, 1), (3, 3)] {
            let d = husimi_of(&excited_state(&c, a, b)?)?;
            full = full.max((quadrature_mass(&d, spec)? - 1.0).abs());
            for keep in [Mode::One, Mode::Two] {
                marg = marg.max((quadrature_mass(&marginal(&d, keep)?, spec)? - 1.0).abs());
            }
        }
    }
    Ok((full, marg))
}

struct EntropyChecks {
    ground_total: f64,
    ground_partial: f64,
    excited_total: f64,
    first_excited_partial: f64,
}

fn entropies(spec: &QuadratureSpec) -> Result<EntropyChecks, CliError> {
    let mut e = EntropyChecks {
        ground_total: 0.0,
        ground_partial: 0.0,
        excited_total: 0.0,
        first_excited_partial: 0.0,
    };
    for eta in [0.0, 0.5, 1.0, 2.0] {
        let r = wehrl::report(eta, 0, 0, spec)?;
        e.ground_total = e.ground_total.max(r.s_total.err.unwrap_or(f64::INFINITY));
        for v in [&r.s_partial_1, &r.s_partial_2, &r.mutual_info] {
            e.ground_partial = e.ground_partial.max(v.err.unwrap_or(f64::INFINITY));
        }
    }
    for eta in [0.5, 1.0] {
        for n in 1..=3 {
            let r = wehrl::report(eta, n, 0, spec)?;
            e.excited_total = e.excited_total.max(r.s_total.err.unwrap_or(f64::INFINITY));
            if n == 1 {
                for v in [&r.s_partial_1, &r.s_partial_2] {
                    e.first_excited_partial = e.first_excited_partial.max(v.err.unwrap_or(f64::INFINITY));
                }
            }
        }
    }
    Ok(e)
}

pub fn run_all(spec: &QuadratureSpec, mc: &McSpec, tol: &Tolerances) -> Result<Vec<CheckReport>, CliError> {
    let (ortho, swap) = orthonormality_and_swap()?;
    let (mass, marginal_mass) = normalization(spec)?;
    let e = entropies(spec)?;
    Ok(vec![
        tol.report("bogoliubov_constraint", bogoliubov_constraint()),
        tol.report("ccr_ladder", ccr_residual(apply_z_annihilation, apply_z_creation)),
        tol.report("ccr_bogoliubov", ccr_residual(apply_w_annihilation, apply_w_creation)),
        tol.report("vacuum_annihilation", vacuum_annihilation()),
        tol.report("orthonormality", ortho),
        tol.report("swap_symmetry", swap),
        tol.report("observables_closed_form", observables()?),
        tol.report("isserlis_vs_gauss_hermite", isserlis_vs_gauss_hermite()?),
        tol.report("gauss_hermite_vs_monte_carlo", gauss_hermite_vs_monte_carlo(spec, mc)?),
        tol.report("husimi_normalization", mass),
        tol.report("marginal_normalization", marginal_mass),
        tol.report("entropy_ground_total", e.ground_total),
        tol.report("entropy_ground_partial", e.ground_partial),
        tol.report("entropy_excited_total", e.excited_total),
        tol.report("entropy_first_excited_partial", e.first_excited_partial),
    ])
}
