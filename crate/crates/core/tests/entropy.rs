use std::f64::consts::PI;

use bargmann::husimi::{husimi_of, marginal};
use bargmann::quadrature::{mc_integrate, McSpec, QuadratureSpec};
use bargmann::sbs::{excited_state, ground_state, Coupling, Mode};
use bargmann::wehrl::{
    self, exp_gamma0, gamma0, harmonic, mutual_info_ground, report, s_partial_other_first_excited, s_total_excited,
    s_total_ground, wehrl_numeric, EULER_GAMMA,
};
use proptest::prelude::*;

/// `Γ(0, x) = ∫_0^∞ e^{-x(1+s)} / (1+s) ds` by composite Simpson on `s = e^u - 1`.
fn gamma0_oracle(x: f64) -> f64 {
    // ∫_0^∞ e^{-x e^u} du
    let (a, b) = (0.0, (60.0 / x).ln().max(1.0) + 1.0);
    let n = 20_000;
    let h = (b - a) / n as f64;
    let g = |u: f64| (-x * u.exp()).exp();
    let mut acc = g(a) + g(b);
    for k in 1..n {
        acc += g(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn incomplete_gamma_against_quadrature() {
    assert!((gamma0(1.0).unwrap() - 0.219_383_934_395_520_3).abs() < 1e-15);
    let mut x = 0.05;
    while x < 40.0 {
        let want = gamma0_oracle(x);
        let got = gamma0(x).unwrap();
        assert!(((got - want) / want).abs() < 1e-10, "x = {x}: {got} vs {want}");
        let scaled = exp_gamma0(x).unwrap();
        assert!(((scaled - want * x.exp()) / scaled).abs() < 1e-10);
        x *= 1.37;
    }
}

#[test]
fn harmonic_numbers_are_exact() {
    let mut h = 0.0;
    for n in 1..=12u32 {
        h += 1.0 / n as f64;
        assert!((harmonic(n) - h).abs() < 1e-15);
    }
    assert!((harmonic(12) - 86_021.0 / 27_720.0).abs() < 1e-15);
}

const GRID: [f64; 5] = [0.25, 0.5, 1.0, 1.5, 2.0];

#[test]
fn excited_totals_match_closed_form() {
    let spec = QuadratureSpec::default();
    for eta in GRID {
        for n in 0..=3 {
            let r = report(eta, n, 0, &spec).unwrap();
            assert!(r.converged(), "{:?}", r.flags);
            let err = r.s_total.err.unwrap();
            assert!(err < 1e-7, "η = {eta} n = {n}: {err}");
            assert!((r.s_total.analytic.unwrap() - s_total_excited(eta, n)).abs() < 1e-15);
        }
    }
}

#[test]
fn partials_match_where_closed_forms_exist() {
    let spec = QuadratureSpec::default();
    for eta in GRID {
        for (a, b) in [(0, 0), (1, 0), (0, 1)] {
            let r = report(eta, a, b, &spec).unwrap();
            for (name, v) in [("s_partial_1", &r.s_partial_1), ("s_partial_2", &r.s_partial_2), ("mutual_info", &r.mutual_info)] {
                let err = v.err.unwrap();
                assert!(err < 1e-7, "η = {eta} ({a},{b}) {name}: {err}");
            }
        }
    }
}

#[test]
fn entropy_bounds_and_subadditivity() {
    let spec = QuadratureSpec::default();
    for eta in [0.0, 0.5, 1.5] {
        for (a, b) in [(0, 0), (1, 0), (2, 0), (1, 1), (2, 1)] {
            let r = report(eta, a, b, &spec).unwrap();
            assert!(r.s_total.numeric >= 2.0 * (1.0 + PI.ln()) - 1e-9);
            for p in [r.s_partial_1.numeric, r.s_partial_2.numeric] {
                assert!(p >= 1.0 + PI.ln() - 1e-9);
                assert!(p <= r.s_total.numeric + 1e-8, "η = {eta} ({a},{b})");
            }
        }
    }
}

#[test]
fn swapped_states_have_swapped_entropies() {
    let spec = QuadratureSpec::default();
    for eta in [0.5, 1.2] {
        for n in 1..=3 {
            let r = report(eta, n, 0, &spec).unwrap();
            let s = report(eta, 0, n, &spec).unwrap();
            assert!((r.s_total.numeric - s.s_total.numeric).abs() < 1e-8);
            assert!((r.s_partial_1.numeric - s.s_partial_2.numeric).abs() < 1e-8);
            assert!((r.s_partial_2.numeric - s.s_partial_1.numeric).abs() < 1e-8);
        }
    }
}

#[test]
fn doubly_excited_is_numeric_only() {
    let r = report(1.0, 1, 1, &QuadratureSpec::default()).unwrap();
    assert!(r.s_total.analytic.is_none() && r.s_partial_1.analytic.is_none() && r.mutual_info.analytic.is_none());
    assert!(r.s_total.numeric.is_finite());
    assert!(r.mutual_info.numeric >= mutual_info_ground(1.0) - 1e-6);
    // the two modes are equivalent
    assert!((r.s_partial_1.numeric - r.s_partial_2.numeric).abs() < 1e-9);
}

#[test]
fn non_excited_marginal_matches_gamma_form() {
    let spec = QuadratureSpec::default();
    for eta in [0.5, 1.0, 2.0] {
        let d = husimi_of(&excited_state(&Coupling::new(eta).unwrap(), 1, 0).unwrap()).unwrap();
        let s2 = wehrl_numeric(&marginal(&d, Mode::Two).unwrap(), &spec).unwrap();
        assert!(s2.converged);
        assert!((s2.value - s_partial_other_first_excited(eta)).abs() < 1e-7, "η = {eta}");
    }
}

#[test]
fn ground_entropy_integrand_by_monte_carlo() {
    for eta in [0.0, 1.0] {
        let d = husimi_of(&ground_state(&Coupling::new(eta).unwrap())).unwrap();
        // S = E_F[-ln F] and F is a Gaussian, so sampling from its own form is exact
        let mc = mc_integrate(|x| -d.ln_eval(x), d.form(), &McSpec::default()).unwrap();
        let s = s_total_ground(eta);
        assert!((mc.value - s).abs() < 4.0 * mc.stderr, "{} ± {} vs {s}", mc.value, mc.stderr);
    }
}

#[test]
fn difference_of_partials_decays_from_euler_gamma() {
    let spec = QuadratureSpec::default();
    let mut prev = f64::INFINITY;
    for k in 0..=10 {
        let eta = 0.3 * k as f64;
        let r = report(eta, 1, 0, &spec).unwrap();
        let diff = (r.s_partial_1.numeric - r.s_partial_2.numeric).abs();
        if k == 0 {
            assert!((diff - EULER_GAMMA).abs() < 1e-8);
        }
        assert!(diff < prev, "η = {eta}");
        prev = diff;
    }
}

#[test]
fn strong_coupling_limits() {
    let eta = 6.0;
    let i = wehrl::mutual_info_first_excited(eta);
    assert!((i - mutual_info_ground(eta) - EULER_GAMMA).abs() < 1e-3);
    // the non-excited marginal approaches the excited one
    assert!((s_partial_other_first_excited(eta) - wehrl::s_partial_excited_same(eta, 1)).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_forms_are_even_in_eta(eta in 0.0f64..8.0, n in 0u32..12) {
        prop_assert_eq!(s_total_excited(eta, n), s_total_excited(-eta, n));
        prop_assert_eq!(s_partial_other_first_excited(eta), s_partial_other_first_excited(-eta));
    }

    #[test]
    fn ground_total_is_increasing(a in 0.0f64..10.0, b in 0.0f64..10.0) {
        prop_assume!(a < b);
        prop_assert!(s_total_ground(a) <= s_total_ground(b));
    }
}
