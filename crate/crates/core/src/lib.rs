//! Entangled two-mode oscillator states in Segal-Bargmann form: Husimi
//! densities, Wehrl entropies and mutual information, each computed from
//! closed forms and by independent numerical integration.
//!
//! Modules, bottom-up:
//!
//! * [`poly`]: sparse real polynomials shared by everything below.
//! * [`moments`]: Gaussian forms and exact Isserlis moments.
//! * [`sbs`]: states `P(z) exp(tanh η z1 z2)`, ladder and Bogoliubov operators.
//! * [`husimi`]: Husimi densities, marginals, purity and slices.
//! * [`quadrature`]: Gauss–Hermite, polar double-exponential and Monte Carlo integration.
//! * [`wehrl`]: entropies, closed forms and the combined [`wehrl::EntropyReport`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod husimi;
pub mod moments;
pub mod poly;
pub mod quadrature;
pub mod sbs;
pub mod wehrl;

pub use error::{Error, Result};
pub use husimi::{husimi_of, marginal, purity, HusimiDensity, PhasePoint};
pub use moments::{coupled_form, moment, observable_report, polynomial_expectation, GaussianForm, ObservableReport};
pub use poly::{MonomialIndex, RealPoly};
pub use quadrature::{gh_nodes, integrate_gaussian, mc_integrate, McSpec, QuadratureSpec};
pub use sbs::{excited_state, ground_state, inner_product, Coupling, Mode, SBState};
pub use wehrl::{report, wehrl_numeric, EntropyReport, EntropyValue};
