//! Special functions and deterministic integration/differentiation utilities.

mod diff;
mod gamma;
mod quadrature;

pub use diff::{derivative5, finite_diff_gradient};
pub use gamma::{
    digamma, inv_digamma, inv_reg_lower_gamma, log_gamma, lower_gamma, reg_lower_gamma, reg_upper_gamma,
    trigamma,
};
pub(crate) use gamma::{digamma_unchecked, gamma_pq, inv_gamma_pq, ln_gamma_unchecked, trigamma_unchecked};
pub use quadrature::{integrate_1d, integrate_2d, GaussLegendre, Integrator, QuadratureSpec};
