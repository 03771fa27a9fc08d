//! Bessel J, log-gamma and Gauss–Jacobi rules.

mod bessel;
mod gamma;
mod quadrature;

pub(crate) use bessel::j_scaled_unchecked;
pub use bessel::{bessel_j, bessel_j_scaled};
pub(crate) use gamma::ln_gamma_unchecked;
pub use gamma::{gamma, log_beta, log_gamma};
pub use quadrature::{gauss_jacobi, gauss_jacobi_general, gauss_legendre, QuadratureRule};
