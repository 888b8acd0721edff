//! Special functions and numerical building blocks.

mod gamma;
pub mod interp;
pub mod quadrature;
pub mod roots;

pub use gamma::{
    exp_integral_e1, gamma_cdf, gamma_function, gamma_pdf, ln_gamma, ln_gamma_window,
    ln_upper_incomplete_gamma, regularized_lower_gamma, regularized_upper_gamma,
    upper_incomplete_gamma,
};
pub(crate) use gamma::{
    e1_unchecked, ln_regularized_pair,
};
pub use interp::MonotoneCubic;
pub use quadrature::{integrate, integrate_power_singular, GaussLegendre, QuadratureSpec};
pub use roots::solve_increasing;
