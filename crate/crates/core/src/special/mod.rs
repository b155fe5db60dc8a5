//! Numerical kernels: exponential integrals, `sinc`, adaptive quadrature.

mod expint;
mod quad;

pub use expint::{exp_int_en, exp_int_en_any, exp_int_en_reduced, UNDERFLOW_ARG};
pub use quad::{integrate, integrate_panels, QuadratureSpec};

/// `sin(x)/x`, with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}
