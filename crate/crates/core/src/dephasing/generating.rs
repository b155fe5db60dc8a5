//! Single-fluctuator generating functionals `Φ(t) = ⟨exp(i v ∫₀ᵗ s)⟩`.
//!
//! With `s = γt`, `μ² = 1 − v²/γ²` and `y = sμ` the closed forms become
//!
//! ```text
//! Φᶠ = e^{-s} [cosh y + s·shc(y)]
//! Φᵉ = e^{-s} [1 + s·shc(y) + (s²/2)·shc(y/2)²]
//! ```
//!
//! where `shc(y) = sinh(y)/y`. For `v > γ`, `μ` is imaginary, `cosh` becomes
//! `cos` and `shc` becomes `sinc`. No division by `μ` remains, so the
//! degenerate point `v = γ` needs no special branch.

use crate::curve::Protocol;
use crate::error::{Error, Result};
use crate::special::sinc;

fn check(gamma: f64, v: f64, t: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::domain(format!(
            "switching rate must be positive, got {gamma}"
        )));
    }
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::domain(format!(
            "coupling strength must be non-negative, got {v}"
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("time must be non-negative, got {t}")));
    }
    Ok(())
}

/// `μ²` and the scaled time `s`, with `μ²` snapped to 0 inside `|μ²| < 1e-8`.
fn reduced(gamma: f64, v: f64, t: f64) -> (f64, f64) {
    let r = v / gamma;
    let mu2 = (1.0 - r) * (1.0 + r);
    (if mu2.abs() < 1e-8 { 0.0 } else { mu2 }, gamma * t)
}

/// `e^{-s}·cosh(sμ)` (or `cos(s|μ|)`) without overflow.
fn damped_cosh(s: f64, mu2: f64) -> f64 {
    if mu2 >= 0.0 {
        let y = s * mu2.sqrt();
        0.5 * ((y - s).exp() + (-y - s).exp())
    } else {
        (-s).exp() * (s * (-mu2).sqrt()).cos()
    }
}

/// `e^{-s}·sinh(y)/y` with `y = sμ` (or the `sinc` form) without overflow.
fn damped_shc(s: f64, mu2: f64, scale: f64) -> f64 {
    if mu2 >= 0.0 {
        let y = scale * s * mu2.sqrt();
        if y < 20.0 {
            (-s).exp()
                * if y < 1e-4 {
                    1.0 + y * y / 6.0
                } else {
                    y.sinh() / y
                }
        } else {
            ((y - s).exp() - (-y - s).exp()) / (2.0 * y)
        }
    } else {
        (-s).exp() * sinc(scale * s * (-mu2).sqrt())
    }
}

/// Free-induction functional of one fluctuator.
pub fn phi_fid(gamma: f64, v: f64, t: f64) -> Result<f64> {
    check(gamma, v, t)?;
    if v == 0.0 {
        return Ok(1.0);
    }
    let (mu2, s) = reduced(gamma, v, t);
    Ok(damped_cosh(s, mu2) + s * damped_shc(s, mu2, 1.0))
}

/// `dΦᶠ/dt = −v² t e^{-s} shc(y)`.
pub fn phi_fid_derivative(gamma: f64, v: f64, t: f64) -> Result<f64> {
    check(gamma, v, t)?;
    let (mu2, s) = reduced(gamma, v, t);
    Ok(-v * v * t * damped_shc(s, mu2, 1.0))
}

/// Solution with `K(0) = 0`, `K̇(0) = 1`: `K(t) = t e^{-s} shc(y)`.
fn kernel(gamma: f64, v: f64, t: f64) -> f64 {
    let (mu2, s) = reduced(gamma, v, t);
    t * damped_shc(s, mu2, 1.0)
}

/// Echo functional of one fluctuator (π-pulse at `t/2`).
pub fn phi_echo(gamma: f64, v: f64, t: f64) -> Result<f64> {
    check(gamma, v, t)?;
    if v == 0.0 {
        return Ok(1.0);
    }
    let (mu2, s) = reduced(gamma, v, t);
    let half = damped_shc(0.5 * s, mu2, 1.0);
    Ok((-s).exp() + s * damped_shc(s, mu2, 1.0) + 0.5 * s * s * half * half)
}

pub fn phi(protocol: Protocol, gamma: f64, v: f64, t: f64) -> Result<f64> {
    match protocol {
        Protocol::Fid => phi_fid(gamma, v, t),
        Protocol::Echo => phi_echo(gamma, v, t),
    }
}

/// Residuals of `Φ̈ + 2γΦ̇ + v²Φ = 0` from finite differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratingCheck {
    /// Largest `|Φ̈ + 2γΦ̇ + v²Φ|` at interior sample points.
    pub max_residual: f64,
    /// Echo only: largest gap between the piecewise solution re-initialized
    /// at `t/2` (with `Φ̇ → −Φ̇`) and the closed form at `t`.
    pub max_endpoint_mismatch: f64,
}

/// Checks the second-order equation on `t_grid`. For echo, the path to each
/// final time `T` is `Φᶠ` on `[0, T/2]`, then restarts from `(Φ, −Φ̇)`; both
/// halves are checked and the endpoint is compared with [`phi_echo`].
pub fn generating_ode_check(
    gamma: f64,
    v: f64,
    protocol: Protocol,
    t_grid: &[f64],
) -> Result<GeneratingCheck> {
    check(gamma, v, 0.0)?;
    let h = 1e-2 / gamma.max(v);
    let residual = |f: &dyn Fn(f64) -> f64, x: f64| {
        let (m2, m1, c, p1, p2) = (f(x - 2.0 * h), f(x - h), f(x), f(x + h), f(x + 2.0 * h));
        let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
        let d2 = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
        (d2 + 2.0 * gamma * d1 + v * v * c).abs()
    };
    let fid = |t: f64| phi_fid(gamma, v, t.max(0.0)).unwrap_or(f64::NAN);
    let mut out = GeneratingCheck {
        max_residual: 0.0,
        max_endpoint_mismatch: 0.0,
    };
    for &t in t_grid {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::domain(format!("time must be non-negative, got {t}")));
        }
        match protocol {
            Protocol::Fid => {
                if t > 2.0 * h {
                    out.max_residual = out.max_residual.max(residual(&fid, t));
                }
            }
            Protocol::Echo => {
                let mid = 0.5 * t;
                let (p0, d0) = (phi_fid(gamma, v, mid)?, phi_fid_derivative(gamma, v, mid)?);
                let second = |s: f64| {
                    let tau = (s - mid).max(0.0);
                    p0 * phi_fid(gamma, v, tau).unwrap_or(f64::NAN) - d0 * kernel(gamma, v, tau)
                };
                if mid > 4.0 * h {
                    out.max_residual = out.max_residual.max(residual(&fid, 0.5 * mid));
                    out.max_residual = out.max_residual.max(residual(&second, 1.5 * mid));
                }
                let gap = (second(t) - phi_echo(gamma, v, t)?).abs();
                out.max_endpoint_mismatch = out.max_endpoint_mismatch.max(gap);
            }
        }
    }
    Ok(out)
}
