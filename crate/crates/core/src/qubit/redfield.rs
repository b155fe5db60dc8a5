use std::f64::consts::PI;

use serde::Serialize;

use super::QubitCoupling;
use crate::error::{Error, Result};
use crate::noise::NoiseBand;
use crate::special::QuadratureSpec;

/// Bloch–Redfield rates from the fast (`n = 2`) band, in μs⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BrRates {
    pub gamma1: f64,
    pub gamma_phi: f64,
    /// `Γ₁/2 + Γ_φ`.
    pub gamma2: f64,
    /// Correlation time `τ₂` of the band.
    pub tau: f64,
    /// `Γ₁τ₂ < 0.1` and `Γ₂τ₂ < 0.1`.
    pub valid: bool,
}

fn fast_band(band: &NoiseBand) -> Result<()> {
    if band.n() != 2 {
        return Err(Error::domain(format!(
            "Bloch–Redfield rates need the n = 2 band, got n = {}",
            band.n()
        )));
    }
    Ok(())
}

fn assemble(gamma1: f64, gamma_phi: f64, band: &NoiseBand) -> BrRates {
    let gamma2 = 0.5 * gamma1 + gamma_phi;
    let tau = band.correlation_time();
    BrRates {
        gamma1,
        gamma_phi,
        gamma2,
        tau,
        valid: gamma1 * tau < 0.1 && gamma2 * tau < 0.1,
    }
}

/// `Γ₁ = πD_⊥²S(Ω)`, `Γ_φ = πD_z²S(0)`.
pub fn br_rates(coupling: &QubitCoupling, band: &NoiseBand) -> Result<BrRates> {
    coupling.validate()?;
    fast_band(band)?;
    let gamma1 = if coupling.d_perp == 0.0 {
        0.0
    } else {
        PI * coupling.d_perp.powi(2) * band.spectral_density(coupling.omega)
    };
    let gamma_phi = PI * coupling.d_z.powi(2) * band.spectral_density(0.0);
    Ok(assemble(gamma1, gamma_phi, band))
}

/// Lorentzian kernel used inside the partial-rate average for `Γ₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrKernel {
    /// `σ²γ/(4γ² + Ω²)`, which gives half of `πD_⊥²S(Ω)`.
    AsPrinted,
    /// `2σ²γ/(4γ² + Ω²)`, consistent with the spectral density.
    Normalized,
}

/// Partial rates averaged over the band's rate density by quadrature.
pub fn br_partial_rates_quadrature(
    coupling: &QubitCoupling,
    band: &NoiseBand,
    kernel: BrKernel,
    spec: &QuadratureSpec,
) -> Result<BrRates> {
    coupling.validate()?;
    fast_band(band)?;
    let s2 = band.sigma().powi(2);
    let w2 = coupling.omega.powi(2);
    let weight = match kernel {
        BrKernel::AsPrinted => 1.0,
        BrKernel::Normalized => 2.0,
    };
    let gamma1 = coupling.d_perp.powi(2)
        * band.rate_average(|g| weight * s2 * g / (4.0 * g * g + w2), spec)?;
    let gamma_phi = coupling.d_z.powi(2) * band.rate_average(|g| s2 / (2.0 * g), spec)?;
    Ok(assemble(gamma1, gamma_phi, band))
}
