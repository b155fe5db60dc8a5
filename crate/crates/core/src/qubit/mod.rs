//! Two-level density-matrix evolution under fluctuator noise.
//!
//! Basis `{|0⟩, |1⟩}` with `σ_z = diag(1, −1)`, so `H₀ = −(Ω/2)σ_z` makes
//! `ρ₀₁` precess as `e^{iΩt}`, matching the scalar dephasing convention.

mod propagate;
mod redfield;

use std::io::Write;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use propagate::{
    propagate_gaussian, propagate_single_effective, propagate_two_fluctuator, Bath, Lindblad,
    NoBath, PropagationOptions,
};
pub use redfield::{br_partial_rates_quadrature, br_rates, BrKernel, BrRates};

pub type Mat2 = Matrix2<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn sigma_x() -> Mat2 {
    Mat2::new(c(0.0), c(1.0), c(1.0), c(0.0))
}

pub fn sigma_y() -> Mat2 {
    Mat2::new(
        c(0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(0.0, 1.0),
        c(0.0),
    )
}

pub fn sigma_z() -> Mat2 {
    Mat2::new(c(1.0), c(0.0), c(0.0), c(-1.0))
}

/// Smaller eigenvalue of a Hermitian 2×2 matrix.
pub(crate) fn min_eigenvalue(rho: &Mat2) -> f64 {
    let tr = rho.trace().re;
    let det = rho.determinant().re;
    0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt())
}

/// Slack allowed below zero in the eigenvalues of a propagated state.
pub(crate) const POSITIVITY_TOLERANCE: f64 = 1e-9;

pub(crate) fn commutator(a: &Mat2, b: &Mat2) -> Mat2 {
    a * b - b * a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerpAxis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitCoupling {
    /// Level splitting Ω in rad·μs⁻¹.
    pub omega: f64,
    pub d_z: f64,
    pub d_perp: f64,
    pub perp_axis: PerpAxis,
}

impl QubitCoupling {
    pub fn new(omega: f64, d_z: f64, d_perp: f64, perp_axis: PerpAxis) -> Result<Self> {
        let coupling = Self {
            omega,
            d_z,
            d_perp,
            perp_axis,
        };
        coupling.validate()?;
        Ok(coupling)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::domain(format!(
                "level splitting must be finite and ≥ 0, got {}",
                self.omega
            )));
        }
        if !(self.d_z.is_finite() && self.d_perp.is_finite()) {
            return Err(Error::domain("noise couplings must be finite"));
        }
        Ok(())
    }

    pub fn is_pure_dephasing(&self) -> bool {
        self.d_perp == 0.0
    }
}

/// `H(t) = h0 + v·ξ(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hamiltonian {
    pub h0: Mat2,
    pub v: Mat2,
}

/// `H₀ = −(Ω/2)σ_z`, `V = −(D_z/2)σ_z − (D_⊥/2)σ_⊥`.
pub fn build_hamiltonian(coupling: &QubitCoupling) -> Result<Hamiltonian> {
    coupling.validate()?;
    let perp = match coupling.perp_axis {
        PerpAxis::X => sigma_x(),
        PerpAxis::Y => sigma_y(),
    };
    Ok(Hamiltonian {
        h0: sigma_z() * c(-0.5 * coupling.omega),
        v: sigma_z() * c(-0.5 * coupling.d_z) + perp * c(-0.5 * coupling.d_perp),
    })
}

/// Flux qubit `H = −(ε σ_z + Δ σ_x)/2` in the flux basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxQubitParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl FluxQubitParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite() && epsilon.is_finite()) {
            return Err(Error::domain("flux qubit needs finite ε and Δ > 0"));
        }
        Ok(Self { epsilon, delta })
    }

    /// `E₀₁ = √(ε² + Δ²)`.
    pub fn splitting(&self) -> f64 {
        self.epsilon.hypot(self.delta)
    }

    pub fn d_splitting_d_epsilon(&self) -> f64 {
        self.epsilon / self.splitting()
    }

    pub fn d_splitting_d_delta(&self) -> f64 {
        self.delta / self.splitting()
    }

    /// Eigenbasis coupling for unit-sensitivity noise on the bias `ε`.
    pub fn bias_noise_coupling(&self) -> QubitCoupling {
        QubitCoupling {
            omega: self.splitting(),
            d_z: self.d_splitting_d_epsilon(),
            d_perp: self.d_splitting_d_delta(),
            perp_axis: PerpAxis::X,
        }
    }
}

/// Averaged `ρ` and the auxiliaries `⟨ξ₁ρ⟩`, `⟨ξ₂ρ⟩`, `⟨ξ₁ξ₂ρ⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityState {
    pub rho: Mat2,
    pub x1: Mat2,
    pub x2: Mat2,
    pub x12: Mat2,
}

impl DensityState {
    pub fn new(rho: Mat2) -> Result<Self> {
        validate_density(&rho)?;
        Ok(Self {
            rho,
            x1: Mat2::zeros(),
            x2: Mat2::zeros(),
            x12: Mat2::zeros(),
        })
    }

    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }
}

/// `|ψ⟩⟨ψ|` for `|ψ⟩ = cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
pub fn pure_state(theta: f64, phi: f64) -> Mat2 {
    let a = c((0.5 * theta).cos());
    let b = Complex64::from_polar((0.5 * theta).sin(), phi);
    Mat2::new(a * a.conj(), a * b.conj(), b * a.conj(), b * b.conj())
}

fn validate_density(rho: &Mat2) -> Result<()> {
    let tol = 1e-12;
    if (rho.trace() - c(1.0)).norm() > tol {
        return Err(Error::invalid("density matrix must have unit trace"));
    }
    if (rho - rho.adjoint()).norm() > tol {
        return Err(Error::invalid("density matrix must be Hermitian"));
    }
    // 2×2 Hermitian with unit trace: positive iff det ≥ 0
    if rho.determinant().re < -tol {
        return Err(Error::invalid(
            "density matrix must be positive semidefinite",
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitTrajectory {
    pub method: String,
    pub t: Vec<f64>,
    pub states: Vec<DensityState>,
}

impl QubitTrajectory {
    pub fn coherence(&self) -> Vec<Complex64> {
        self.states.iter().map(|s| s.rho[(0, 1)]).collect()
    }

    pub fn max_trace_error(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.rho.trace() - c(1.0)).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_hermiticity_error(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.rho - s.rho.adjoint()).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_purity(&self) -> f64 {
        self.states
            .iter()
            .map(DensityState::purity)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest eigenvalue of `ρ` over the trajectory.
    pub fn min_eigenvalue(&self) -> f64 {
        self.states
            .iter()
            .map(|s| min_eigenvalue(&s.rho))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, extra_header: Option<&str>) -> std::io::Result<()> {
        if let Some(line) = extra_header {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "# method={}", self.method)?;
        writeln!(
            w,
            "t,rho00_re,rho00_im,rho01_re,rho01_im,rho11_re,rho11_im,purity"
        )?;
        for (t, s) in self.t.iter().zip(&self.states) {
            let (a, b, d) = (s.rho[(0, 0)], s.rho[(0, 1)], s.rho[(1, 1)]);
            writeln!(
                w,
                "{t:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                a.re,
                a.im,
                b.re,
                b.im,
                d.re,
                d.im,
                s.purity()
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
