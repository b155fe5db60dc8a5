//! Pure-dephasing envelopes under FID and echo.

mod closure;
mod generating;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::curve::{DecayCurve, Protocol};
use crate::error::{Error, Result};
use crate::noise::{NoiseBand, NoiseModel};
use crate::special::{exp_int_en_reduced, integrate, integrate_panels, sinc, QuadratureSpec};

pub use closure::{
    effective_envelope, ode_dephasing_envelope, two_fluctuator_envelope, OdeDephasing,
};
pub use generating::{
    generating_ode_check, phi, phi_echo, phi_fid, phi_fid_derivative, GeneratingCheck,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DephasingProblem {
    pub model: NoiseModel,
    /// Longitudinal sensitivity `∂Ω/∂λ` in rad·μs⁻¹ per noise unit.
    pub coupling: f64,
    pub protocol: Protocol,
}

impl DephasingProblem {
    pub fn new(model: NoiseModel, coupling: f64, protocol: Protocol) -> Result<Self> {
        if !coupling.is_finite() {
            return Err(Error::domain("coupling must be finite"));
        }
        Ok(Self {
            model,
            coupling,
            protocol,
        })
    }

    /// Gaussian phase variance summed over bands.
    pub fn variance(&self, t: f64) -> Result<f64> {
        self.model
            .bands()
            .iter()
            .map(|b| match self.protocol {
                Protocol::Fid => gaussian_fid_variance(b, self.coupling, t),
                Protocol::Echo => gaussian_echo_variance(b, self.coupling, t),
            })
            .sum()
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("time must be non-negative, got {t}")))
    }
}

/// `2ⁿ D² σ² A` and the two exponential-integral arguments' scales `b`, `c`.
fn prefactor(band: &NoiseBand, coupling: f64) -> (f64, f64, f64, u32) {
    let n = band.n();
    let pre = 2f64.powi(n as i32)
        * coupling
        * coupling
        * band.sigma().powi(2)
        * band.normalization_constant();
    (pre, 2.0 * band.gamma_lo(), 2.0 * band.gamma_hi(), n + 2)
}

/// `G_m(x)/x^{m-1}` for one band edge; `G` has the small-argument terms removed.
fn edge(m: u32, x: f64, t: f64) -> Result<f64> {
    Ok(exp_int_en_reduced(m, x * t)? / x.powi(m as i32 - 1))
}

/// `⟨φ²(t)⟩ = D² ∬₀ᵗ χ(|t′−t″|)` in closed form.
pub fn gaussian_fid_variance(band: &NoiseBand, coupling: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let (pre, b, c, m) = prefactor(band, coupling);
    Ok(pre * (edge(m, b, t)? - edge(m, c, t)?))
}

/// Echo phase variance, with the sign of the noise reversed at `t/2`.
pub fn gaussian_echo_variance(band: &NoiseBand, coupling: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let (pre, b, c, m) = prefactor(band, coupling);
    let side = |x: f64| -> Result<f64> { Ok(4.0 * edge(m, x, 0.5 * t)? - edge(m, x, t)?) };
    Ok(pre * (side(b)? - side(c)?))
}

/// `exp(−½⟨φ²⟩)` on the grid.
pub fn gaussian_envelope(problem: &DephasingProblem, t_grid: &[f64]) -> Result<DecayCurve> {
    let values = t_grid
        .iter()
        .map(|&t| Ok((-0.5 * problem.variance(t)?).exp()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(DecayCurve::from_real(
        format!("gaussian_{}", problem.protocol),
        t_grid.to_vec(),
        values,
    )?
    .with_param("coupling", problem.coupling))
}

/// Spectral filter of the protocol at `x = ωt`.
pub fn filter(protocol: Protocol, x: f64) -> f64 {
    match protocol {
        Protocol::Fid => sinc(0.5 * x).powi(2),
        Protocol::Echo => {
            let q = 0.25 * x;
            (q.sin() * sinc(q)).powi(2)
        }
    }
}

/// `t² D² ∫ S(ω) W(ωt) dω` over the whole real line, which equals the Gaussian phase variance.
pub fn filter_variance(problem: &DephasingProblem, t: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 || problem.coupling == 0.0 {
        return Ok(0.0);
    }
    let bands = problem.model.bands();
    let lowest = bands
        .iter()
        .map(|b| 2.0 * b.gamma_lo())
        .fold(f64::INFINITY, f64::min);
    let highest = bands.iter().map(|b| 2.0 * b.gamma_hi()).fold(0.0, f64::max);
    // filter zeros are spaced by 2π/t (FID) or 4π/t (echo)
    let spacing = match problem.protocol {
        Protocol::Fid => 2.0 * PI / t,
        Protocol::Echo => 4.0 * PI / t,
    };
    let lo = 1e-3 * lowest.min(1.0 / t);

    let mut breaks = vec![0.0];
    let decades = (spacing / lo).log10();
    let steps = (10.0 * decades).ceil().max(1.0) as usize;
    breaks.extend((0..=steps).map(|i| lo * (spacing / lo).powf(i as f64 / steps as f64)));
    for b in bands {
        for edge in [2.0 * b.gamma_lo(), 2.0 * b.gamma_hi()] {
            if edge > lo && edge < spacing {
                breaks.push(edge);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let zeros = (((1e3 * highest).max(spacing) - spacing) / spacing)
        .ceil()
        .min(4000.0) as usize;
    breaks.extend((1..=zeros).map(|k| spacing * (1 + k) as f64));
    let top = *breaks.last().unwrap();

    let model = &problem.model;
    let integrand = |w: f64| model.spectral_density(w) * filter(problem.protocol, w * t);
    let body = integrate_panels(integrand, &breaks, spec)?;

    // beyond `top` the filter averages to C/(ωt)²; substitute ω = top/u
    let mean_filter = match problem.protocol {
        Protocol::Fid => 2.0,
        Protocol::Echo => 6.0,
    };
    let tail = mean_filter / (top * t * t)
        * integrate(
            |u| {
                if u == 0.0 {
                    0.0
                } else {
                    model.spectral_density(top / u)
                }
            },
            0.0,
            1.0,
            spec,
        )?;
    Ok(2.0 * t * t * problem.coupling * problem.coupling * (body + tail))
}

/// Gaussian envelope computed from the noise spectrum.
pub fn filter_function_envelope(
    problem: &DephasingProblem,
    t_grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<DecayCurve> {
    let values = t_grid
        .iter()
        .map(|&t| Ok((-0.5 * filter_variance(problem, t, spec)?).exp()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(DecayCurve::from_real(
        format!("filter_{}", problem.protocol),
        t_grid.to_vec(),
        values,
    )?
    .with_param("coupling", problem.coupling))
}
