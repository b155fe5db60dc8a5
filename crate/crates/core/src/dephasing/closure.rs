use num_complex::Complex64;

use super::{generating, DephasingProblem};
use crate::curve::{DecayCurve, Protocol};
use crate::error::{Error, Result};
use crate::noise::EffectiveFluctuator;
use crate::ode::{solve, StepControl};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn pair(problem: &DephasingProblem) -> Result<[EffectiveFluctuator; 2]> {
    match problem.model.effective_fluctuators().as_slice() {
        [a, b] => Ok([*a, *b]),
        other => Err(Error::invalid(format!(
            "two-fluctuator reduction needs exactly two bands, got {}",
            other.len()
        ))),
    }
}

/// `Φ₁(t)Φ₂(t)` for the effective fluctuator of each band.
pub fn two_fluctuator_envelope(problem: &DephasingProblem, t_grid: &[f64]) -> Result<DecayCurve> {
    pair(problem)?;
    let curve = effective_envelope(problem, t_grid)?;
    Ok(DecayCurve {
        method: format!("two_fluctuator_{}", problem.protocol),
        ..curve
    })
}

/// `Π_k Φ_k(t)` over the effective fluctuators of any number of bands.
pub fn effective_envelope(problem: &DephasingProblem, t_grid: &[f64]) -> Result<DecayCurve> {
    let fluctuators = problem.model.effective_fluctuators();
    let d = problem.coupling.abs();
    let values = t_grid
        .iter()
        .map(|&t| {
            fluctuators
                .iter()
                .map(|f| generating::phi(problem.protocol, f.rate, d * f.amplitude, t))
                .product::<Result<f64>>()
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut curve = DecayCurve::from_real(
        format!("effective_{}", problem.protocol),
        t_grid.to_vec(),
        values,
    )?;
    for (k, f) in fluctuators.iter().enumerate() {
        curve = curve
            .with_param(format!("gamma{}", k + 1), f.rate)
            .with_param(format!("v{}", k + 1), d * f.amplitude);
    }
    Ok(curve)
}

/// Envelope and the averaged auxiliaries `⟨ξ₁ρ₀₁⟩`, `⟨ξ₂ρ₀₁⟩`, `⟨ξ₁ξ₂ρ₀₁⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeDephasing {
    pub curve: DecayCurve,
    pub x1: Vec<Complex64>,
    pub x2: Vec<Complex64>,
    pub x12: Vec<Complex64>,
}

/// Right-hand side of the closed four-variable system for `(ρ₀₁, X₁, X₂, X₁₂)`.
fn rhs(y: &[Complex64], dy: &mut [Complex64], omega: f64, d: f64, f: &[EffectiveFluctuator; 2]) {
    let (a1, a2) = (f[0].amplitude.powi(2), f[1].amplitude.powi(2));
    let (g1, g2) = (f[0].rate, f[1].rate);
    let w = I * omega;
    let id = I * d;
    dy[0] = w * y[0] + id * (y[1] + y[2]);
    dy[1] = (w - 2.0 * g1) * y[1] + id * (y[3] + a1 * y[0]);
    dy[2] = (w - 2.0 * g2) * y[2] + id * (y[3] + a2 * y[0]);
    dy[3] = (w - 2.0 * (g1 + g2)) * y[3] + id * (a2 * y[1] + a1 * y[2]);
}

/// Integrates the averaged coherence with `ρ₀₁(0) = 1`. For echo, the π-pulse
/// at `t/2` is taken as instantaneous: in the toggling frame both `Ω` and the
/// coupling change sign on `[t/2, t]`, and each grid time is its own run.
pub fn ode_dephasing_envelope<W>(
    problem: &DephasingProblem,
    omega: W,
    t_grid: &[f64],
    control: &StepControl,
) -> Result<OdeDephasing>
where
    W: Fn(f64) -> f64,
{
    let f = pair(problem)?;
    let d = problem.coupling;
    let start = [
        Complex64::new(1.0, 0.0),
        Complex64::default(),
        Complex64::default(),
        Complex64::default(),
    ];
    let states = match problem.protocol {
        Protocol::Fid => {
            let (ys, _) = solve(
                |t, y, dy| rhs(y, dy, omega(t), d, &f),
                0.0,
                &start,
                t_grid,
                control,
            )?;
            ys
        }
        Protocol::Echo => t_grid
            .iter()
            .map(|&t| {
                let mid = 0.5 * t;
                let (first, _) = solve(
                    |s, y, dy| rhs(y, dy, omega(s), d, &f),
                    0.0,
                    &start,
                    &[mid],
                    control,
                )?;
                let (second, _) = solve(
                    |s, y, dy| rhs(y, dy, -omega(s), -d, &f),
                    mid,
                    &first[0],
                    &[t],
                    control,
                )?;
                Ok(second.into_iter().next().unwrap())
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let column = |k: usize| states.iter().map(|s| s[k]).collect::<Vec<_>>();
    let curve = DecayCurve::new(
        format!("ode_{}", problem.protocol),
        t_grid.to_vec(),
        column(0),
    )?
    .with_param("rel_tol", control.rel_tol)
    .with_param("abs_tol", control.abs_tol);
    Ok(OdeDephasing {
        curve,
        x1: column(1),
        x2: column(2),
        x12: column(3),
    })
}
