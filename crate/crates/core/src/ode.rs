//! Adaptive Dormand–Prince 5(4) on complex state vectors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol >= 0.0 && self.max_steps > 0) {
            return Err(Error::invalid(
                "step control needs rel_tol > 0, abs_tol ≥ 0, max_steps > 0",
            ));
        }
        Ok(())
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const SAFETY: f64 = 0.8;

/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Solver statistics for one call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates `y' = f(t, y)` from `(t0, y0)` and reports the state at each of
/// the ascending `outputs` (all `≥ t0`); steps land exactly on each output.
pub fn solve<F>(
    f: F,
    t0: f64,
    y0: &[Complex64],
    outputs: &[f64],
    control: &StepControl,
) -> Result<(Vec<Vec<Complex64>>, OdeStats)>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
{
    control.validate()?;
    if outputs.windows(2).any(|w| w[0] > w[1]) || outputs.first().is_some_and(|&t| t < t0) {
        return Err(Error::invalid(
            "ODE output times must be ascending and not before t0",
        ));
    }
    let dim = y0.len();
    let mut out = Vec::with_capacity(outputs.len());
    let mut stats = OdeStats::default();
    let Some(&t_end) = outputs.last() else {
        return Ok((out, stats));
    };

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut dy = vec![Complex64::default(); dim];
    f(t, &y, &mut dy);
    let mut next_out = 0;
    while next_out < outputs.len() && outputs[next_out] <= t {
        out.push(y.clone());
        next_out += 1;
    }

    let span = t_end - t0;
    let mut h = initial_step(&y, &dy, span, control);
    let mut k = vec![vec![Complex64::default(); dim]; 7];
    let mut stage = vec![Complex64::default(); dim];
    let mut y_new = vec![Complex64::default(); dim];

    while next_out < outputs.len() {
        if stats.accepted + stats.rejected >= control.max_steps {
            return Err(Error::NonConvergence {
                what: format!("ODE step budget exhausted at t = {t}"),
                iterations: control.max_steps,
            });
        }
        let target = outputs[next_out];
        let hit = t + h >= target;
        let step = if hit { target - t } else { h };
        if step <= 16.0 * f64::EPSILON * t.abs().max(span) && !hit {
            return Err(Error::Accuracy {
                what: format!("ODE step size underflow at t = {t}"),
                best_estimate: y.first().map_or(0.0, |z| z.norm()),
                error_estimate: f64::NAN,
            });
        }

        k[0].copy_from_slice(&dy);
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += kj[i] * (step * A[s][j]);
                }
                stage[i] = acc;
            }
            f(t + C[s] * step, &stage, &mut k[s]);
        }
        // the seventh stage is evaluated at the fifth-order solution
        y_new.copy_from_slice(&stage);

        let mut err: f64 = 0.0;
        for i in 0..dim {
            let mut e = Complex64::default();
            for (s, ks) in k.iter().enumerate() {
                e += ks[i] * (step * E[s]);
            }
            let scale = control.abs_tol + control.rel_tol * y[i].norm().max(y_new[i].norm());
            err = err.max(e.norm() / scale);
        }

        if err <= 1.0 {
            let t_new = if hit { target } else { t + step };
            while next_out < outputs.len() && outputs[next_out] <= t_new {
                out.push(y_new.clone());
                next_out += 1;
            }
            t = t_new;
            y.copy_from_slice(&y_new);
            dy.copy_from_slice(&k[6]);
            stats.accepted += 1;
            let factor = if err == 0.0 {
                5.0
            } else {
                (SAFETY * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            // a step shortened to land on an output does not shrink the next one
            h = if hit {
                h.max(step * factor)
            } else {
                step * factor
            };
        } else {
            stats.rejected += 1;
            let factor = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h = step * factor;
        }
    }
    Ok((out, stats))
}

fn initial_step(y: &[Complex64], dy: &[Complex64], span: f64, control: &StepControl) -> f64 {
    let scale = |i: usize| control.abs_tol + control.rel_tol * y[i].norm();
    let d0 = (0..y.len())
        .map(|i| y[i].norm() / scale(i))
        .fold(0.0, f64::max);
    let d1 = (0..y.len())
        .map(|i| dy[i].norm() / scale(i))
        .fold(0.0, f64::max);
    let guess = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    guess.min(span.max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rotating_phase() {
        let omega = 3.0;
        let grid: Vec<f64> = (0..=50).map(|i| 0.2 * i as f64).collect();
        let (ys, stats) = solve(
            |_, y, dy| dy[0] = c(0.0, omega) * y[0],
            0.0,
            &[c(1.0, 0.0)],
            &grid,
            &StepControl::default(),
        )
        .unwrap();
        for (t, y) in grid.iter().zip(&ys) {
            let exact = Complex64::from_polar(1.0, omega * t);
            // global error grows with the 30 rad of accumulated phase
            assert!((y[0] - exact).norm() < 1e-7, "t={t}");
        }
        assert!(stats.accepted > 0);
    }

    #[test]
    fn damped_oscillator_system() {
        // Φ'' + 2γΦ' + v²Φ = 0 as a first-order system
        let (g, v): (f64, f64) = (0.3, 2.0);
        let w = (v * v - g * g).sqrt();
        let grid = [0.0, 0.5, 1.7, 4.0];
        let (ys, _) = solve(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0] * (v * v) - y[1] * (2.0 * g);
            },
            0.0,
            &[c(1.0, 0.0), c(0.0, 0.0)],
            &grid,
            &StepControl::default(),
        )
        .unwrap();
        for (t, y) in grid.iter().zip(&ys) {
            let exact = (-g * t).exp() * ((w * t).cos() + g / w * (w * t).sin());
            assert!((y[0].re - exact).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn outputs_at_start_and_errors() {
        let (ys, _) = solve(
            |_, _, dy| dy[0] = c(1.0, 0.0),
            1.0,
            &[c(2.0, 0.0)],
            &[1.0, 1.0, 2.0],
            &StepControl::default(),
        )
        .unwrap();
        assert_eq!(ys[0][0], c(2.0, 0.0));
        assert_eq!(ys[1][0], c(2.0, 0.0));
        assert!((ys[2][0] - c(3.0, 0.0)).norm() < 1e-12);
        assert!(solve(
            |_, _, _| {},
            0.0,
            &[c(0.0, 0.0)],
            &[1.0, 0.5],
            &StepControl::default()
        )
        .is_err());
        assert!(solve(
            |_, _, _| {},
            1.0,
            &[c(0.0, 0.0)],
            &[0.5],
            &StepControl::default()
        )
        .is_err());
        let tiny = StepControl {
            max_steps: 3,
            ..StepControl::default()
        };
        let blowup = solve(
            |_, y, dy| dy[0] = y[0] * 50.0,
            0.0,
            &[c(1.0, 0.0)],
            &[10.0],
            &tiny,
        );
        assert!(matches!(blowup, Err(Error::NonConvergence { .. })));
    }
}
