//! Monte-Carlo telegraph-noise ensembles.
//!
//! Every realization `k` draws from its own ChaCha stream `(seed, k)`, so results
//! do not depend on how rayon schedules the work.

mod trajectory;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{DecayCurve, Protocol};
use crate::error::{Error, Result};
use crate::noise::NoiseBand;

pub use trajectory::{sample_trajectory, Fluctuator, Trajectory};

/// Independent random stream for realization `index`.
pub fn rng_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `N` fluctuators of amplitude `σ/√N` with rates drawn from the band's rate density.
pub fn discretize_band<R: Rng + ?Sized>(
    band: &NoiseBand,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Fluctuator>> {
    if count == 0 {
        return Err(Error::invalid("fluctuator count must be at least 1"));
    }
    let amplitude = band.sigma() / (count as f64).sqrt();
    (0..count)
        .map(|_| Fluctuator::new(amplitude, band.rate_quantile(rng.random::<f64>())))
        .collect()
}

/// Where the fluctuators of each realization come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    /// The same fluctuators in every realization.
    Fixed(Vec<Fluctuator>),
    /// `count` fluctuators per band, redrawn for every realization, so the
    /// ensemble correlation converges to the band's closed form.
    Sampled { bands: Vec<NoiseBand>, count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub population: Population,
    pub trajectories: usize,
    pub seed: u64,
    pub horizon: f64,
}

/// Mean with its jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    /// Whether `value` lies within `k` standard errors.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr
    }
}

/// Jackknife estimate of a sample mean.
pub fn jackknife(samples: &[f64]) -> Estimate {
    let n = samples.len();
    let total: f64 = samples.iter().sum();
    let mean = total / n as f64;
    if n < 2 {
        return Estimate {
            mean,
            stderr: f64::INFINITY,
        };
    }
    let m = (n - 1) as f64;
    let spread: f64 = samples
        .iter()
        .map(|x| ((total - x) / m - mean).powi(2))
        .sum();
    Estimate {
        mean,
        stderr: (spread * m / n as f64).sqrt(),
    }
}

/// Jackknife mean of complex samples; the error is `√(se_re² + se_im²)`.
pub fn jackknife_complex(samples: &[Complex64]) -> (Complex64, f64) {
    let re: Vec<f64> = samples.iter().map(|z| z.re).collect();
    let im: Vec<f64> = samples.iter().map(|z| z.im).collect();
    let (a, b) = (jackknife(&re), jackknife(&im));
    (Complex64::new(a.mean, b.mean), a.stderr.hypot(b.stderr))
}

struct Realization {
    amplitudes: Vec<f64>,
    paths: Vec<Trajectory>,
}

impl Realization {
    /// Piecewise-constant `ξ(t) = Σ aᵢ sᵢ(t)` as breakpoints and interval values.
    fn summed_path(&self, horizon: f64) -> (Vec<f64>, Vec<f64>) {
        let mut events: Vec<(f64, f64)> = Vec::new();
        let mut start = 0.0;
        for (a, path) in self.amplitudes.iter().zip(&self.paths) {
            let (breaks, signs) = path.segments();
            start += a * signs[0];
            for (b, pair) in breaks[1..breaks.len() - 1].iter().zip(signs.windows(2)) {
                events.push((*b, a * (pair[1] - pair[0])));
            }
        }
        events.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut breaks = vec![0.0];
        let mut values = vec![start];
        for (t, delta) in events {
            let current = *values.last().unwrap();
            if t == *breaks.last().unwrap() {
                *values.last_mut().unwrap() = current + delta;
            } else {
                breaks.push(t);
                values.push(current + delta);
            }
        }
        breaks.push(horizon);
        (breaks, values)
    }

    /// Accumulated `Σ aᵢ ∫₀ᵗ sᵢ` at ascending times.
    fn phase_integrals(&self, times: &[f64]) -> Vec<f64> {
        let mut total = vec![0.0; times.len()];
        for (a, path) in self.amplitudes.iter().zip(&self.paths) {
            for (acc, i) in total.iter_mut().zip(path.integrals_at(times)) {
                *acc += a * i;
            }
        }
        total
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trajectories == 0 {
            return Err(Error::invalid("trajectory count must be at least 1"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::domain("ensemble horizon must be positive"));
        }
        match &self.population {
            Population::Fixed(f) if f.is_empty() => {
                Err(Error::invalid("fixed population is empty"))
            }
            Population::Sampled { bands, count } if bands.is_empty() || *count == 0 => Err(
                Error::invalid("sampled population needs bands and a count ≥ 1"),
            ),
            _ => Ok(()),
        }
    }

    fn realize(&self, index: usize) -> Result<Realization> {
        let mut rng = rng_stream(self.seed, index as u64);
        let fluctuators = match &self.population {
            Population::Fixed(f) => f.clone(),
            Population::Sampled { bands, count } => {
                let mut all = Vec::with_capacity(bands.len() * count);
                for band in bands {
                    all.extend(discretize_band(band, *count, &mut rng)?);
                }
                all
            }
        };
        let paths = fluctuators
            .iter()
            .map(|f| sample_trajectory(f, self.horizon, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Realization {
            amplitudes: fluctuators.iter().map(Fluctuator::amplitude).collect(),
            paths,
        })
    }

    /// Per-realization results in index order.
    fn map_realizations<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(Realization) -> T + Sync,
    {
        self.validate()?;
        (0..self.trajectories)
            .into_par_iter()
            .map(|k| self.realize(k).map(&f))
            .collect()
    }
}

/// Time-and-ensemble average of `ξ(t)ξ(t+τ)` on each lag.
pub fn empirical_correlation(spec: &EnsembleSpec, taus: &[f64]) -> Result<Vec<Estimate>> {
    let horizon = spec.horizon;
    if let Some(bad) = taus
        .iter()
        .find(|&&tau| !(0.0..=horizon / 2.0).contains(&tau))
    {
        return Err(Error::domain(format!(
            "lag {bad} outside [0, T/2] with T = {horizon}"
        )));
    }
    let per_path = spec.map_realizations(|r| {
        let (breaks, values) = r.summed_path(horizon);
        taus.iter()
            .map(|&tau| lagged_product_mean(&breaks, &values, tau))
            .collect::<Vec<f64>>()
    })?;
    Ok((0..taus.len())
        .map(|j| jackknife(&per_path.iter().map(|row| row[j]).collect::<Vec<_>>()))
        .collect())
}

/// `(1/(T−τ)) ∫₀^{T−τ} f(t) f(t+τ) dt` for a piecewise-constant `f`.
fn lagged_product_mean(breaks: &[f64], values: &[f64], tau: f64) -> f64 {
    let end = breaks[breaks.len() - 1] - tau;
    let (mut i, mut j) = (0, 0);
    while breaks[j + 1] <= tau {
        j += 1;
    }
    let mut t = 0.0;
    let mut acc = 0.0;
    while t < end {
        let next = breaks[i + 1].min(breaks[j + 1] - tau).min(end);
        acc += values[i] * values[j] * (next - t);
        if breaks[i + 1] <= next {
            i += 1;
        }
        if breaks[j + 1] - tau <= next {
            j += 1;
        }
        t = next;
    }
    acc / end
}

/// Monte-Carlo mean of `e^{iφ(t)}` with exact phase integration.
pub fn empirical_envelope(
    spec: &EnsembleSpec,
    protocol: Protocol,
    coupling: f64,
    t_grid: &[f64],
) -> Result<DecayCurve> {
    check_grid(t_grid, spec.horizon)?;
    let halves: Vec<f64> = t_grid.iter().map(|t| 0.5 * t).collect();
    let per_path = spec.map_realizations(|r| {
        let full = r.phase_integrals(t_grid);
        let phases: Vec<f64> = match protocol {
            Protocol::Fid => full,
            Protocol::Echo => {
                let half = r.phase_integrals(&halves);
                half.iter().zip(&full).map(|(h, f)| 2.0 * h - f).collect()
            }
        };
        phases
            .into_iter()
            .map(|p| Complex64::from_polar(1.0, coupling * p))
            .collect::<Vec<_>>()
    })?;
    let (values, stderr): (Vec<_>, Vec<_>) = (0..t_grid.len())
        .map(|j| jackknife_complex(&per_path.iter().map(|row| row[j]).collect::<Vec<_>>()))
        .unzip();
    DecayCurve::new(format!("monte_carlo_{protocol}"), t_grid.to_vec(), values)?
        .with_stderr(stderr)
        .map(|c| {
            c.with_param("trajectories", spec.trajectories)
                .with_param("seed", spec.seed)
                .with_param("coupling", coupling)
        })
}

fn check_grid(t_grid: &[f64], horizon: f64) -> Result<()> {
    if t_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("time grid must be ascending"));
    }
    if t_grid.iter().any(|t| !(0.0..=horizon).contains(t)) {
        return Err(Error::domain(format!(
            "time grid must lie in [0, {horizon}]"
        )));
    }
    Ok(())
}

/// Estimate of `⟨ζ(t₁)ζ(t₂)ζ(t₃)ζ(t₄)⟩` for `t₁ ≥ t₂ ≥ t₃ ≥ t₄ ≥ 0`.
pub fn empirical_moment4(
    f: &Fluctuator,
    times: [f64; 4],
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if times.windows(2).any(|w| w[0] < w[1]) || times[3] < 0.0 {
        return Err(Error::invalid(
            "moment times must satisfy t1 ≥ t2 ≥ t3 ≥ t4 ≥ 0",
        ));
    }
    if samples == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let horizon = times[0].max(f64::MIN_POSITIVE);
    let a4 = f.amplitude().powi(4);
    let values = (0..samples)
        .into_par_iter()
        .map(|k| {
            let path = sample_trajectory(f, horizon, &mut rng_stream(seed, k as u64))?;
            Ok(a4 * times.iter().map(|&t| path.sign_at(t)).product::<f64>())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(jackknife(&values))
}
