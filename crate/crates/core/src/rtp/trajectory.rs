use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One random-telegraph source switching between `±amplitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFluctuator")]
pub struct Fluctuator {
    amplitude: f64,
    rate: f64,
}

#[derive(Deserialize)]
struct RawFluctuator {
    amplitude: f64,
    rate: f64,
}

impl TryFrom<RawFluctuator> for Fluctuator {
    type Error = Error;
    fn try_from(raw: RawFluctuator) -> Result<Self> {
        Fluctuator::new(raw.amplitude, raw.rate)
    }
}

impl Fluctuator {
    pub fn new(amplitude: f64, rate: f64) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::domain(format!(
                "fluctuator amplitude must be positive, got {amplitude}"
            )));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::domain(format!(
                "fluctuator rate must be positive, got {rate}"
            )));
        }
        Ok(Self { amplitude, rate })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// A unit-amplitude telegraph path on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    initial_sign: f64,
    flips: Vec<f64>,
    horizon: f64,
}

impl Trajectory {
    pub fn new(initial_sign: f64, flips: Vec<f64>, horizon: f64) -> Result<Self> {
        if initial_sign != 1.0 && initial_sign != -1.0 {
            return Err(Error::invalid("initial sign must be ±1"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::domain("trajectory horizon must be positive"));
        }
        let ordered = flips.windows(2).all(|w| w[0] < w[1]);
        let inside = flips.iter().all(|&f| (0.0..=horizon).contains(&f));
        if !ordered || !inside {
            return Err(Error::invalid(
                "flip times must be strictly increasing inside [0, T]",
            ));
        }
        Ok(Self {
            initial_sign,
            flips,
            horizon,
        })
    }

    pub fn initial_sign(&self) -> f64 {
        self.initial_sign
    }

    pub fn flips(&self) -> &[f64] {
        &self.flips
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Sign at time `t`; a flip at exactly `t` has already happened.
    pub fn sign_at(&self, t: f64) -> f64 {
        let k = self.flips.partition_point(|&f| f <= t);
        if k % 2 == 0 {
            self.initial_sign
        } else {
            -self.initial_sign
        }
    }

    /// `∫₀ᵗ s(u) du` at each of the ascending `times`.
    pub fn integrals_at(&self, times: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(times.len());
        let mut acc = 0.0;
        let mut last = 0.0;
        let mut sign = self.initial_sign;
        let mut next = 0;
        for &t in times {
            while next < self.flips.len() && self.flips[next] <= t {
                acc += sign * (self.flips[next] - last);
                last = self.flips[next];
                sign = -sign;
                next += 1;
            }
            out.push(acc + sign * (t - last));
        }
        out
    }

    /// Breakpoints `0 = b₀ < … < b_m = T` and the sign on each interval.
    pub fn segments(&self) -> (Vec<f64>, Vec<f64>) {
        let mut breaks = Vec::with_capacity(self.flips.len() + 2);
        breaks.push(0.0);
        breaks.extend(
            self.flips
                .iter()
                .copied()
                .filter(|&f| f > 0.0 && f < self.horizon),
        );
        breaks.push(self.horizon);
        let signs = breaks
            .windows(2)
            .map(|w| self.sign_at(0.5 * (w[0] + w[1])))
            .collect();
        (breaks, signs)
    }
}

/// Telegraph path with Poisson switching at rate `γ`, which gives `⟨s(t)s(t+τ)⟩ = e^{-2γτ}`.
pub fn sample_trajectory<R: Rng + ?Sized>(
    f: &Fluctuator,
    horizon: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::domain(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let initial_sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let mut flips = Vec::new();
    let mut t = 0.0;
    loop {
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / f.rate();
        if t > horizon {
            break;
        }
        // coincident draws are measure-zero but possible in floating point
        if flips.last().is_some_and(|&last| t <= last) {
            flips.pop();
            continue;
        }
        flips.push(t);
    }
    Ok(Trajectory {
        initial_sign,
        flips,
        horizon,
    })
}
