use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{exp_int_en, exp_int_en_any, integrate_panels, QuadratureSpec};
use crate::units::RateUnit;

/// Below this lag the correlation is returned as its analytic value `σ²`.
const TAU_ZERO: f64 = 1e-14;

/// One fluctuator family: switching rates distributed as `P_n(γ) ∝ γ^{-n}`
/// on `[gamma_lo, gamma_hi]`, all with amplitude `sigma`.
///
/// `n = 1` gives a `1/f` spectrum between the cutoffs; `n = 2` a
/// Lorentzian-like `1/ω²` tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BandConfig", into = "BandConfig")]
pub struct NoiseBand {
    n: u32,
    sigma: f64,
    gamma_lo: f64,
    gamma_hi: f64,
}

/// On-disk form of a [`NoiseBand`]; rates may be given in s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    pub n: u32,
    pub sigma: f64,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    #[serde(default)]
    pub units: RateUnit,
}

impl TryFrom<BandConfig> for NoiseBand {
    type Error = Error;

    fn try_from(c: BandConfig) -> Result<Self> {
        NoiseBand::new(
            c.n,
            c.sigma,
            c.units.to_per_us(c.gamma_lo),
            c.units.to_per_us(c.gamma_hi),
        )
    }
}

impl From<NoiseBand> for BandConfig {
    fn from(b: NoiseBand) -> Self {
        BandConfig {
            n: b.n,
            sigma: b.sigma,
            gamma_lo: b.gamma_lo,
            gamma_hi: b.gamma_hi,
            units: RateUnit::PerMicrosecond,
        }
    }
}

/// Effective single-RTP stand-in for a band: `a*² = χ(0)`, `γ* = −½ d ln χ/dτ|₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveFluctuator {
    /// `a*`, in units of the fluctuating parameter.
    pub amplitude: f64,
    /// `γ*`, μs⁻¹.
    pub rate: f64,
}

impl EffectiveFluctuator {
    pub fn new(amplitude: f64, rate: f64) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() || !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::invalid(format!(
                "effective fluctuator needs amplitude >= 0 and rate > 0 (got {amplitude}, {rate})"
            )));
        }
        Ok(Self { amplitude, rate })
    }

    /// Correlation `a*² e^{-2γ* τ}` of the stand-in process.
    pub fn correlation(&self, tau: f64) -> f64 {
        self.amplitude * self.amplitude * (-2.0 * self.rate * tau.abs()).exp()
    }
}

impl NoiseBand {
    pub fn new(n: u32, sigma: f64, gamma_lo: f64, gamma_hi: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("band exponent n must be >= 1"));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!(
                "band amplitude must be finite and >= 0, got {sigma}"
            )));
        }
        if !(gamma_lo > 0.0) || !(gamma_lo < gamma_hi) || !gamma_hi.is_finite() {
            return Err(Error::invalid(format!(
                "band rates must satisfy 0 < gamma_lo < gamma_hi, got [{gamma_lo}, {gamma_hi}]"
            )));
        }
        Ok(Self {
            n,
            sigma,
            gamma_lo,
            gamma_hi,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn gamma_lo(&self) -> f64 {
        self.gamma_lo
    }

    pub fn gamma_hi(&self) -> f64 {
        self.gamma_hi
    }

    /// Same band with a different amplitude.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.n, sigma, self.gamma_lo, self.gamma_hi)
    }

    fn ratio(&self) -> f64 {
        self.gamma_lo / self.gamma_hi
    }

    /// `1 − (γ_lo/γ_hi)^{n−1}` without cancellation for narrow windows.
    fn one_minus_ratio_pow(&self) -> f64 {
        -(f64::from(self.n - 1) * self.ratio().ln()).exp_m1()
    }

    /// Normalization `A_n` of `P_n(γ) = A_n γ^{-n}`.
    pub fn normalization_constant(&self) -> f64 {
        if self.n == 1 {
            1.0 / (self.gamma_hi / self.gamma_lo).ln()
        } else {
            let nm1 = f64::from(self.n - 1);
            nm1 * self.gamma_lo.powf(nm1) / self.one_minus_ratio_pow()
        }
    }

    /// Rate density `P_n(γ)`; zero outside the window.
    pub fn rate_density(&self, gamma: f64) -> f64 {
        if gamma < self.gamma_lo || gamma > self.gamma_hi {
            0.0
        } else {
            self.normalization_constant() * gamma.powi(-(self.n as i32))
        }
    }

    /// Inverse CDF of `P_n`: maps `u ∈ [0, 1]` to a switching rate.
    pub fn rate_quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let g = if self.n == 1 {
            self.gamma_lo * (u * (self.gamma_hi / self.gamma_lo).ln()).exp()
        } else {
            let nm1 = f64::from(self.n - 1);
            self.gamma_lo * (1.0 - u * self.one_minus_ratio_pow()).powf(-1.0 / nm1)
        };
        g.clamp(self.gamma_lo, self.gamma_hi)
    }

    /// Coefficients `(w_lo, w_hi)` with `χ(τ) = σ²(w_lo E_n(bτ) − w_hi E_n(cτ))`.
    fn en_weights(&self) -> (f64, f64) {
        if self.n == 1 {
            let a = self.normalization_constant();
            (a, a)
        } else {
            let nm1 = f64::from(self.n - 1);
            let w = nm1 / self.one_minus_ratio_pow();
            (w, w * self.ratio().powf(nm1))
        }
    }

    /// Exact correlation `χ_n(τ)` of the band.
    pub fn correlation(&self, tau: f64) -> f64 {
        let tau = tau.abs();
        let s2 = self.sigma * self.sigma;
        if tau < TAU_ZERO {
            return s2;
        }
        let (w_lo, w_hi) = self.en_weights();
        let e_lo = exp_int_en(self.n, 2.0 * self.gamma_lo * tau).expect("positive argument");
        let e_hi = exp_int_en(self.n, 2.0 * self.gamma_hi * tau).expect("positive argument");
        s2 * (w_lo * e_lo - w_hi * e_hi)
    }

    /// `k`-th derivative of `χ_n` at `τ`, using `d/dz E_m(z) = −E_{m−1}(z)`.
    ///
    /// At `τ = 0` only orders with a finite limit (`k ≤ n − 2`, plus `k = 1`
    /// through the mean rate) are supported.
    pub fn correlation_derivative(&self, tau: f64, k: u32) -> Result<f64> {
        if k == 0 {
            return Ok(self.correlation(tau));
        }
        let s2 = self.sigma * self.sigma;
        if tau < 0.0 {
            return Err(Error::domain("correlation derivative needs tau >= 0"));
        }
        if tau == 0.0 {
            if k == 1 {
                return Ok(-2.0 * s2 * self.mean_rate());
            }
            return Err(Error::domain(
                "higher correlation derivatives at tau = 0 are not implemented",
            ));
        }
        let (w_lo, w_hi) = self.en_weights();
        let b = 2.0 * self.gamma_lo;
        let c = 2.0 * self.gamma_hi;
        let order = self.n as i32 - k as i32;
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        let lo = w_lo * b.powi(k as i32) * exp_int_en_any(order, b * tau)?;
        let hi = w_hi * c.powi(k as i32) * exp_int_en_any(order, c * tau)?;
        Ok(sign * s2 * (lo - hi))
    }

    /// Mean switching rate `∫γ P_n(γ) dγ`, which equals `−½ d ln χ/dτ|₀`.
    pub fn mean_rate(&self) -> f64 {
        let (lo, hi) = (self.gamma_lo, self.gamma_hi);
        match self.n {
            1 => (hi - lo) / (hi / lo).ln(),
            2 => hi * (hi / lo).ln() * self.ratio() / (1.0 - self.ratio()),
            n => {
                let nm1 = f64::from(n - 1);
                let nm2 = f64::from(n - 2);
                // A_n (γ_lo^{2−n} − γ_hi^{2−n})/(n−2), scaled by γ_lo^{n−1}
                nm1 / self.one_minus_ratio_pow() * lo * (1.0 - self.ratio().powf(nm2)) / nm2
            }
        }
    }

    /// Single-fluctuator reduction of the band.
    pub fn effective_fluctuator(&self) -> EffectiveFluctuator {
        EffectiveFluctuator {
            amplitude: self.sigma,
            rate: self.mean_rate(),
        }
    }

    /// Correlation time `τ_n = (1/χ(0)) ∫₀^∞ χ(τ) dτ = ⟨1/(2γ)⟩`.
    pub fn correlation_time(&self) -> f64 {
        let b = 2.0 * self.gamma_lo;
        let r = self.ratio();
        if self.n == 1 {
            (1.0 - r) / (b * (1.0 / r).ln())
        } else {
            let n = f64::from(self.n);
            let nm1 = n - 1.0;
            nm1 * (1.0 - r.powf(n)) / (n * b * self.one_minus_ratio_pow())
        }
    }

    /// Spectral density `S_n(ω) = (1/π)∫₀^∞ χ_n(τ) cos ωτ dτ` in closed form.
    pub fn spectral_density(&self, omega: f64) -> f64 {
        let omega = omega.abs();
        let s2 = self.sigma * self.sigma;
        let b = 2.0 * self.gamma_lo;
        let c = 2.0 * self.gamma_hi;
        let a = self.normalization_constant();
        match self.n {
            1 => {
                if omega == 0.0 {
                    s2 * a / (2.0 * PI) * (1.0 / self.gamma_lo - 1.0 / self.gamma_hi)
                } else {
                    s2 * a / (PI * omega) * ((omega / b).atan() - (omega / c).atan())
                }
            }
            2 => {
                if omega == 0.0 {
                    s2 * a / PI * (1.0 / (b * b) - 1.0 / (c * c))
                } else {
                    let w2 = omega * omega;
                    s2 * a / (PI * w2) * ((w2 / (b * b)).ln_1p() - (w2 / (c * c)).ln_1p())
                }
            }
            n => {
                let nm1 = f64::from(n - 1);
                let rho = c / b;
                let prefactor = s2 * nm1 / (PI * b * self.one_minus_ratio_pow());
                prefactor * lorentz_moment(n - 1, omega / b, rho)
            }
        }
    }

    /// Cosine transform of [`correlation`](Self::correlation) by quadrature.
    ///
    /// Independent of the closed form in
    /// [`spectral_density`](Self::spectral_density). The integral is taken
    /// directly while the oscillation count up to the decay of `χ` stays
    /// moderate; beyond that the range is cut where `ωT ≥ 60` and the fast
    /// part has died out, and the remainder is summed from the asymptotic
    /// integration-by-parts series `−Re e^{iωT} Σ (−1)^k χ^{(k)}(T)/(iω)^{k+1}`.
    pub fn spectral_density_quadrature(&self, omega: f64, spec: &QuadratureSpec) -> Result<f64> {
        let omega = omega.abs();
        let b = 2.0 * self.gamma_lo;
        let c = 2.0 * self.gamma_hi;
        let decay = 40.0 / b;
        let direct = omega * decay <= 2.0 * PI * 2000.0;
        let horizon = if direct {
            decay
        } else {
            (60.0 / omega).max(40.0 / c)
        };

        let mut breaks = vec![0.0];
        let mut edge = 0.05 / c;
        while edge < horizon {
            breaks.push(edge);
            edge *= 2.0;
        }
        breaks.push(horizon);
        if omega > 0.0 {
            let half_period = PI / omega;
            let mut refined = Vec::with_capacity(breaks.len());
            for w in breaks.windows(2) {
                let pieces = ((w[1] - w[0]) / half_period).ceil().max(1.0) as usize;
                let step = (w[1] - w[0]) / pieces as f64;
                for i in 0..pieces {
                    refined.push(w[0] + step * i as f64);
                }
            }
            refined.push(horizon);
            breaks = refined;
        }
        let body = integrate_panels(|t| self.correlation(t) * (omega * t).cos(), &breaks, spec)?;
        let tail = if direct {
            0.0
        } else {
            self.oscillatory_tail(omega, horizon)?
        };
        Ok((body + tail) / PI)
    }

    fn oscillatory_tail(&self, omega: f64, from: f64) -> Result<f64> {
        // ∫_T^∞ f e^{iωτ} dτ = −e^{iωT} Σ_k (−1)^k f^{(k)}(T)/(iω)^{k+1}
        let (sin_t, cos_t) = (omega * from).sin_cos();
        let mut re = 0.0;
        let mut last = f64::INFINITY;
        for k in 0..12u32 {
            let d = self.correlation_derivative(from, k)?;
            let mag = d.abs() / omega.powi(k as i32 + 1);
            if mag > last {
                break;
            }
            last = mag;
            // (−1)^k / (i)^{k+1} = (−1)^k (−i)^{k+1}
            let phase = match k % 4 {
                0 => (0.0, -1.0),
                1 => (-1.0, 0.0),
                2 => (0.0, 1.0),
                _ => (1.0, 0.0),
            };
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let (pr, pi) = (sign * phase.0, sign * phase.1);
            // −Re[(cos + i sin)(pr + i pi)] · d/ω^{k+1}
            re -= (cos_t * pr - sin_t * pi) * d / omega.powi(k as i32 + 1);
        }
        Ok(re)
    }

    /// `2∫₀^∞ S_n(ω) dω`, which should reproduce `σ²`; integrated in `ln ω`
    /// with the flat low-frequency and `1/ω²` high-frequency ends added
    /// analytically.
    pub fn spectral_weight(&self, spec: &QuadratureSpec) -> Result<f64> {
        let lo = 1e-6 * 2.0 * self.gamma_lo;
        let hi = 1e6 * 2.0 * self.gamma_hi;
        let decades = (hi / lo).log10().ceil() as usize;
        let breaks: Vec<f64> = (0..=decades)
            .map(|i| lo.ln() + (hi / lo).ln() * i as f64 / decades as f64)
            .collect();
        let body = integrate_panels(
            |u| {
                let w = u.exp();
                self.spectral_density(w) * w
            },
            &breaks,
            spec,
        )?;
        let low_end = self.spectral_density(0.0) * lo;
        let high_end = self.spectral_density(hi) * hi;
        Ok(2.0 * (body + low_end + high_end))
    }

    /// `∫ P_n(γ) f(γ) dγ` by quadrature in `ln γ`.
    pub fn rate_average<F: Fn(f64) -> f64>(&self, f: F, spec: &QuadratureSpec) -> Result<f64> {
        let (l0, l1) = (self.gamma_lo.ln(), self.gamma_hi.ln());
        let decades = ((l1 - l0) / std::f64::consts::LN_10).ceil().max(1.0) as usize;
        let breaks: Vec<f64> = (0..=decades)
            .map(|i| l0 + (l1 - l0) * i as f64 / decades as f64)
            .collect();
        integrate_panels(
            |u| {
                let g = u.exp();
                self.rate_density(g) * f(g) * g
            },
            &breaks,
            spec,
        )
    }
}

/// `J_p(w) = ∫₁^ρ y^{-p}/(y² + w²) dy` for `p ≥ 2`.
///
/// Power series in `w²` for small `w`, otherwise the downward-free
/// recurrence `J_p = (P_p − J_{p−2})/w²` from the closed `J_0`, `J_1`.
fn lorentz_moment(p: u32, w: f64, rho: f64) -> f64 {
    let power_integral = |q: u32| -> f64 {
        if q == 1 {
            rho.ln()
        } else {
            let qm1 = f64::from(q) - 1.0;
            -(-qm1 * rho.ln()).exp_m1() / qm1
        }
    };
    if w <= 0.7 {
        let w2 = w * w;
        let mut sum = 0.0;
        let mut scale = 1.0;
        for k in 0..400u32 {
            let term = scale * power_integral(p + 2 + 2 * k);
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
            scale *= -w2;
        }
        return sum;
    }
    let w2 = w * w;
    let (mut q, mut current) = if p.is_multiple_of(2) {
        (0, ((rho / w).atan() - (1.0 / w).atan()) / w)
    } else {
        (
            1,
            (rho * rho * (1.0 + w2) / (rho * rho + w2)).ln() / (2.0 * w2),
        )
    };
    while q < p {
        q += 2;
        current = (power_integral(q) - current) / w2;
    }
    current
}
