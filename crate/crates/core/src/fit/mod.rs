//! Derived decay rates, sample presets and least-squares fits of the fast
//! fluctuator to measured decay curves.

mod dataset;
mod nelder_mead;

pub use dataset::{load_dataset, read_dataset, write_dataset, DataPoint, ExperimentDataset};
pub use nelder_mead::{nelder_mead, Minimum};

use serde::{Deserialize, Serialize};

use crate::dephasing::phi;
use crate::error::{Error, Result};
use crate::noise::{NoiseBand, NoiseModel};

/// Gaussian echo rate `√(A ln 2)·|∂E/∂λ|` for `1/f` amplitude `A`.
pub fn echo_rate_gaussian(amplitude: f64, sensitivity: f64) -> f64 {
    (amplitude * std::f64::consts::LN_2).sqrt() * sensitivity.abs()
}

/// Slow-band coupling reproducing a Gaussian echo rate over `[γ_m, γ_c]`.
pub fn v1_from_echo_rate(gamma_phi_echo: f64, gamma_m: f64, gamma_c: f64) -> f64 {
    gamma_phi_echo * (2.0 * (gamma_c / gamma_m).ln() / std::f64::consts::LN_2).sqrt()
}

/// `1/f` amplitude of a slow band with coupling `v₁ = σ₁D`.
pub fn amplitude_from_v1(v1: f64, coupling: f64, gamma_m: f64, gamma_c: f64) -> f64 {
    let sigma = v1 / coupling;
    sigma * sigma / (2.0 * (gamma_c / gamma_m).ln())
}

/// Gaussian FID rate of two quasistatic couplings.
pub fn fid_rate_gaussian(v1: f64, v2: f64) -> f64 {
    ((v1 * v1 + v2 * v2) / 2.0).sqrt()
}

/// Effective rate of a `1/f` band on `[γ_m, γ_c]`.
pub fn gamma1_from_cutoffs(gamma_m: f64, gamma_c: f64) -> Result<f64> {
    Ok(NoiseBand::new(1, 1.0, gamma_m, gamma_c)?.mean_rate())
}

/// Effective rate of a `1/f²` band on `[γ_c, γ_0]`.
pub fn gamma2_from_cutoffs(gamma_c: f64, gamma_0: f64) -> Result<f64> {
    Ok(NoiseBand::new(2, 1.0, gamma_c, gamma_0)?.mean_rate())
}

/// Upper cutoff `γ_0` whose `1/f²` band above `γ_c` has effective rate `γ₂`.
pub fn gamma0_from_gamma2(gamma_c: f64, gamma_2: f64) -> Result<f64> {
    // γ₂(γ₀) increases from γ_c (at γ₀ → γ_c) without bound, roughly γ_c ln(γ₀/γ_c).
    if !(gamma_c > 0.0 && gamma_2 > gamma_c && gamma_2.is_finite()) {
        return Err(Error::domain(format!(
            "need gamma_2 > gamma_c > 0, got gamma_2={gamma_2}, gamma_c={gamma_c}"
        )));
    }
    let g2 = |log_x: f64| gamma2_from_cutoffs(gamma_c, gamma_c * log_x.exp());
    let (mut lo, mut hi) = (1e-9_f64, 1.0_f64);
    while g2(hi)? < gamma_2 {
        hi *= 2.0;
        if hi > 700.0 {
            return Err(Error::domain(format!(
                "gamma_2={gamma_2} needs gamma_0 beyond f64 range"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g2(mid)? < gamma_2 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    Ok(gamma_c * (0.5 * (lo + hi)).exp())
}

/// Parameter set printed for one experiment. Cutoffs the source leaves
/// unstated are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePreset {
    pub name: String,
    pub gamma_m: Option<f64>,
    pub gamma_c: Option<f64>,
    pub gamma_0: Option<f64>,
    pub gamma_1: f64,
    pub gamma_2: f64,
    pub v1: f64,
    pub v2: f64,
    pub gamma_phi_echo: f64,
}

/// Lower fast-band cutoff assumed when a preset does not state one.
pub const DEFAULT_GAMMA_C: f64 = 0.5;
/// Infrared cutoff (0.5 s⁻¹ in μs⁻¹) assumed when a preset does not state one.
pub const DEFAULT_GAMMA_M: f64 = 5e-7;

impl SamplePreset {
    /// `γ_c`, falling back to [`DEFAULT_GAMMA_C`].
    pub fn gamma_c_or_default(&self) -> f64 {
        self.gamma_c.unwrap_or(DEFAULT_GAMMA_C)
    }

    /// `γ_0`, solved from the stored `γ₂` when not stated.
    pub fn gamma_0_or_solved(&self) -> Result<f64> {
        match self.gamma_0 {
            Some(g) => Ok(g),
            None => gamma0_from_gamma2(self.gamma_c_or_default(), self.gamma_2),
        }
    }

    /// Slow `1/f` band with amplitude `v₁/D` on `[γ_m, γ_c]` and fast band
    /// with amplitude `v₂/D` on `[γ_c, γ_0]`.
    pub fn model(&self, coupling: f64) -> Result<NoiseModel> {
        if !(coupling > 0.0 && coupling.is_finite()) {
            return Err(Error::domain(format!(
                "coupling must be positive, got {coupling}"
            )));
        }
        NoiseModel::two_band(
            self.v1 / coupling,
            self.v2 / coupling,
            self.gamma_m.unwrap_or(DEFAULT_GAMMA_M),
            self.gamma_c_or_default(),
            self.gamma_0_or_solved()?,
        )
    }
}

/// The three presets: flux noise in samples A and B, bias-current noise in A.
pub fn sample_presets() -> Vec<SamplePreset> {
    vec![
        SamplePreset {
            name: "sample_a_flux".into(),
            gamma_m: Some(crate::units::RateUnit::PerSecond.to_per_us(0.5)),
            gamma_c: Some(0.5),
            gamma_0: Some(4.25),
            gamma_1: 0.04,
            gamma_2: 1.2,
            v1: 4.92,
            v2: 2.72,
            gamma_phi_echo: 0.8,
        },
        SamplePreset {
            name: "sample_b_flux".into(),
            gamma_m: None,
            gamma_c: None,
            gamma_0: None,
            gamma_1: 0.04,
            gamma_2: 5.75,
            v1: 21.0,
            v2: 12.45,
            gamma_phi_echo: 3.75,
        },
        SamplePreset {
            name: "sample_a_bias_current".into(),
            gamma_m: None,
            gamma_c: None,
            gamma_0: None,
            gamma_1: 0.04,
            gamma_2: 2.0,
            v1: 10.5,
            v2: 50.0,
            gamma_phi_echo: 1.7,
        },
    ]
}

pub fn preset(name: &str) -> Option<SamplePreset> {
    sample_presets().into_iter().find(|p| p.name == name)
}

/// Fixed slow fluctuator, search box and cutoff for [`fit_fast_fluctuator`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub gamma_1: f64,
    pub v1: f64,
    pub gamma_c: f64,
    pub v2_bounds: (f64, f64),
    pub gamma_0_bounds: (f64, f64),
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

fn default_max_iterations() -> usize {
    2000
}

impl FitConfig {
    /// Box wide enough for every preset, around a given slow fluctuator.
    pub fn with_slow(gamma_1: f64, v1: f64, gamma_c: f64) -> Self {
        Self {
            gamma_1,
            v1,
            gamma_c,
            v2_bounds: (0.0, 200.0),
            gamma_0_bounds: (gamma_c * (1.0 + 1e-3), gamma_c * 1e7),
            max_iterations: default_max_iterations(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (vlo, vhi) = self.v2_bounds;
        let (glo, ghi) = self.gamma_0_bounds;
        if !(self.gamma_1 > 0.0 && self.v1 >= 0.0 && self.gamma_c > 0.0) {
            return Err(Error::invalid(
                "fit needs gamma_1 > 0, v1 >= 0, gamma_c > 0",
            ));
        }
        if !(vlo >= 0.0 && vhi > vlo && vhi.is_finite()) {
            return Err(Error::invalid(format!("bad v2 bounds ({vlo}, {vhi})")));
        }
        if !(glo > self.gamma_c && ghi > glo && ghi.is_finite()) {
            return Err(Error::invalid(format!(
                "gamma_0 bounds ({glo}, {ghi}) must lie above gamma_c={}",
                self.gamma_c
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub v2: f64,
    pub gamma_0: f64,
    pub gamma_2: f64,
    pub sse: f64,
    pub iterations: usize,
    #[serde(skip)]
    pub history: Vec<f64>,
}

/// Envelope `Φ₁·Φ₂` for the fixed slow and trial fast fluctuator.
pub fn two_fluctuator_model(
    dataset: &ExperimentDataset,
    config: &FitConfig,
    v2: f64,
    gamma_2: f64,
) -> Result<Vec<f64>> {
    dataset
        .samples()
        .iter()
        .map(|s| {
            Ok(phi(dataset.protocol, config.gamma_1, config.v1, s.t)?
                * phi(dataset.protocol, gamma_2, v2, s.t)?)
        })
        .collect()
}

/// Weighted least-squares fit of `(v₂, γ₀)`.
///
/// Search runs in `u = (ln(v₂ − v_lo), ln(γ₀ − γ_c))`; points past an upper
/// bound are penalized. Nelder–Mead starts from the best few nodes of a fixed
/// log grid, so the result is deterministic. Convergence is declared when the simplex spans
/// less than `1e-6` of the `v₂` box and of the `ln(γ₀ − γ_c)` box, or when all
/// vertices share the same objective to rounding.
pub fn fit_fast_fluctuator(dataset: &ExperimentDataset, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    const MIN_SAMPLES: usize = 6;
    if dataset.samples().is_empty() {
        return Err(Error::invalid("dataset is empty"));
    }
    if dataset.samples().len() < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "fit needs at least {MIN_SAMPLES} samples, dataset has {}",
            dataset.samples().len()
        )));
    }
    let (vlo, vhi) = config.v2_bounds;
    let (glo, ghi) = config.gamma_0_bounds;
    let gc = config.gamma_c;
    let decode = |u: &[f64]| (vlo + u[0].exp(), gc + u[1].exp());

    let sse = |v2: f64, g0: f64| -> Result<f64> {
        let g2 = gamma2_from_cutoffs(gc, g0)?;
        let model = two_fluctuator_model(dataset, config, v2, g2)?;
        Ok(dataset
            .samples()
            .iter()
            .zip(model)
            .map(|(s, m)| {
                let r = (m - s.y) / s.sigma.unwrap_or(1.0);
                r * r
            })
            .sum())
    };
    let objective = |u: &[f64]| -> f64 {
        let (v2, g0) = decode(u);
        let excess = (v2 - vhi).max(0.0) / (vhi - vlo)
            + (g0 - ghi).max(0.0) / (ghi - glo)
            + (glo - g0).max(0.0) / (glo - gc);
        match sse(v2.min(vhi), g0.clamp(glo, ghi)) {
            Ok(value) => value * (1.0 + excess) + excess,
            Err(_) => f64::INFINITY,
        }
    };

    // v₂ ≫ γ₂ makes the objective oscillate in v₂, hence the fine v₂ axis
    // and several starts.
    const GRID_V: usize = 240;
    const GRID_G: usize = 24;
    const STARTS: usize = 4;
    let u1_range = (((vhi - vlo) * 1e-4).ln(), (vhi - vlo).ln());
    let u2_range = ((glo - gc).ln(), (ghi - gc).ln());
    let node = |range: (f64, f64), k: usize, count: usize| {
        range.0 + (range.1 - range.0) * k as f64 / (count - 1) as f64
    };
    let mut nodes: Vec<(f64, [f64; 2])> = (0..GRID_V)
        .flat_map(|i| (0..GRID_G).map(move |j| (i, j)))
        .map(|(i, j)| {
            let u = [node(u1_range, i, GRID_V), node(u2_range, j, GRID_G)];
            (objective(&u), u)
        })
        .collect();
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let step1 = 2.0 * (u1_range.1 - u1_range.0) / (GRID_V - 1) as f64;
    let step2 = (u2_range.1 - u2_range.0) / (GRID_G - 1) as f64;

    let span_ln_g0 = u2_range.1 - u2_range.0;
    let done = |pts: &[Vec<f64>], vals: &[f64]| {
        let spread = |f: &dyn Fn(&[f64]) -> f64| {
            let (lo, hi) = pts
                .iter()
                .map(|p| f(p))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x), hi.max(x))
                });
            hi - lo
        };
        let small_box =
            spread(&|u| decode(u).0) < 1e-6 * (vhi - vlo) && spread(&|u| u[1]) < 1e-6 * span_ln_g0;
        let (fmin, fmax) = (vals[0], vals[vals.len() - 1]);
        let flat = fmax - fmin <= 4.0 * f64::EPSILON * fmin.abs() + f64::MIN_POSITIVE;
        small_box || flat
    };
    let runs: Vec<Minimum> = nodes
        .iter()
        .take(STARTS)
        .map(|(_, u)| {
            let simplex = vec![
                u.to_vec(),
                vec![u[0] + step1, u[1]],
                vec![u[0], u[1] + step2],
            ];
            nelder_mead(objective, simplex, config.max_iterations, done)
        })
        .collect();
    if let Some(failed) = runs.iter().find(|m| !m.converged) {
        return Err(Error::NonConvergence {
            what: format!("fast-fluctuator fit (best sse {:e})", failed.value),
            iterations: failed.iterations,
        });
    }
    let m = runs
        .into_iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one start");
    let (v2, g0) = decode(&m.x);
    let (v2, g0) = (v2.min(vhi), g0.clamp(glo, ghi));
    Ok(FitResult {
        v2,
        gamma_0: g0,
        gamma_2: gamma2_from_cutoffs(gc, g0)?,
        sse: sse(v2, g0)?,
        iterations: m.iterations,
        history: m.history,
    })
}
