//! Fluctuator-band distributions and their exact correlation functions,
//! spectral densities, correlation times and effective-fluctuator reductions.

mod band;

pub use band::{BandConfig, EffectiveFluctuator, NoiseBand};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Independent bands `ξ = Σ ξ_n`; correlations and spectra add.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelConfig", into = "ModelConfig")]
pub struct NoiseModel {
    bands: Vec<NoiseBand>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub bands: Vec<NoiseBand>,
    /// Require adjacent bands to share their cutoff (`γ_hi` of one band
    /// equal to `γ_lo` of the next).
    #[serde(default)]
    pub continuity: bool,
}

impl TryFrom<ModelConfig> for NoiseModel {
    type Error = Error;

    fn try_from(c: ModelConfig) -> Result<Self> {
        if c.continuity {
            NoiseModel::continuous(c.bands)
        } else {
            NoiseModel::new(c.bands)
        }
    }
}

impl From<NoiseModel> for ModelConfig {
    fn from(m: NoiseModel) -> Self {
        ModelConfig {
            bands: m.bands,
            continuity: false,
        }
    }
}

impl NoiseModel {
    pub fn new(bands: Vec<NoiseBand>) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::invalid("noise model needs at least one band"));
        }
        Ok(Self { bands })
    }

    /// Like [`new`](Self::new) but enforces `γ_hi(k) = γ_lo(k+1)`.
    pub fn continuous(bands: Vec<NoiseBand>) -> Result<Self> {
        for (k, w) in bands.windows(2).enumerate() {
            let (hi, lo) = (w[0].gamma_hi(), w[1].gamma_lo());
            if (hi - lo).abs() > 1e-12 * hi.max(lo) {
                return Err(Error::invalid(format!(
                    "bands {k} and {} are not continuous: gamma_hi={hi} but next gamma_lo={lo}",
                    k + 1
                )));
            }
        }
        Self::new(bands)
    }

    /// Slow `1/f` band on `[γ_m, γ_c]` plus fast band on `[γ_c, γ_0]`.
    pub fn two_band(
        sigma_slow: f64,
        sigma_fast: f64,
        gamma_m: f64,
        gamma_c: f64,
        gamma_0: f64,
    ) -> Result<Self> {
        Self::continuous(vec![
            NoiseBand::new(1, sigma_slow, gamma_m, gamma_c)?,
            NoiseBand::new(2, sigma_fast, gamma_c, gamma_0)?,
        ])
    }

    pub fn bands(&self) -> &[NoiseBand] {
        &self.bands
    }

    /// `χ(τ) = Σ χ_n(τ)`.
    pub fn correlation(&self, tau: f64) -> f64 {
        self.bands.iter().map(|b| b.correlation(tau)).sum()
    }

    pub fn spectral_density(&self, omega: f64) -> f64 {
        self.bands.iter().map(|b| b.spectral_density(omega)).sum()
    }

    /// `S₂(ω)/S₁(ω)` for a model made of exactly one `n = 1` and one `n = 2` band.
    pub fn spectral_ratio(&self, omega: f64) -> Result<f64> {
        let slow: Vec<_> = self.bands.iter().filter(|b| b.n() == 1).collect();
        let fast: Vec<_> = self.bands.iter().filter(|b| b.n() == 2).collect();
        if self.bands.len() != 2 || slow.len() != 1 || fast.len() != 1 {
            return Err(Error::invalid(
                "spectral ratio needs exactly one n=1 and one n=2 band",
            ));
        }
        Ok(fast[0].spectral_density(omega) / slow[0].spectral_density(omega))
    }

    pub fn effective_fluctuators(&self) -> Vec<EffectiveFluctuator> {
        self.bands
            .iter()
            .map(NoiseBand::effective_fluctuator)
            .collect()
    }
}

#[cfg(test)]
mod tests;
