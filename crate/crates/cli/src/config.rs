use std::path::{Path, PathBuf};

use fluctuon::curve::{linspace, logspace, Protocol};
use fluctuon::fit::preset;
use fluctuon::noise::{ModelConfig, NoiseModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Grid given either as explicit points or as `{start, stop, points, spacing}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Points(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        points: usize,
        #[serde(default)]
        spacing: Spacing,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

impl Grid {
    pub fn resolve(&self, what: &str) -> Result<Vec<f64>, CliError> {
        let points = match self {
            Grid::Points(p) => p.clone(),
            Grid::Range {
                start,
                stop,
                points,
                spacing,
            } => {
                if *spacing == Spacing::Log && !(*start > 0.0 && *stop > 0.0) {
                    return Err(CliError::config(format!(
                        "{what}: log grid needs positive start and stop"
                    )));
                }
                match spacing {
                    Spacing::Linear => linspace(*start, *stop, *points),
                    Spacing::Log => logspace(*start, *stop, *points),
                }
            }
        };
        if points.is_empty() {
            return Err(CliError::config(format!("{what} is empty")));
        }
        if points.iter().any(|x| !x.is_finite()) || points.windows(2).any(|w| w[1] < w[0]) {
            return Err(CliError::config(format!(
                "{what} must be finite and ascending"
            )));
        }
        Ok(points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gaussian,
    TwoFluctuator,
    Ode,
    FilterFunction,
    MonteCarlo,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Gaussian => "gaussian",
            Method::TwoFluctuator => "two_fluctuator",
            Method::Ode => "ode",
            Method::FilterFunction => "filter_function",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

/// Single-fluctuator cases checked by `validate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    /// `(γ, v)` pairs.
    pub cases: Vec<(f64, f64)>,
    pub t_grid: Grid,
    #[serde(default = "three")]
    pub threshold_stderr: f64,
}

fn three() -> f64 {
    3.0
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            cases: vec![(1.0, 0.5), (1.0, 1.0), (0.04, 4.92), (1.2, 2.72)],
            t_grid: Grid::Range {
                start: 0.0,
                stop: 3.0,
                points: 31,
                spacing: Spacing::Linear,
            },
            threshold_stderr: three(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub dataset: PathBuf,
    #[serde(default = "echo")]
    pub protocol: Protocol,
    /// Slow fluctuator; taken from the preset when absent.
    pub gamma_1: Option<f64>,
    pub v1: Option<f64>,
    pub gamma_c: Option<f64>,
    /// Infrared cutoff, used only for the derived echo rate.
    pub gamma_m: Option<f64>,
    pub v2_bounds: Option<(f64, f64)>,
    pub gamma_0_bounds: Option<(f64, f64)>,
    pub max_iterations: Option<usize>,
}

fn echo() -> Protocol {
    Protocol::Echo
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSection {
    pub omega: f64,
    pub d_z: f64,
    pub d_perp: f64,
}

/// One run. `preset` expands into `model` during [`RunConfig::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub model: Option<ModelConfig>,
    /// Indices of the bands to keep, e.g. `[0]` for the slow band alone.
    pub only_bands: Option<Vec<usize>>,
    #[serde(default = "one")]
    pub coupling: f64,
    pub protocol: Option<Protocol>,
    pub t_grid: Option<Grid>,
    pub tau_grid: Option<Grid>,
    /// Frequency grid in MHz (`f = ω/2π`).
    pub f_grid: Option<Grid>,
    pub methods: Option<Vec<Method>>,
    /// Constant level splitting for the `ode` method, rad·μs⁻¹.
    #[serde(default)]
    pub omega: f64,
    pub seed: Option<u64>,
    pub trajectories: Option<usize>,
    pub fluctuators_per_band: Option<usize>,
    pub validate: Option<ValidateConfig>,
    pub fit: Option<FitSection>,
    pub qubit: Option<QubitSection>,
}

fn one() -> f64 {
    1.0
}

pub const DEFAULT_SEED: u64 = 20_250_101;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// Expands the preset, applies the seed override and fixes defaults so
    /// that the serialized form fully determines the run.
    pub fn resolve(mut self, seed_override: Option<u64>) -> Result<Self, CliError> {
        if let Some(name) = &self.preset {
            let p = preset(name).ok_or_else(|| {
                let known: Vec<String> = fluctuon::fit::sample_presets()
                    .into_iter()
                    .map(|p| p.name)
                    .collect();
                CliError::config(format!(
                    "unknown preset {name:?}; known presets: {}",
                    known.join(", ")
                ))
            })?;
            if self.model.is_some() {
                return Err(CliError::config(
                    "give either `preset` or `model`, not both",
                ));
            }
            self.model = Some(p.model(self.coupling)?.into());
        }
        if let Some(seed) = seed_override {
            self.seed = Some(seed);
        }
        self.seed.get_or_insert(DEFAULT_SEED);
        if !(self.coupling > 0.0 && self.coupling.is_finite()) {
            return Err(CliError::config(format!(
                "coupling must be positive, got {}",
                self.coupling
            )));
        }
        Ok(self)
    }

    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn noise_model(&self) -> Result<NoiseModel, CliError> {
        let config = self
            .model
            .clone()
            .ok_or_else(|| CliError::config("no noise model: set `preset` or `model`"))?;
        if config.bands.is_empty() {
            return Err(CliError::config("noise model has no bands"));
        }
        let model = NoiseModel::try_from(config)?;
        match &self.only_bands {
            None => Ok(model),
            Some(keep) => {
                let bands = model.bands();
                let picked = keep
                    .iter()
                    .map(|&k| {
                        bands.get(k).copied().ok_or_else(|| {
                            CliError::config(format!(
                                "only_bands: index {k} out of range (model has {} bands)",
                                bands.len()
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(NoiseModel::new(picked)?)
            }
        }
    }

    pub fn t_grid(&self) -> Result<Vec<f64>, CliError> {
        let grid = self
            .t_grid
            .as_ref()
            .ok_or_else(|| CliError::config("`t_grid` is required"))?;
        let t = grid.resolve("t_grid")?;
        if t[0] < 0.0 {
            return Err(CliError::config("t_grid must be non-negative"));
        }
        Ok(t)
    }

    pub fn trajectories(&self, default: usize) -> Result<usize, CliError> {
        match self.trajectories.unwrap_or(default) {
            0 => Err(CliError::config("trajectories must be at least 1")),
            n => Ok(n),
        }
    }
}
