use std::fmt::Write as _;

use fluctuon::curve::{logspace, DecayCurve, Protocol};
use fluctuon::dephasing::{
    effective_envelope, filter_function_envelope, gaussian_envelope, ode_dephasing_envelope, phi,
    DephasingProblem,
};
use fluctuon::fit::{self, FitConfig};
use fluctuon::ode::StepControl;
use fluctuon::qubit::{
    br_partial_rates_quadrature, br_rates, BrKernel, BrRates, PerpAxis, QubitCoupling,
};
use fluctuon::rtp::{
    empirical_correlation, empirical_envelope, EnsembleSpec, Fluctuator, Population,
};
use fluctuon::special::QuadratureSpec;
use serde::Serialize;

use crate::config::{Method, RunConfig};
use crate::error::CliError;

/// What a command produced: the main artifact plus an optional JSON summary.
pub struct Output {
    pub body: String,
    pub summary: Option<String>,
}

impl Output {
    fn body(body: String) -> Self {
        Self {
            body,
            summary: None,
        }
    }
}

const DEFAULT_FLUCTUATORS_PER_BAND: usize = 200;

fn header(command: &str, cfg: &RunConfig) -> String {
    format!(
        "# fluctuon {command} config sha256={} seed={}\n",
        cfg.hash(),
        cfg.seed()
    )
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn sampled_spec(
    cfg: &RunConfig,
    horizon: f64,
    default_trajectories: usize,
) -> Result<EnsembleSpec, CliError> {
    let count = cfg
        .fluctuators_per_band
        .unwrap_or(DEFAULT_FLUCTUATORS_PER_BAND);
    if count == 0 {
        return Err(CliError::config("fluctuators_per_band must be at least 1"));
    }
    Ok(EnsembleSpec {
        population: Population::Sampled {
            bands: cfg.noise_model()?.bands().to_vec(),
            count,
        },
        trajectories: cfg.trajectories(default_trajectories)?,
        seed: cfg.seed(),
        horizon: horizon.max(f64::MIN_POSITIVE),
    })
}

/// Per-band spectral densities on a frequency grid in MHz, with the `A/ω`
/// reference of every `1/f` band.
pub fn spectrum(cfg: &RunConfig) -> Result<Output, CliError> {
    let model = cfg.noise_model()?;
    let f = match &cfg.f_grid {
        Some(g) => g.resolve("f_grid")?,
        None => logspace(1e-8, 1e2, 201),
    };
    if f[0] < 0.0 {
        return Err(CliError::config("f_grid must be non-negative"));
    }
    let bands = model.bands();
    let amplitude: f64 = bands
        .iter()
        .filter(|b| b.n() == 1)
        .map(|b| b.sigma().powi(2) / (2.0 * (b.gamma_hi() / b.gamma_lo()).ln()))
        .sum();
    let has_reference = bands.iter().any(|b| b.n() == 1);

    let mut out = header("spectrum", cfg);
    out.push_str("f_mhz,omega");
    for k in 1..=bands.len() {
        write!(out, ",s{k}").unwrap();
    }
    out.push_str(",s_total");
    if has_reference {
        out.push_str(",one_over_f");
    }
    out.push('\n');
    for &fk in &f {
        let omega = 2.0 * std::f64::consts::PI * fk;
        write!(out, "{fk:.16e},{omega:.16e}").unwrap();
        let mut total = 0.0;
        for b in bands {
            let s = b.spectral_density(omega);
            total += s;
            write!(out, ",{s:.16e}").unwrap();
        }
        write!(out, ",{total:.16e}").unwrap();
        if has_reference {
            write!(out, ",{:.16e}", amplitude / omega).unwrap();
        }
        out.push('\n');
    }
    Ok(Output::body(out))
}

/// Closed-form correlation per band, optionally with a Monte-Carlo column.
pub fn correlate(cfg: &RunConfig) -> Result<Output, CliError> {
    let model = cfg.noise_model()?;
    let taus = cfg
        .tau_grid
        .as_ref()
        .ok_or_else(|| CliError::config("`tau_grid` is required"))?
        .resolve("tau_grid")?;
    if taus[0] < 0.0 {
        return Err(CliError::config("tau_grid must be non-negative"));
    }
    let mc = match cfg.trajectories {
        Some(_) => Some(empirical_correlation(
            &sampled_spec(cfg, 2.0 * taus.last().unwrap(), 1)?,
            &taus,
        )?),
        None => None,
    };
    let bands = model.bands();
    let mut out = header("correlate", cfg);
    out.push_str("tau");
    for k in 1..=bands.len() {
        write!(out, ",chi{k}").unwrap();
    }
    out.push_str(",chi_total");
    if mc.is_some() {
        out.push_str(",mc_mean,mc_stderr");
    }
    out.push('\n');
    for (j, &tau) in taus.iter().enumerate() {
        write!(out, "{tau:.16e}").unwrap();
        for b in bands {
            write!(out, ",{:.16e}", b.correlation(tau)).unwrap();
        }
        write!(out, ",{:.16e}", model.correlation(tau)).unwrap();
        if let Some(est) = &mc {
            write!(out, ",{:.16e},{:.16e}", est[j].mean, est[j].stderr).unwrap();
        }
        out.push('\n');
    }
    Ok(Output::body(out))
}

fn decay_curve(
    cfg: &RunConfig,
    problem: &DephasingProblem,
    method: Method,
    t: &[f64],
) -> Result<DecayCurve, CliError> {
    Ok(match method {
        Method::Gaussian => gaussian_envelope(problem, t)?,
        Method::TwoFluctuator => effective_envelope(problem, t)?,
        Method::Ode => {
            let omega = cfg.omega;
            ode_dephasing_envelope(problem, |_| omega, t, &StepControl::default())?.curve
        }
        Method::FilterFunction => filter_function_envelope(problem, t, &QuadratureSpec::default())?,
        Method::MonteCarlo => {
            let spec = sampled_spec(cfg, *t.last().unwrap(), 2000)?;
            empirical_envelope(&spec, problem.protocol, problem.coupling, t)?
        }
    })
}

/// Envelopes from every requested method in aligned columns.
pub fn decay(cfg: &RunConfig) -> Result<Output, CliError> {
    let protocol = cfg
        .protocol
        .ok_or_else(|| CliError::config("`protocol` is required (fid or echo)"))?;
    let t = cfg.t_grid()?;
    let methods = cfg
        .methods
        .clone()
        .unwrap_or_else(|| vec![Method::Gaussian]);
    if methods.is_empty() {
        return Err(CliError::config("`methods` is empty"));
    }
    let problem = DephasingProblem::new(cfg.noise_model()?, cfg.coupling, protocol)?;
    let curves = methods
        .iter()
        .map(|&m| decay_curve(cfg, &problem, m, &t))
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = header("decay", cfg);
    for (m, c) in methods.iter().zip(&curves) {
        write!(out, "# {}: method={}", m.name(), c.method).unwrap();
        for (k, v) in &c.params {
            write!(out, " {k}={v}").unwrap();
        }
        out.push('\n');
    }
    out.push('t');
    for (m, c) in methods.iter().zip(&curves) {
        let n = m.name();
        write!(out, ",{n}_re,{n}_im,{n}_abs").unwrap();
        if c.stderr.is_some() {
            write!(out, ",{n}_stderr").unwrap();
        }
    }
    out.push('\n');
    for (j, tj) in t.iter().enumerate() {
        write!(out, "{tj:.16e}").unwrap();
        for c in &curves {
            let z = c.values[j];
            write!(out, ",{:.16e},{:.16e},{:.16e}", z.re, z.im, z.norm()).unwrap();
            if let Some(se) = &c.stderr {
                write!(out, ",{:.16e}", se[j]).unwrap();
            }
        }
        out.push('\n');
    }
    Ok(Output::body(out))
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    protocol: Protocol,
    gamma: f64,
    v: f64,
    max_abs_deviation: f64,
    max_deviation_in_stderr: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct ValidationReport {
    config_sha256: String,
    seed: u64,
    trajectories: usize,
    threshold_stderr: f64,
    checks: Vec<Check>,
    pass: bool,
}

/// Monte-Carlo single-fluctuator envelopes against the closed forms.
pub fn validate(cfg: &RunConfig) -> Result<Output, CliError> {
    let vcfg = cfg.validate.clone().unwrap_or_default();
    let t = vcfg.t_grid.resolve("validate.t_grid")?;
    let trajectories = cfg.trajectories(10_000)?;
    let mut checks = Vec::new();
    for (case, &(gamma, v)) in vcfg.cases.iter().enumerate() {
        let f = Fluctuator::new(v, gamma)
            .map_err(|e| CliError::config(format!("validate case {case}: {e}")))?;
        for protocol in [Protocol::Fid, Protocol::Echo] {
            let spec = EnsembleSpec {
                population: Population::Fixed(vec![f]),
                trajectories,
                seed: cfg.seed().wrapping_add(case as u64),
                horizon: t.last().unwrap().max(f64::MIN_POSITIVE),
            };
            let mc = empirical_envelope(&spec, protocol, 1.0, &t)?;
            let se = mc
                .stderr
                .as_ref()
                .expect("Monte-Carlo curves carry standard errors");
            let (mut dev, mut ratio, mut pass) = (0.0_f64, 0.0_f64, true);
            for (j, &tj) in t.iter().enumerate() {
                let d = (mc.values[j] - phi(protocol, gamma, v, tj)?).norm();
                dev = dev.max(d);
                if se[j] > 0.0 {
                    ratio = ratio.max(d / se[j]);
                    pass &= d <= vcfg.threshold_stderr * se[j];
                } else {
                    pass &= d <= 1e-12;
                }
            }
            checks.push(Check {
                name: format!("{protocol} gamma={gamma} v={v}"),
                protocol,
                gamma,
                v,
                max_abs_deviation: dev,
                max_deviation_in_stderr: ratio,
                pass,
            });
        }
    }
    let report = ValidationReport {
        config_sha256: cfg.hash(),
        seed: cfg.seed(),
        trajectories,
        threshold_stderr: vcfg.threshold_stderr,
        pass: checks.iter().all(|c| c.pass),
        checks,
    };
    Ok(Output::body(to_json(&report)))
}

#[derive(Debug, Serialize)]
struct FitReport {
    config_sha256: String,
    label: String,
    gamma_1: f64,
    v1: f64,
    gamma_c: f64,
    #[serde(flatten)]
    fit: fit::FitResult,
    gamma_phi_fid: f64,
    gamma_phi_echo: f64,
    fid_echo_ratio: f64,
}

/// Fast-fluctuator fit of a dataset; CSV of data and model, JSON summary.
pub fn fit_dataset(cfg: &RunConfig) -> Result<Output, CliError> {
    let section = cfg
        .fit
        .as_ref()
        .ok_or_else(|| CliError::config("`fit` section is required"))?;
    let preset = match &cfg.preset {
        Some(name) => fit::preset(name),
        None => None,
    };
    let need = |value: Option<f64>, from_preset: Option<f64>, name: &str| {
        value
            .or(from_preset)
            .ok_or_else(|| CliError::config(format!("fit.{name} is required without a preset")))
    };
    let gamma_1 = need(
        section.gamma_1,
        preset.as_ref().map(|p| p.gamma_1),
        "gamma_1",
    )?;
    let v1 = need(section.v1, preset.as_ref().map(|p| p.v1), "v1")?;
    let gamma_c = section
        .gamma_c
        .or(preset.as_ref().map(|p| p.gamma_c_or_default()))
        .unwrap_or(fit::DEFAULT_GAMMA_C);
    let gamma_m = section
        .gamma_m
        .or(preset.as_ref().and_then(|p| p.gamma_m))
        .unwrap_or(fit::DEFAULT_GAMMA_M);

    let mut config = FitConfig::with_slow(gamma_1, v1, gamma_c);
    if let Some(b) = section.v2_bounds {
        config.v2_bounds = b;
    }
    if let Some(b) = section.gamma_0_bounds {
        config.gamma_0_bounds = b;
    }
    if let Some(n) = section.max_iterations {
        config.max_iterations = n;
    }
    let label = section.dataset.display().to_string();
    let data = fit::load_dataset(&section.dataset, &label, section.protocol)?;
    let result = fit::fit_fast_fluctuator(&data, &config)?;
    let model = fit::two_fluctuator_model(&data, &config, result.v2, result.gamma_2)?;

    let mut csv = header("fit", cfg);
    csv.push_str("t_us,envelope,model,residual\n");
    for (s, m) in data.samples().iter().zip(&model) {
        writeln!(csv, "{:.16e},{:.16e},{m:.16e},{:.16e}", s.t, s.y, m - s.y).unwrap();
    }
    let gamma_phi_fid = fit::fid_rate_gaussian(v1, result.v2);
    let gamma_phi_echo = v1 / fit::v1_from_echo_rate(1.0, gamma_m, gamma_c);
    let report = FitReport {
        config_sha256: cfg.hash(),
        label,
        gamma_1,
        v1,
        gamma_c,
        gamma_phi_fid,
        gamma_phi_echo,
        fid_echo_ratio: gamma_phi_fid / gamma_phi_echo,
        fit: result,
    };
    Ok(Output {
        body: csv,
        summary: Some(to_json(&report)),
    })
}

#[derive(Debug, Serialize)]
struct BrReport {
    config_sha256: String,
    closed_form: BrRates,
    quadrature: BrRates,
    gamma1_kernel_as_printed: f64,
}

/// Bloch–Redfield rates of the first `n = 2` band.
pub fn br(cfg: &RunConfig) -> Result<Output, CliError> {
    let q = cfg
        .qubit
        .as_ref()
        .ok_or_else(|| CliError::config("`qubit` section is required"))?;
    let model = cfg.noise_model()?;
    let band = model
        .bands()
        .iter()
        .find(|b| b.n() == 2)
        .ok_or_else(|| CliError::config("br-rates needs an n = 2 band in the model"))?;
    let coupling = QubitCoupling::new(q.omega, q.d_z, q.d_perp, PerpAxis::X)?;
    let spec = QuadratureSpec::default();
    let report = BrReport {
        config_sha256: cfg.hash(),
        closed_form: br_rates(&coupling, band)?,
        quadrature: br_partial_rates_quadrature(&coupling, band, BrKernel::Normalized, &spec)?,
        gamma1_kernel_as_printed: br_partial_rates_quadrature(
            &coupling,
            band,
            BrKernel::AsPrinted,
            &spec,
        )?
        .gamma1,
    };
    Ok(Output::body(to_json(&report)))
}
