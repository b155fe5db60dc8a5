//! `fluctuon` batch front end.

mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "fluctuon",
    version,
    about = "Fluctuator noise spectra, dephasing envelopes, fits and relaxation rates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// RNG seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for Monte-Carlo ensembles.
    #[arg(long, global = true, env = "FLUCTUON_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Spectral density per band with the 1/f reference (CSV).
    Spectrum,
    /// Correlation function per band, optionally with Monte-Carlo (CSV).
    Correlate,
    /// Decay envelopes from one or more methods (CSV).
    Decay,
    /// Monte-Carlo oracle checks against closed forms (JSON).
    Validate,
    /// Fast-fluctuator fit of a dataset (CSV to --out, JSON summary to stdout).
    Fit,
    /// Bloch–Redfield rates of the fast band (JSON).
    BrRates,
}

fn write_to(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.to_owned(),
            source,
        }),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }
    let raw = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => serde_json::from_str("{}").expect("empty config parses"),
    };
    let cfg = raw.resolve(cli.seed)?;
    let output = match cli.command {
        Command::Spectrum => commands::spectrum(&cfg)?,
        Command::Correlate => commands::correlate(&cfg)?,
        Command::Decay => commands::decay(&cfg)?,
        Command::Validate => commands::validate(&cfg)?,
        Command::Fit => commands::fit_dataset(&cfg)?,
        Command::BrRates => commands::br(&cfg)?,
    };
    match output.summary {
        Some(summary) => {
            if let Some(path) = &cli.out {
                write_to(Some(path), &output.body)?;
            }
            write_to(None, &summary)
        }
        None => write_to(cli.out.as_deref(), &output.body),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fluctuon: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
