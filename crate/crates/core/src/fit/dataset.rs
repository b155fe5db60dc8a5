use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::curve::Protocol;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataPoint {
    /// Time in μs.
    pub t: f64,
    pub y: f64,
    pub sigma: Option<f64>,
}

/// Measured decay envelope. Immutable once validated.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentDataset {
    pub label: String,
    pub protocol: Protocol,
    samples: Vec<DataPoint>,
}

impl ExperimentDataset {
    /// Validates strictly increasing finite times, positive uncertainties,
    /// and, when the first sample sits at `t = 0`, an envelope of 1 within
    /// three declared standard deviations (or 0.05 without one).
    pub fn new(
        label: impl Into<String>,
        protocol: Protocol,
        samples: Vec<DataPoint>,
    ) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            if !(s.t.is_finite() && s.t >= 0.0 && s.y.is_finite()) {
                return Err(Error::invalid(format!(
                    "sample {i}: non-finite or negative-time entry {s:?}"
                )));
            }
            if let Some(sigma) = s.sigma {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::invalid(format!(
                        "sample {i}: uncertainty must be positive, got {sigma}"
                    )));
                }
            }
            if i > 0 && s.t <= samples[i - 1].t {
                return Err(Error::invalid(format!(
                    "times must be strictly increasing: t[{}]={} then t[{i}]={}",
                    i - 1,
                    samples[i - 1].t,
                    s.t
                )));
            }
        }
        if samples.iter().any(|s| s.sigma.is_some()) && samples.iter().any(|s| s.sigma.is_none()) {
            return Err(Error::invalid(
                "uncertainty must be given for every sample or for none",
            ));
        }
        if let Some(first) = samples.first().filter(|s| s.t == 0.0) {
            let tol = first.sigma.map_or(0.05, |s| 3.0 * s);
            if (first.y - 1.0).abs() > tol {
                return Err(Error::invalid(format!(
                    "envelope at t=0 is {}, expected 1 within {tol}",
                    first.y
                )));
            }
        }
        Ok(Self {
            label: label.into(),
            protocol,
            samples,
        })
    }

    pub fn samples(&self) -> &[DataPoint] {
        &self.samples
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

/// Reads `t_us,envelope[,sigma]` rows. A leading non-numeric row is taken as
/// the header; `#` lines are comments.
pub fn load_dataset(
    path: impl AsRef<Path>,
    label: &str,
    protocol: Protocol,
) -> Result<ExperimentDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    read_dataset(file, path, label, protocol)
}

pub fn read_dataset<R: Read>(
    reader: R,
    path: &Path,
    label: &str,
    protocol: Protocol,
) -> Result<ExperimentDataset> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: PathBuf::from(path),
        line: line as usize,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut samples = Vec::new();
    let mut width = None;
    for (k, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if k == 0 && record.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            width = Some(record.len());
            continue;
        }
        if !(2..=3).contains(&record.len()) || width.is_some_and(|w| w != record.len()) {
            return Err(parse_err(
                line,
                format!(
                    "expected columns t_us,envelope[,sigma], got {} fields",
                    record.len()
                ),
            ));
        }
        let field = |i: usize, name: &str| -> Result<f64> {
            let raw = &record[i];
            raw.parse::<f64>()
                .map_err(|_| parse_err(line, format!("{name}: cannot parse {raw:?} as a number")))
        };
        samples.push(DataPoint {
            t: field(0, "t_us")?,
            y: field(1, "envelope")?,
            sigma: if record.len() == 3 {
                Some(field(2, "sigma")?)
            } else {
                None
            },
        });
    }
    ExperimentDataset::new(label, protocol, samples)
}

/// Writes the CSV form read by [`load_dataset`]; values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_dataset<W: Write>(dataset: &ExperimentDataset, writer: W) -> std::io::Result<()> {
    let with_sigma = dataset.samples.iter().any(|s| s.sigma.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let header: &[&str] = if with_sigma {
        &["t_us", "envelope", "sigma"]
    } else {
        &["t_us", "envelope"]
    };
    w.write_record(header)?;
    for s in &dataset.samples {
        let mut row = vec![s.t.to_string(), s.y.to_string()];
        if with_sigma {
            row.push(s.sigma.map_or_else(String::new, |x| x.to_string()));
        }
        w.write_record(&row)?;
    }
    w.flush()
}
