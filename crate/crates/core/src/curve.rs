//! Time-resolved complex envelopes and their CSV form.

use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Free induction decay or single spin echo (instantaneous π-pulse at `t/2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Fid,
    Echo,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Fid => "fid",
            Protocol::Echo => "echo",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    pub t: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Present for Monte-Carlo estimates.
    pub stderr: Option<Vec<f64>>,
    pub method: String,
    pub params: Vec<(String, String)>,
}

impl DecayCurve {
    pub fn new(method: impl Into<String>, t: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if t.len() != values.len() {
            return Err(Error::invalid(format!(
                "curve has {} times but {} values",
                t.len(),
                values.len()
            )));
        }
        Ok(Self {
            t,
            values,
            stderr: None,
            method: method.into(),
            params: Vec::new(),
        })
    }

    pub fn from_real(
        method: impl Into<String>,
        t: Vec<f64>,
        values: impl IntoIterator<Item = f64>,
    ) -> Result<Self> {
        let values = values.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        Self::new(method, t, values)
    }

    pub fn with_stderr(mut self, stderr: Vec<f64>) -> Result<Self> {
        if stderr.len() != self.t.len() {
            return Err(Error::invalid("stderr length differs from time grid"));
        }
        self.stderr = Some(stderr);
        Ok(self)
    }

    pub fn with_param(mut self, key: impl Into<String>, value: impl fmt::Display) -> Self {
        self.params.push((key.into(), value.to_string()));
        self
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    /// Largest `|a(t) − b(t)|` over a shared grid.
    pub fn max_abs_deviation(&self, other: &DecayCurve) -> Result<f64> {
        if self.t != other.t {
            return Err(Error::invalid("curves are on different time grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn write_csv<W: Write>(&self, mut w: W, extra_header: Option<&str>) -> std::io::Result<()> {
        if let Some(line) = extra_header {
            writeln!(w, "# {line}")?;
        }
        write!(w, "# method={}", self.method)?;
        for (k, v) in &self.params {
            write!(w, " {k}={v}")?;
        }
        writeln!(w)?;
        match &self.stderr {
            Some(se) => {
                writeln!(w, "t,re,im,abs,stderr")?;
                for ((t, z), s) in self.t.iter().zip(&self.values).zip(se) {
                    writeln!(
                        w,
                        "{t:.16e},{:.16e},{:.16e},{:.16e},{s:.16e}",
                        z.re,
                        z.im,
                        z.norm()
                    )?;
                }
            }
            None => {
                writeln!(w, "t,re,im,abs")?;
                for (t, z) in self.t.iter().zip(&self.values) {
                    writeln!(w, "{t:.16e},{:.16e},{:.16e},{:.16e}", z.re, z.im, z.norm())?;
                }
            }
        }
        Ok(())
    }
}

/// `n` evenly spaced points on `[a, b]`, endpoints included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `n` log-spaced points on `[a, b]`, both positive.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n)
        .into_iter()
        .map(f64::exp)
        .collect()
}
