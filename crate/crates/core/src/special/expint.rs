//! Exponential integrals `E_n(z) = ∫₁^∞ e^{-zt} t^{-n} dt` for real `z ≥ 0`.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 500;

/// Arguments above this return zero; `e^{-700}` is at the edge of the
/// double range and `E_n(z) < e^{-z}/z` there.
pub const UNDERFLOW_ARG: f64 = 700.0;

/// `E_n(z)` for integer order `n ≥ 1`.
///
/// Power series below `z = 1`, modified Lentz continued fraction above.
pub fn exp_int_en(n: u32, z: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("exponential integral order must be >= 1"));
    }
    if !(z >= 0.0) {
        return Err(Error::domain(format!("E_{n}({z}): argument must be >= 0")));
    }
    if z == 0.0 {
        if n == 1 {
            return Err(Error::domain("E_1 diverges at 0"));
        }
        return Ok(1.0 / f64::from(n - 1));
    }
    if z > UNDERFLOW_ARG {
        return Ok(0.0);
    }
    if z >= 1.0 {
        Ok(continued_fraction(n, z))
    } else {
        Ok(series(n, z, 0))
    }
}

/// `E_m(z)` with its constant and linear Taylor terms removed:
/// `E_m(z) − 1/(m−1) + z/(m−2)`, for `m ≥ 3`.
///
/// The Gaussian phase variances are built from differences
/// `E_m(x t)/x^{m−1}` that cancel catastrophically when `x t ≪ 1`; this
/// form carries the same information without the cancellation.
pub fn exp_int_en_reduced(m: u32, z: f64) -> Result<f64> {
    if m < 3 {
        return Err(Error::domain(
            "reduced exponential integral needs order >= 3",
        ));
    }
    if !(z >= 0.0) {
        return Err(Error::domain(format!(
            "reduced E_{m}({z}): argument must be >= 0"
        )));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    let mf = f64::from(m);
    if z >= 1.0 {
        let e = if z > UNDERFLOW_ARG {
            0.0
        } else {
            continued_fraction(m, z)
        };
        Ok(e - 1.0 / (mf - 1.0) + z / (mf - 2.0))
    } else {
        Ok(series(m, z, 2))
    }
}

/// `E_m(z)` for any integer order, including `m ≤ 0` where
/// `E_0(z) = e^{-z}/z` and `E_{m}(z) = (e^{-z} − m E_{m+1}(z))/z`.
///
/// These appear as successive `τ`-derivatives of the correlation functions.
pub fn exp_int_en_any(m: i32, z: f64) -> Result<f64> {
    if m >= 1 {
        return exp_int_en(m as u32, z);
    }
    if !(z > 0.0) {
        return Err(Error::domain(format!("E_{m}({z}) requires z > 0")));
    }
    if z > UNDERFLOW_ARG {
        return Ok(0.0);
    }
    let ez = (-z).exp();
    let mut e = exp_int_en(1, z)?;
    let mut k = 0;
    while k >= m {
        e = (ez - f64::from(k) * e) / z;
        k -= 1;
    }
    Ok(e)
}

fn continued_fraction(n: u32, z: f64) -> f64 {
    let nm1 = f64::from(n - 1);
    let mut b = z + f64::from(n);
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let fi = i as f64;
        let an = -fi * (nm1 + fi);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h * (-z).exp()
}

/// Series for `E_n(z)`, `0 < z < 1`, dropping the first `skip` polynomial
/// terms (`skip ∈ {0, 2}`).
fn series(n: u32, z: f64, skip: u32) -> f64 {
    let nm1 = n - 1;
    let log_term = |fact: f64| {
        let psi = -EULER_GAMMA + (1..=nm1).map(|k| 1.0 / f64::from(k)).sum::<f64>();
        fact * (-z.ln() + psi)
    };
    let mut ans = if skip > 0 {
        0.0
    } else if nm1 != 0 {
        1.0 / f64::from(nm1)
    } else {
        -z.ln() - EULER_GAMMA
    };
    let mut fact = 1.0;
    for i in 1..=MAX_ITER as u32 {
        fact *= -z / f64::from(i);
        if i < skip {
            continue;
        }
        let del = if i != nm1 {
            -fact / (f64::from(i) - f64::from(nm1))
        } else {
            log_term(fact)
        };
        ans += del;
        if i > nm1 && del.abs() < ans.abs() * EPS {
            break;
        }
    }
    ans
}
