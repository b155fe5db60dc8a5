use num_complex::Complex64;

use super::{
    commutator, min_eigenvalue, validate_density, DensityState, Hamiltonian, Mat2, QubitTrajectory,
    POSITIVITY_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::noise::{EffectiveFluctuator, NoiseModel};
use crate::ode::{solve, StepControl};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Environment superoperator `𝓛` applied to `ρ` and to each auxiliary.
pub trait Bath: Sync {
    fn apply(&self, m: &Mat2) -> Mat2;
}

/// `𝓛 = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoBath;

impl Bath for NoBath {
    fn apply(&self, _: &Mat2) -> Mat2 {
        Mat2::zeros()
    }
}

/// `𝓛ρ = Σ LρL† − ½{L†L, ρ}`.
#[derive(Debug, Clone, Default)]
pub struct Lindblad {
    pub jumps: Vec<Mat2>,
}

impl Bath for Lindblad {
    fn apply(&self, m: &Mat2) -> Mat2 {
        self.jumps.iter().fold(Mat2::zeros(), |acc, l| {
            let ll = l.adjoint() * l;
            acc + l * m * l.adjoint() - (ll * m + m * ll) * re(0.5)
        })
    }
}

static NO_BATH: NoBath = NoBath;

#[derive(Clone, Copy)]
pub struct PropagationOptions<'a> {
    pub control: StepControl,
    pub bath: &'a dyn Bath,
}

impl Default for PropagationOptions<'_> {
    fn default() -> Self {
        Self {
            control: StepControl::default(),
            bath: &NO_BATH,
        }
    }
}

fn block(y: &[Complex64], k: usize) -> Mat2 {
    Mat2::from_column_slice(&y[4 * k..4 * k + 4])
}

fn store(dy: &mut [Complex64], k: usize, m: &Mat2) {
    dy[4 * k..4 * k + 4].copy_from_slice(m.as_slice());
}

fn unpack(y: &[Complex64], blocks: usize) -> DensityState {
    let get = |k: usize| {
        if k < blocks {
            block(y, k)
        } else {
            Mat2::zeros()
        }
    };
    DensityState {
        rho: get(0),
        x1: get(1),
        x2: get(2),
        x12: get(3),
    }
}

fn check_rho(rho0: &Mat2) -> Result<()> {
    validate_density(rho0)
}

/// Closed matrix system for two effective fluctuators.
pub fn propagate_two_fluctuator<H>(
    hamiltonian: H,
    fluctuators: [EffectiveFluctuator; 2],
    rho0: &Mat2,
    t_grid: &[f64],
    options: &PropagationOptions,
) -> Result<QubitTrajectory>
where
    H: Fn(f64) -> Hamiltonian,
{
    check_rho(rho0)?;
    let [f1, f2] = fluctuators;
    let (a1, a2) = (
        Complex64::new(f1.amplitude.powi(2), 0.0),
        Complex64::new(f2.amplitude.powi(2), 0.0),
    );
    let (g1, g2) = (f1.rate, f2.rate);
    let bath = options.bath;
    let mut y0 = vec![Complex64::default(); 16];
    y0[..4].copy_from_slice(rho0.as_slice());
    let rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let Hamiltonian { h0, v } = hamiltonian(t);
        let (rho, x1, x2, x12) = (block(y, 0), block(y, 1), block(y, 2), block(y, 3));
        let free = |m: &Mat2| -commutator(&h0, m) * I + bath.apply(m);
        let kick = |m: &Mat2| -commutator(&v, m) * I;
        store(dy, 0, &(free(&rho) + kick(&x1) + kick(&x2)));
        store(
            dy,
            1,
            &(free(&x1) - x1 * re(2.0 * g1) + kick(&rho) * a1 + kick(&x12)),
        );
        store(
            dy,
            2,
            &(free(&x2) - x2 * re(2.0 * g2) + kick(&rho) * a2 + kick(&x12)),
        );
        store(
            dy,
            3,
            &(free(&x12) - x12 * re(2.0 * (g1 + g2)) + kick(&x2) * a1 + kick(&x1) * a2),
        );
    };
    let (ys, _) = solve(rhs, 0.0, &y0, t_grid, &options.control)?;
    Ok(QubitTrajectory {
        method: "two_fluctuator".into(),
        t: t_grid.to_vec(),
        states: ys.iter().map(|y| unpack(y, 4)).collect(),
    })
}

/// Closed matrix system for one effective fluctuator.
pub fn propagate_single_effective<H>(
    hamiltonian: H,
    fluctuator: EffectiveFluctuator,
    rho0: &Mat2,
    t_grid: &[f64],
    options: &PropagationOptions,
) -> Result<QubitTrajectory>
where
    H: Fn(f64) -> Hamiltonian,
{
    check_rho(rho0)?;
    let a = Complex64::new(fluctuator.amplitude.powi(2), 0.0);
    let g = fluctuator.rate;
    let bath = options.bath;
    let mut y0 = vec![Complex64::default(); 8];
    y0[..4].copy_from_slice(rho0.as_slice());
    let rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let Hamiltonian { h0, v } = hamiltonian(t);
        let (rho, x) = (block(y, 0), block(y, 1));
        let free = |m: &Mat2| -commutator(&h0, m) * I + bath.apply(m);
        let kick = |m: &Mat2| -commutator(&v, m) * I;
        store(dy, 0, &(free(&rho) + kick(&x)));
        store(dy, 1, &(free(&x) - x * re(2.0 * g) + kick(&rho) * a));
    };
    let (ys, _) = solve(rhs, 0.0, &y0, t_grid, &options.control)?;
    Ok(QubitTrajectory {
        method: "single_effective".into(),
        t: t_grid.to_vec(),
        states: ys.iter().map(|y| unpack(y, 2)).collect(),
    })
}

/// Eigenvalues `(e₀, e₁)` and projectors of a Hermitian 2×2 matrix.
fn spectral_pair(h: &Mat2) -> (f64, f64, Mat2, Mat2) {
    let (a, d) = (h[(0, 0)].re, h[(1, 1)].re);
    let mean = 0.5 * (a + d);
    let r = (0.5 * (a - d)).hypot(h[(0, 1)].norm());
    let scale = a
        .abs()
        .max(d.abs())
        .max(h[(0, 1)].norm())
        .max(f64::MIN_POSITIVE);
    if r <= 1e-14 * scale {
        return (mean, mean, Mat2::identity(), Mat2::zeros());
    }
    let (lo, hi) = (mean - r, mean + r);
    let id = Mat2::identity();
    let p_hi = (h - id * Complex64::new(lo, 0.0)) / Complex64::new(2.0 * r, 0.0);
    let p_lo = id - p_hi;
    (lo, hi, p_lo, p_hi)
}

/// Gaussian-closure master equation `ρ̇ = −i[H₀,ρ] + 𝓛ρ − [V,[K(t),ρ]]` with
/// `K(t) = ∫₀ᵗ χ(s) e^{−iH₀s} V e^{iH₀s} ds`, for constant `H₀` and `V`.
///
/// `K` is assembled from the eigenprojectors of `H₀` and the two running
/// transforms `∫₀ᵗ χ(s) ds`, `∫₀ᵗ χ(s) e^{iωs} ds`, which ride along in the
/// ODE state.
pub fn propagate_gaussian(
    hamiltonian: &Hamiltonian,
    model: &NoiseModel,
    rho0: &Mat2,
    t_grid: &[f64],
    options: &PropagationOptions,
) -> Result<QubitTrajectory> {
    check_rho(rho0)?;
    if (hamiltonian.h0 - hamiltonian.h0.adjoint()).norm() > 1e-12
        || (hamiltonian.v - hamiltonian.v.adjoint()).norm() > 1e-12
    {
        return Err(Error::invalid("H₀ and V must be Hermitian"));
    }
    let Hamiltonian { h0, v } = *hamiltonian;
    let (e0, e1, p0, p1) = spectral_pair(&h0);
    let omega = e1 - e0;
    let diag = p0 * v * p0 + p1 * v * p1;
    let (up, down) = (p0 * v * p1, p1 * v * p0);
    let bath = options.bath;
    let mut y0 = vec![Complex64::default(); 6];
    y0[..4].copy_from_slice(rho0.as_slice());
    let rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let rho = block(y, 0);
        let (c0, cw) = (y[4], y[5]);
        let k = diag * c0 + up * cw + down * cw.conj();
        let d =
            -commutator(&h0, &rho) * I + bath.apply(&rho) - commutator(&v, &commutator(&k, &rho));
        store(dy, 0, &d);
        let chi = model.correlation(t);
        dy[4] = Complex64::new(chi, 0.0);
        dy[5] = Complex64::from_polar(chi, omega * t);
    };
    let (ys, _) = solve(rhs, 0.0, &y0, t_grid, &options.control)?;
    let trajectory = QubitTrajectory {
        method: "gaussian".into(),
        t: t_grid.to_vec(),
        states: ys.iter().map(|y| unpack(y, 1)).collect(),
    };
    // The second-order closure is not positivity preserving once the noise
    // rivals the level splitting; refuse instead of returning a non-state.
    if let Some((t, lowest)) = trajectory
        .t
        .iter()
        .zip(&trajectory.states)
        .map(|(&t, s)| (t, min_eigenvalue(&s.rho)))
        .find(|&(_, e)| e < -POSITIVITY_TOLERANCE)
    {
        return Err(Error::domain(format!(
            "Gaussian closure left the state space at t={t} (eigenvalue {lowest:.3e}); \
             the noise is too strong for the second-order closure at this level splitting"
        )));
    }
    Ok(trajectory)
}
