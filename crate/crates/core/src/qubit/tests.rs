use num_complex::Complex64;

use super::*;
use crate::curve::{linspace, Protocol};
use crate::dephasing::{gaussian_envelope, ode_dephasing_envelope, phi_fid, DephasingProblem};
use crate::noise::{EffectiveFluctuator, NoiseBand, NoiseModel};
use crate::special::QuadratureSpec;

fn plus() -> Mat2 {
    pure_state(std::f64::consts::FRAC_PI_2, 0.0)
}

fn sample_a() -> NoiseModel {
    NoiseModel::two_band(4.92, 2.72, 5e-7, 0.5, 4.25).unwrap()
}

fn effective(model: &NoiseModel) -> [EffectiveFluctuator; 2] {
    let e = model.effective_fluctuators();
    [e[0], e[1]]
}

fn hygiene(traj: &QubitTrajectory) {
    assert!(
        traj.max_trace_error() <= 1e-9,
        "{} trace {}",
        traj.method,
        traj.max_trace_error()
    );
    assert!(traj.max_hermiticity_error() <= 1e-9, "{} herm", traj.method);
    assert!(
        traj.max_purity() <= 1.0 + 1e-9,
        "{} purity {}",
        traj.method,
        traj.max_purity()
    );
    assert!(
        traj.min_eigenvalue() >= -1e-9,
        "{} eig {}",
        traj.method,
        traj.min_eigenvalue()
    );
}

#[test]
fn hamiltonian_construction() {
    let h = build_hamiltonian(&QubitCoupling::new(1.0, 0.0, 0.0, PerpAxis::X).unwrap()).unwrap();
    assert_eq!(h.v, Mat2::zeros());
    let h = build_hamiltonian(&QubitCoupling::new(1.0, 1.0, 0.0, PerpAxis::Y).unwrap()).unwrap();
    assert_eq!(h.v, sigma_z() * Complex64::new(-0.5, 0.0));
    assert_eq!(commutator(&h.h0, &h.v), Mat2::zeros());
    let h = build_hamiltonian(&QubitCoupling::new(2.0, 0.0, 1.0, PerpAxis::Y).unwrap()).unwrap();
    assert_eq!(h.v[(0, 1)], Complex64::new(0.0, 0.5));
    assert!(QubitCoupling::new(-1.0, 0.0, 0.0, PerpAxis::X).is_err());
    assert!(QubitCoupling::new(1.0, f64::NAN, 0.0, PerpAxis::X).is_err());
}

#[test]
fn flux_qubit_derivatives() {
    let q = FluxQubitParams::new(0.3, 0.4).unwrap();
    assert!((q.splitting() - 0.5).abs() < 1e-15);
    assert!((q.d_splitting_d_epsilon() - 0.6).abs() < 1e-15);
    let h = 1e-6;
    let up = FluxQubitParams::new(0.3 + h, 0.4).unwrap().splitting();
    let down = FluxQubitParams::new(0.3 - h, 0.4).unwrap().splitting();
    assert!(((up - down) / (2.0 * h) - 0.6).abs() < 1e-9);
    let c = q.bias_noise_coupling();
    assert!((c.d_z.powi(2) + c.d_perp.powi(2) - 1.0).abs() < 1e-15);
    assert!(FluxQubitParams::new(0.3, 0.0).is_err());
}

#[test]
fn invalid_initial_state_rejected() {
    let h = build_hamiltonian(&QubitCoupling::new(1.0, 1.0, 0.0, PerpAxis::X).unwrap()).unwrap();
    let bad = Mat2::identity();
    let f = EffectiveFluctuator::new(1.0, 1.0).unwrap();
    let opts = PropagationOptions::default();
    assert!(propagate_single_effective(|_| h, f, &bad, &[1.0], &opts).is_err());
    let negative = Mat2::new(
        Complex64::new(1.5, 0.0),
        Complex64::default(),
        Complex64::default(),
        Complex64::new(-0.5, 0.0),
    );
    assert!(propagate_gaussian(&h, &sample_a(), &negative, &[1.0], &opts).is_err());
}

#[test]
fn unitary_precession_without_noise() {
    let coupling = QubitCoupling::new(2.0, 0.0, 0.0, PerpAxis::X).unwrap();
    let h = build_hamiltonian(&coupling).unwrap();
    let rho0 = pure_state(1.0, 0.3);
    let grid = linspace(0.0, 5.0, 21);
    let opts = PropagationOptions::default();
    let runs = [
        propagate_two_fluctuator(|_| h, effective(&sample_a()), &rho0, &grid, &opts).unwrap(),
        propagate_single_effective(
            |_| h,
            EffectiveFluctuator::new(0.0, 1.0).unwrap(),
            &rho0,
            &grid,
            &opts,
        )
        .unwrap(),
        propagate_gaussian(&h, &sample_a(), &rho0, &grid, &opts).unwrap(),
    ];
    for run in &runs {
        hygiene(run);
        for (t, s) in grid.iter().zip(&run.states) {
            let expected = rho0[(0, 1)] * Complex64::from_polar(1.0, 2.0 * t);
            assert!(
                (s.rho[(0, 1)] - expected).norm() < 1e-9,
                "{} t={t}",
                run.method
            );
            assert!(
                (s.purity() - 1.0).abs() < 1e-9,
                "{} {}",
                run.method,
                s.purity() - 1.0
            );
        }
    }
}

#[test]
fn pure_dephasing_matches_scalar_ode() {
    let model = sample_a();
    let omega = 1.7;
    let h = build_hamiltonian(&QubitCoupling::new(omega, 1.0, 0.0, PerpAxis::X).unwrap()).unwrap();
    let grid = linspace(0.0, 3.0, 31);
    let traj = propagate_two_fluctuator(
        |_| h,
        effective(&model),
        &plus(),
        &grid,
        &PropagationOptions::default(),
    )
    .unwrap();
    hygiene(&traj);
    let problem = DephasingProblem::new(model, 1.0, Protocol::Fid).unwrap();
    let scalar = ode_dephasing_envelope(&problem, |_| omega, &grid, &Default::default()).unwrap();
    for (k, s) in traj.states.iter().enumerate() {
        assert!(
            (s.rho[(0, 1)] - 0.5 * scalar.curve.values[k]).norm() < 1e-8,
            "t={}",
            grid[k]
        );
        assert!((s.rho[(0, 0)].re - 0.5).abs() < 1e-12 && (s.rho[(1, 1)].re - 0.5).abs() < 1e-12);
    }
}

#[test]
fn identical_fluctuators_are_symmetric() {
    let f = EffectiveFluctuator::new(1.3, 0.7).unwrap();
    let h = build_hamiltonian(&QubitCoupling::new(1.0, 0.8, 0.5, PerpAxis::X).unwrap()).unwrap();
    let traj = propagate_two_fluctuator(
        |_| h,
        [f, f],
        &plus(),
        &linspace(0.0, 2.0, 5),
        &PropagationOptions::default(),
    )
    .unwrap();
    for s in &traj.states {
        assert!((s.x1 - s.x2).norm() < 1e-14);
    }
}

#[test]
fn reduction_chain() {
    let h = build_hamiltonian(&QubitCoupling::new(1.2, 0.9, 0.6, PerpAxis::X).unwrap()).unwrap();
    let grid = linspace(0.0, 3.0, 13);
    let opts = PropagationOptions::default();
    let f = EffectiveFluctuator::new(2.0, 0.4).unwrap();
    let off = EffectiveFluctuator::new(0.0, 1.5).unwrap();
    let two = propagate_two_fluctuator(|_| h, [f, off], &plus(), &grid, &opts).unwrap();
    let one = propagate_single_effective(|_| h, f, &plus(), &grid, &opts).unwrap();
    for (a, b) in two.states.iter().zip(&one.states) {
        assert!((a.rho - b.rho).norm() < 1e-10);
    }
    let silent = propagate_single_effective(|_| h, off, &plus(), &grid, &opts).unwrap();
    let free = propagate_two_fluctuator(|_| h, [off, off], &plus(), &grid, &opts).unwrap();
    for (a, b) in silent.states.iter().zip(&free.states) {
        assert!((a.rho - b.rho).norm() < 1e-10);
    }
    hygiene(&two);
}

#[test]
fn single_fluctuator_pure_dephasing() {
    let (gamma, a, d) = (0.3, 2.0, 0.7);
    let h = build_hamiltonian(&QubitCoupling::new(0.0, d, 0.0, PerpAxis::X).unwrap()).unwrap();
    let grid = linspace(0.0, 6.0, 25);
    let traj = propagate_single_effective(
        |_| h,
        EffectiveFluctuator::new(a, gamma).unwrap(),
        &plus(),
        &grid,
        &PropagationOptions::default(),
    )
    .unwrap();
    for (t, s) in grid.iter().zip(&traj.states) {
        let expected = phi_fid(gamma, d * a, *t).unwrap();
        assert!(
            (s.rho[(0, 1)].norm() / 0.5 - expected.abs()).abs() < 1e-8,
            "t={t}"
        );
    }
}

#[test]
fn gaussian_closure_pure_dephasing() {
    let model = sample_a();
    let h = build_hamiltonian(&QubitCoupling::new(0.9, 1.0, 0.0, PerpAxis::X).unwrap()).unwrap();
    let grid = linspace(0.0, 1.5, 16);
    let traj =
        propagate_gaussian(&h, &model, &plus(), &grid, &PropagationOptions::default()).unwrap();
    hygiene(&traj);
    let exact = gaussian_envelope(
        &DephasingProblem::new(model.clone(), 1.0, Protocol::Fid).unwrap(),
        &grid,
    )
    .unwrap();
    for (k, s) in traj.states.iter().enumerate() {
        assert!(
            (s.rho[(0, 1)].norm() / 0.5 - exact.values[k].re).abs() < 1e-6,
            "t={}",
            grid[k]
        );
    }
    // short times: 1 − |ρ₀₁|/|ρ₀₁(0)| ≈ ½D²χ(0)t²
    let t = 0.01 / model.correlation(0.0).sqrt();
    let short =
        propagate_gaussian(&h, &model, &plus(), &[t], &PropagationOptions::default()).unwrap();
    let drop = 1.0 - short.states[0].rho[(0, 1)].norm() / 0.5;
    assert!((drop / (0.5 * model.correlation(0.0) * t * t) - 1.0).abs() < 1e-3);
}

#[test]
fn purity_falls_under_pure_dephasing() {
    let model = sample_a();
    let h = build_hamiltonian(&QubitCoupling::new(1.0, 1.0, 0.0, PerpAxis::X).unwrap()).unwrap();
    let grid = linspace(0.0, 1.0, 21);
    let opts = PropagationOptions::default();
    for traj in [
        propagate_two_fluctuator(|_| h, effective(&model), &plus(), &grid, &opts).unwrap(),
        propagate_gaussian(&h, &model, &plus(), &grid, &opts).unwrap(),
    ] {
        // first decade of decay: |ρ₀₁| above a tenth of its start
        let p: Vec<f64> = traj
            .states
            .iter()
            .take_while(|s| s.rho[(0, 1)].norm() >= 0.05)
            .map(DensityState::purity)
            .collect();
        assert!(p.len() > 3);
        assert!(p.windows(2).all(|w| w[1] < w[0]), "{}", traj.method);
    }
}

#[test]
fn transverse_noise_hygiene() {
    let opts = PropagationOptions::default();
    let grid = linspace(0.0, 4.0, 21);
    for model in [
        sample_a(),
        NoiseModel::two_band(21.0, 12.45, 5e-7, 0.5, 30.0).unwrap(),
    ] {
        let h =
            build_hamiltonian(&QubitCoupling::new(3.0, 0.6, 0.8, PerpAxis::Y).unwrap()).unwrap();
        let rho0 = pure_state(0.7, 1.1);
        hygiene(&propagate_two_fluctuator(|_| h, effective(&model), &rho0, &grid, &opts).unwrap());
        hygiene(
            &propagate_single_effective(|_| h, effective(&model)[1], &rho0, &grid, &opts).unwrap(),
        );
        hygiene(&propagate_gaussian(&h, &model, &rho0, &grid, &opts).unwrap());
    }
}

#[test]
fn lindblad_stub_damps_population() {
    let kappa: f64 = 0.5;
    let lower = Mat2::new(
        Complex64::default(),
        Complex64::new(kappa.sqrt(), 0.0),
        Complex64::default(),
        Complex64::default(),
    );
    let bath = Lindblad { jumps: vec![lower] };
    let opts = PropagationOptions {
        bath: &bath,
        ..Default::default()
    };
    let h = build_hamiltonian(&QubitCoupling::new(1.0, 0.0, 0.0, PerpAxis::X).unwrap()).unwrap();
    let excited = pure_state(std::f64::consts::PI, 0.0);
    let traj = propagate_single_effective(
        |_| h,
        EffectiveFluctuator::new(0.0, 1.0).unwrap(),
        &excited,
        &[0.0, 2.0],
        &opts,
    )
    .unwrap();
    assert!((traj.states[1].rho[(1, 1)].re - (-kappa * 2.0).exp()).abs() < 1e-9);
    hygiene(&traj);
    assert_eq!(NoBath.apply(&plus()), Mat2::zeros());
}

#[test]
fn time_dependent_splitting() {
    // pure dephasing with Ω(t): the phase is ∫Ω, the modulus is untouched
    let model = sample_a();
    let grid = linspace(0.0, 2.0, 11);
    let ham = |t: f64| {
        build_hamiltonian(&QubitCoupling::new(1.0 + t, 1.0, 0.0, PerpAxis::X).unwrap()).unwrap()
    };
    let traj = propagate_two_fluctuator(
        ham,
        effective(&model),
        &plus(),
        &grid,
        &PropagationOptions::default(),
    )
    .unwrap();
    let problem = DephasingProblem::new(model, 1.0, Protocol::Fid).unwrap();
    let scalar = ode_dephasing_envelope(&problem, |t| 1.0 + t, &grid, &Default::default()).unwrap();
    for (k, s) in traj.states.iter().enumerate() {
        assert!((s.rho[(0, 1)] - 0.5 * scalar.curve.values[k]).norm() < 1e-8);
    }
}

#[test]
fn bloch_redfield_rates() {
    let band = NoiseBand::new(2, 1.0, 0.5, 4.25).unwrap();
    let dephase = QubitCoupling::new(10.0, 1.0, 0.0, PerpAxis::X).unwrap();
    let r = br_rates(&dephase, &band).unwrap();
    assert!((r.gamma_phi - 0.558_823_529_411_764_7).abs() < 1e-12);
    assert_eq!(r.gamma1, 0.0);
    assert_eq!(r.gamma2, r.gamma_phi);
    let relax = QubitCoupling::new(10.0, 0.0, 1.0, PerpAxis::X).unwrap();
    let r = br_rates(&relax, &band).unwrap();
    assert!((r.gamma1 - 0.021_229_066_958_993_52).abs() < 1e-12);
    assert!((r.gamma2 - 0.5 * r.gamma1).abs() < 1e-15);

    let spec = QuadratureSpec::default();
    for coupling in [
        dephase,
        relax,
        QubitCoupling::new(3.0, 0.7, 1.4, PerpAxis::Y).unwrap(),
    ] {
        let closed = br_rates(&coupling, &band).unwrap();
        let quad =
            br_partial_rates_quadrature(&coupling, &band, BrKernel::Normalized, &spec).unwrap();
        assert!((quad.gamma_phi - closed.gamma_phi).abs() <= 1e-6 * closed.gamma_phi.max(1e-300));
        assert!((quad.gamma1 - closed.gamma1).abs() <= 1e-6 * closed.gamma1.max(1e-300));
        let printed =
            br_partial_rates_quadrature(&coupling, &band, BrKernel::AsPrinted, &spec).unwrap();
        assert!((2.0 * printed.gamma1 - closed.gamma1).abs() <= 1e-6 * closed.gamma1.max(1e-300));
        assert!(
            (printed.gamma_phi - closed.gamma_phi).abs() <= 1e-6 * closed.gamma_phi.max(1e-300)
        );
    }
    let far = QubitCoupling::new(1e8, 0.0, 1.0, PerpAxis::X).unwrap();
    assert!(br_rates(&far, &band).unwrap().gamma1 < 1e-15);
    let narrow = NoiseBand::new(2, 1.0, 0.5, 0.5 * (1.0 + 1e-9)).unwrap();
    let r = br_rates(&dephase, &narrow).unwrap();
    assert!((r.gamma_phi - 1.0 / (2.0 * 0.5)).abs() < 1e-8);
    assert!(br_rates(&dephase, &NoiseBand::new(1, 1.0, 0.1, 0.5).unwrap()).is_err());
}

#[test]
fn validity_flag_uses_correlation_time() {
    let band = NoiseBand::new(2, 0.1, 0.5, 4.25).unwrap();
    let r = br_rates(
        &QubitCoupling::new(10.0, 1.0, 1.0, PerpAxis::X).unwrap(),
        &band,
    )
    .unwrap();
    assert!((r.tau - band.correlation_time()).abs() < 1e-15);
    assert!(r.valid);
    let strong = br_rates(
        &QubitCoupling::new(10.0, 5.0, 1.0, PerpAxis::X).unwrap(),
        &NoiseBand::new(2, 2.72, 0.5, 4.25).unwrap(),
    )
    .unwrap();
    assert!(!strong.valid);
}

#[test]
fn trajectory_csv() {
    let h = build_hamiltonian(&QubitCoupling::new(1.0, 0.0, 0.0, PerpAxis::X).unwrap()).unwrap();
    let traj = propagate_gaussian(
        &h,
        &sample_a(),
        &plus(),
        &[0.0, 1.0],
        &PropagationOptions::default(),
    )
    .unwrap();
    let mut buf = Vec::new();
    traj.write_csv(&mut buf, None).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.contains("t,rho00_re,rho00_im,rho01_re,rho01_im,rho11_re,rho11_im,purity"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn gaussian_closure_relaxes_at_redfield_rates() {
    // weak transverse noise: late-time decay rates approach Γ₁ and Γ₂
    let band = NoiseBand::new(2, 0.3, 0.5, 4.25).unwrap();
    let model = NoiseModel::new(vec![band]).unwrap();
    let coupling = QubitCoupling::new(10.0, 0.0, 1.0, PerpAxis::X).unwrap();
    let ham = build_hamiltonian(&coupling).unwrap();
    let rates = br_rates(&coupling, &band).unwrap();
    let grid = linspace(0.0, 40.0, 5);
    let excited = pure_state(std::f64::consts::PI, 0.0);
    let traj = propagate_gaussian(
        &ham,
        &model,
        &excited,
        &grid,
        &PropagationOptions::default(),
    )
    .unwrap();
    let p = |j: usize| traj.states[j].rho[(1, 1)].re - 0.5;
    let gamma1 = (p(2) / p(4)).ln() / 20.0;
    assert!(
        (gamma1 / rates.gamma1 - 1.0).abs() < 1e-3,
        "{gamma1} vs {}",
        rates.gamma1
    );
    let traj =
        propagate_gaussian(&ham, &model, &plus(), &grid, &PropagationOptions::default()).unwrap();
    let c = |j: usize| traj.states[j].rho[(0, 1)].norm();
    let gamma2 = (c(2) / c(4)).ln() / 20.0;
    assert!(
        (gamma2 / rates.gamma2 - 1.0).abs() < 1e-2,
        "{gamma2} vs {}",
        rates.gamma2
    );
}

#[test]
fn gaussian_closure_refuses_unphysical_states() {
    // transverse 1/f noise of amplitude 21 against a splitting of 10
    let model = NoiseModel::two_band(21.0, 12.45, 5e-7, 0.5, 5e4).unwrap();
    let ham = build_hamiltonian(&QubitCoupling::new(10.0, 0.0, 1.0, PerpAxis::X).unwrap()).unwrap();
    let grid = linspace(0.0, 0.8, 31);
    let err = propagate_gaussian(&ham, &model, &plus(), &grid, &PropagationOptions::default())
        .unwrap_err();
    assert!(err.to_string().contains("left the state space"), "{err}");
}
