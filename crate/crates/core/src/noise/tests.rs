use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::special::{integrate, integrate_panels, QuadratureSpec};

fn slow() -> NoiseBand {
    NoiseBand::new(1, 1.0, 5e-7, 0.5).unwrap()
}

fn fast() -> NoiseBand {
    NoiseBand::new(2, 1.0, 0.5, 4.25).unwrap()
}

fn tight() -> QuadratureSpec {
    QuadratureSpec::new(1e-15, 1e-12, 5000).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `∫ P_n(γ) f(γ) dγ` in `ln γ`, written out from the density definition.
fn rate_oracle(band: &NoiseBand, f: impl Fn(f64) -> f64) -> f64 {
    let a = band.normalization_constant();
    let n = band.n() as i32;
    let (l0, l1) = (band.gamma_lo().ln(), band.gamma_hi().ln());
    let pieces = 40;
    let breaks: Vec<f64> = (0..=pieces)
        .map(|i| l0 + (l1 - l0) * i as f64 / pieces as f64)
        .collect();
    integrate_panels(
        |u| {
            let g = u.exp();
            a * g.powi(1 - n) * f(g)
        },
        &breaks,
        &tight(),
    )
    .unwrap()
}

#[test]
fn normalization_constants() {
    assert!(rel(slow().normalization_constant(), 0.072_382_413_650_541_97) < 1e-14);
    assert!(rel(fast().normalization_constant(), 0.566_666_666_666_666_7) < 1e-14);
    for band in [
        slow(),
        fast(),
        NoiseBand::new(3, 1.0, 0.3, 2.0).unwrap(),
        NoiseBand::new(5, 2.0, 0.1, 7.0).unwrap(),
    ] {
        let total = rate_oracle(&band, |_| 1.0);
        assert!((total - 1.0).abs() < 1e-10, "n={} total={total}", band.n());
    }
}

#[test]
fn degenerate_window_rejected() {
    assert!(NoiseBand::new(2, 1.0, 0.5, 0.5).is_err());
    assert!(NoiseBand::new(2, 1.0, 0.6, 0.5).is_err());
    assert!(NoiseBand::new(0, 1.0, 0.1, 0.5).is_err());
    assert!(NoiseBand::new(1, -1.0, 0.1, 0.5).is_err());
    // narrow but valid window keeps a finite normalization
    let narrow = NoiseBand::new(2, 1.0, 0.5 * (1.0 - 1e-9), 0.5).unwrap();
    assert!(narrow.normalization_constant().is_finite());
    assert!((rate_oracle(&narrow, |_| 1.0) - 1.0).abs() < 1e-6);
}

#[test]
fn correlation_examples() {
    assert_eq!(slow().correlation(0.0), 1.0);
    assert_eq!(fast().with_sigma(3.0).unwrap().correlation(0.0), 9.0);
    // mpmath quadrature of ∫P₁(γ) e^{-2γ} dγ
    assert!((slow().correlation(1.0) - 0.942_340_270_672_220_3).abs() < 1e-8);
    let oracle = rate_oracle(&slow(), |g| (-2.0 * g).exp());
    assert!((slow().correlation(1.0) - oracle).abs() < 1e-8);
    assert!(fast().correlation(100.0) < 1e-10);
    assert!(fast().correlation(100.0) >= 0.0);
}

#[test]
fn correlation_matches_rate_oracle_on_grid() {
    for band in [slow(), fast(), NoiseBand::new(3, 1.5, 0.3, 2.0).unwrap()] {
        for &tau in &[1e-9, 1e-3, 0.1, 0.7, 2.0, 15.0] {
            let oracle = rate_oracle(&band, |g| (-2.0 * g * tau).exp()) * band.sigma().powi(2);
            assert!(
                (band.correlation(tau) - oracle).abs() < 1e-10 * band.sigma().powi(2),
                "n={} tau={tau}",
                band.n()
            );
        }
    }
}

#[test]
fn correlation_total() {
    let single = NoiseModel::new(vec![fast()]).unwrap();
    assert_eq!(single.correlation(0.3), fast().correlation(0.3));
    let two = NoiseModel::two_band(1.0, 1.0, 5e-7, 0.5, 4.25).unwrap();
    assert_eq!(two.correlation(0.0), 2.0);
    let sample_a = NoiseModel::two_band(4.92, 2.72, 5e-7, 0.5, 4.25).unwrap();
    assert!((sample_a.correlation(0.5) - 26.165_247_777_685_674).abs() < 1e-8);
}

#[test]
fn continuity_is_optional() {
    let gap = vec![slow(), NoiseBand::new(2, 1.0, 0.6, 4.25).unwrap()];
    assert!(NoiseModel::continuous(gap.clone()).is_err());
    assert!(NoiseModel::new(gap).is_ok());
    assert!(NoiseModel::new(vec![]).is_err());
}

#[test]
fn one_over_f_reference_point() {
    // 2γ_m = 1 s⁻¹, 2γ_c = 1 μs⁻¹, ω = 2π·10³ s⁻¹ expressed in rad·μs⁻¹
    let band = slow();
    let omega = 2.0 * PI * 1e3 * 1e-6;
    let s = band.spectral_density(omega);
    assert!(rel(s, 5.736_386_117_068_145) < 1e-10, "S1 = {s} μs");
    let plateau = 1.0 / (2.0 * (0.5f64 / 5e-7).ln()) / omega;
    assert!(rel(s, plateau) < 0.01);
}

#[test]
fn lorentzian_tail_asymptote() {
    let band = fast();
    let omega = 1e3 * 4.25;
    let (gc, g0) = (0.5, 4.25);
    let asym = 2.0 * gc / (PI * (1.0 - gc / g0)) * (g0 / gc).ln() / (omega * omega);
    assert!(rel(band.spectral_density(omega), asym) < 0.01);
}

#[test]
fn zero_frequency_limits_are_continuous() {
    for band in [
        slow(),
        fast(),
        NoiseBand::new(3, 1.0, 0.3, 2.0).unwrap(),
        NoiseBand::new(4, 1.0, 0.3, 2.0).unwrap(),
    ] {
        let at_zero = band.spectral_density(0.0);
        let near = band.spectral_density(1e-7 * band.gamma_lo());
        assert!(rel(near, at_zero) < 1e-9, "n={}", band.n());
    }
    let gc = 0.5;
    let g0 = 4.25;
    let expected =
        fast().normalization_constant() / PI * (1.0 / (4.0 * gc * gc) - 1.0 / (4.0 * g0 * g0));
    assert!(rel(fast().spectral_density(0.0), expected) < 1e-14);
}

#[test]
fn spectral_weight_recovers_variance() {
    for band in [
        slow(),
        fast(),
        slow().with_sigma(4.92).unwrap(),
        NoiseBand::new(3, 1.0, 0.3, 2.0).unwrap(),
    ] {
        let weight = band
            .spectral_weight(&QuadratureSpec::new(1e-14, 1e-10, 4000).unwrap())
            .unwrap();
        assert!(
            rel(weight, band.sigma().powi(2)) < 1e-4,
            "n={} weight={weight}",
            band.n()
        );
    }
}

#[test]
fn general_order_spectrum_matches_lorentzian_average() {
    for n in 3..=6 {
        let band = NoiseBand::new(n, 1.3, 0.5, 2.0).unwrap();
        for &omega in &[0.0, 0.05, 0.3, 1.0, 2.9, 7.0, 150.0] {
            let oracle =
                rate_oracle(&band, |g| 2.0 * g / (4.0 * g * g + omega * omega)) * 1.69 / PI;
            assert!(
                rel(band.spectral_density(omega), oracle) < 1e-10,
                "n={n} omega={omega}"
            );
        }
    }
}

#[test]
fn closed_forms_match_cosine_transform() {
    let spec = QuadratureSpec::new(1e-13, 1e-10, 2000).unwrap();
    for band in [slow(), fast()] {
        let lo = 1e-4 * band.gamma_lo();
        let hi = 1e3 * band.gamma_hi();
        let points = 15;
        for i in 0..points {
            let omega = lo * (hi / lo).powf(i as f64 / (points - 1) as f64);
            let closed = band.spectral_density(omega);
            let quad = band.spectral_density_quadrature(omega, &spec).unwrap();
            assert!(
                rel(quad, closed) < 1e-4,
                "n={} omega={omega:e}: {quad} vs {closed}",
                band.n()
            );
        }
        let at_zero = band.spectral_density_quadrature(0.0, &spec).unwrap();
        assert!(rel(at_zero, band.spectral_density(0.0)) < 1e-4);
    }
    let fast_quad = fast().spectral_density_quadrature(1.0, &spec).unwrap();
    assert!(rel(fast_quad, fast().spectral_density(1.0)) < 1e-4);
}

#[test]
fn cosine_transform_scales_with_sigma_squared() {
    let spec = QuadratureSpec::new(1e-13, 1e-10, 2000).unwrap();
    let base = fast().spectral_density_quadrature(0.8, &spec).unwrap();
    let doubled = fast()
        .with_sigma(2.0)
        .unwrap()
        .spectral_density_quadrature(0.8, &spec)
        .unwrap();
    assert!(rel(doubled, 4.0 * base) < 1e-12);
}

#[test]
fn spectral_ratio_orders_of_magnitude() {
    let model = NoiseModel::two_band(1.0, 1.0, 5e-7, 0.5, 4.25).unwrap();
    let at_zero = model.spectral_ratio(0.0).unwrap();
    assert!(rel(at_zero, 7.720_440_091_067_185e-6) < 1e-9);
    assert!(at_zero > 1e-6 && at_zero < 1e-4);
    let at_cut = model.spectral_ratio(1.0).unwrap();
    assert!(rel(at_cut, 6.772_228_842_768_24) < 1e-9);
    assert!(at_cut > 1.0 && at_cut < 100.0);

    let boosted = NoiseModel::two_band(1.0, 3.0, 5e-7, 0.5, 4.25).unwrap();
    for &w in &[0.0, 1e-5, 0.3, 1.0, 20.0] {
        assert!(
            rel(
                boosted.spectral_ratio(w).unwrap(),
                9.0 * model.spectral_ratio(w).unwrap()
            ) < 1e-12
        );
    }
    assert!(NoiseModel::new(vec![slow()])
        .unwrap()
        .spectral_ratio(1.0)
        .is_err());
}

#[test]
fn correlation_times() {
    let tau1 = slow().correlation_time();
    // ≈ 0.072 s, in μs
    assert!(rel(tau1, 0.072_382_341_268_128_32e6) < 1e-9);
    let wide = NoiseBand::new(2, 1.0, 0.5, 1e6).unwrap();
    assert!((wide.correlation_time() - 0.5).abs() < 0.05);
    assert!(rel(wide.correlation_time(), 0.500_000_25) < 1e-9);
    for band in [
        fast(),
        NoiseBand::new(3, 2.0, 0.3, 2.0).unwrap(),
        NoiseBand::new(1, 1.0, 0.01, 3.0).unwrap(),
    ] {
        let breaks: Vec<f64> = std::iter::once(0.0)
            .chain((0..40).map(|k| 1e-3 * 1.5f64.powi(k)))
            .collect();
        let mut area = integrate_panels(|t| band.correlation(t), &breaks, &tight()).unwrap();
        let last = *breaks.last().unwrap();
        area += integrate(|t| band.correlation(t), last, last * 1e3, &tight()).unwrap();
        let tau = area / band.correlation(0.0);
        assert!(
            rel(band.correlation_time(), tau) < 1e-6,
            "n={} {} vs {tau}",
            band.n(),
            band.correlation_time()
        );
    }
}

#[test]
fn effective_fluctuators() {
    let e1 = slow().effective_fluctuator();
    assert!(rel(e1.rate, 0.036_191_170_634_064_16) < 1e-12);
    assert_eq!(e1.amplitude, 1.0);
    let e2 = fast().effective_fluctuator();
    assert!(rel(e2.rate, 1.212_704_159_314_553_4) < 1e-12);
    let scaled = fast().with_sigma(2.72).unwrap().effective_fluctuator();
    assert_eq!(scaled.amplitude, 2.72);
    assert!(
        (scaled.correlation(0.0) - fast().with_sigma(2.72).unwrap().correlation(0.0)).abs() < 1e-15
    );
}

/// `−½ d ln χ/dτ` at `0⁺` by one-sided differences with Richardson extrapolation.
fn log_slope_at_zero(band: &NoiseBand) -> f64 {
    let chi0 = band.correlation(0.0);
    let h0 = 2e-3 / (2.0 * band.gamma_hi());
    let d = |h: f64| {
        // second-order one-sided stencil
        (-3.0 * chi0 + 4.0 * band.correlation(h) - band.correlation(2.0 * h)) / (2.0 * h)
    };
    let (d1, d2) = (d(h0), d(h0 / 2.0));
    let extrapolated = (4.0 * d2 - d1) / 3.0;
    -0.5 * extrapolated / chi0
}

#[test]
fn effective_rate_is_log_slope() {
    for band in [slow(), fast(), NoiseBand::new(3, 1.0, 0.3, 2.0).unwrap()] {
        let numeric = log_slope_at_zero(&band);
        assert!(
            rel(band.effective_fluctuator().rate, numeric) < 1e-6,
            "n={} {numeric}",
            band.n()
        );
    }
}

#[test]
fn plateau_law_interior() {
    let band = slow();
    let a = 1.0 / (2.0 * (0.5f64 / 5e-7).ln());
    let (b, c): (f64, f64) = (1e-6, 1.0);
    // the ±5% band holds once ω is a factor 20 inside each cutoff
    let (lo, hi) = (20.0 * b, c / 20.0);
    for i in 0..=40 {
        let omega = lo * (hi / lo).powf(i as f64 / 40.0);
        let dev = (band.spectral_density(omega) * omega / a - 1.0).abs();
        assert!(dev <= 0.05, "omega={omega:e} dev={dev}");
    }
    // at exactly 10× inside the cutoffs the ratio is (2/π)·atan(10) ≈ 0.9366
    let edge = band.spectral_density(10.0 * b) * 10.0 * b / a;
    assert!((edge - 2.0 / PI * (10f64.atan() - 1e-5f64.atan())).abs() < 1e-12);
}

#[test]
fn serde_round_trip_and_units() {
    let json = r#"{"n":1,"sigma":1.0,"gamma_lo":0.5,"gamma_hi":500000.0,"units":"per_s"}"#;
    let band: NoiseBand = serde_json::from_str(json).unwrap();
    assert!(rel(band.gamma_lo(), 5e-7) < 1e-15);
    assert!(rel(band.gamma_hi(), 0.5) < 1e-15);
    let back: NoiseBand = serde_json::from_str(&serde_json::to_string(&band).unwrap()).unwrap();
    assert_eq!(back, band);
    let bad = r#"{"n":2,"sigma":1.0,"gamma_lo":4.0,"gamma_hi":0.5}"#;
    assert!(serde_json::from_str::<NoiseBand>(bad).is_err());
    let model_json = r#"{"bands":[{"n":1,"sigma":1,"gamma_lo":5e-7,"gamma_hi":0.5},{"n":2,"sigma":1,"gamma_lo":0.6,"gamma_hi":4.25}],"continuity":true}"#;
    assert!(serde_json::from_str::<NoiseModel>(model_json).is_err());
}

proptest! {
    #[test]
    fn correlation_positive_decreasing_convex(
        n in 1u32..5,
        lo in 1e-3f64..1.0,
        span in 1.5f64..1e4,
        tau in 1e-3f64..20.0,
    ) {
        let band = NoiseBand::new(n, 1.0, lo, lo * span).unwrap();
        let h = 1e-3 * tau;
        let (a, m, b) = (band.correlation(tau - h), band.correlation(tau), band.correlation(tau + h));
        prop_assert!(m > 0.0 || m < 1e-300);
        prop_assert!(b <= m && m <= a);
        prop_assert!(a + b - 2.0 * m >= -1e-13 * m);
    }

    #[test]
    fn quantile_stays_in_window(n in 1u32..6, u in 0.0f64..=1.0) {
        let band = NoiseBand::new(n, 1.0, 0.2, 9.0).unwrap();
        let g = band.rate_quantile(u);
        prop_assert!((0.2..=9.0).contains(&g));
    }
}
