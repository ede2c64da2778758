use num_complex::Complex64;
use scatterlab::partialwave::radial_phase_shift;
use scatterlab::propagator::*;
use scatterlab::{PotentialModel, ScatterError};

/// Free evolution of `fhat = A exp(-a (p - c)^2)`, `a = sigma^2`, in closed form.
fn gaussian_oracle(a: f64, c: f64, amp: f64, x: f64, t: f64) -> Complex64 {
    let z = Complex64::new(a, t);
    let shifted = a * c / z;
    let exponent = Complex64::i() * shifted * x - x * x / (4.0 * z) + a * a * c * c / z - a * c * c;
    amp * (2.0 * z).sqrt().inv() * exponent.exp()
}

fn oracle_packet(g: Geometry, sigma: f64, k: f64, t: f64) -> Vec<Complex64> {
    let amp = (2.0 * sigma * sigma / std::f64::consts::PI).powf(0.25);
    g.coordinates().iter().map(|&x| gaussian_oracle(sigma * sigma, k, amp, x, t)).collect()
}

fn l2(g: Geometry, a: &[Complex64], b: &[Complex64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() * g.spacing()).sqrt()
}

fn gaussian_profile(k: f64, sigma: f64) -> NormalizedProfile {
    SpectralProfile::Gaussian { k, sigma, x0: 0.0 }.normalized().unwrap()
}

#[test]
fn free_gaussian_matches_closed_form() {
    let g = Geometry::line(4096, 0.05).unwrap();
    let f = gaussian_profile(1.0, 1.0).packet(g).unwrap();
    assert!(l2(g, &f.values, &oracle_packet(g, 1.0, 1.0, 0.0)) < 1e-10);
    let cfg = EvolutionConfig::for_grid(PotentialModel::zero(), &g);
    let u = split_step_evolve(&f, &cfg, 5.0).unwrap();
    let err = l2(g, &u.values, &oracle_packet(g, 1.0, 1.0, 5.0));
    assert!(err < 1e-8, "{err}");
    assert_eq!(u.t, 5.0);
}

#[test]
fn zero_time_is_identity() {
    let g = Geometry::line(256, 0.1).unwrap();
    let f = gaussian_profile(1.0, 1.0).packet(g).unwrap();
    let cfg = EvolutionConfig::for_grid(PotentialModel::gaussian_well(-1.0, 1.0).unwrap(), &g);
    assert_eq!(split_step_evolve(&f, &cfg, 0.0).unwrap(), f);
}

fn scattering_setup() -> (Geometry, WavePacket, EvolutionConfig) {
    let g = Geometry::line(2048, 0.25).unwrap();
    let f = SpectralProfile::Gaussian { k: 1.5, sigma: 1.5, x0: -12.0 }.normalized().unwrap().packet(g).unwrap();
    let cfg = EvolutionConfig::for_grid(PotentialModel::gaussian_well(-1.0, 1.0).unwrap(), &g);
    (g, f, cfg)
}

#[test]
fn strang_splitting_is_second_order() {
    let (_, f, cfg) = scattering_setup();
    let run = |dt: f64| split_step_evolve(&f, &EvolutionConfig { dt, ..cfg }, 8.0).unwrap();
    let (a, b, c) = (run(0.003), run(0.0015), run(0.00075));
    let d1 = a.distance(&b).unwrap();
    let d2 = b.distance(&c).unwrap();
    let slope = (d1 / d2).log2();
    assert!((slope - 2.0).abs() < 0.2, "{slope}");
}

#[test]
fn norm_is_conserved_and_evolution_reverses() {
    let (_, f, cfg) = scattering_setup();
    let steps = 10_000.0;
    let forward = split_step_evolve(&f, &cfg, cfg.dt * steps).unwrap();
    assert!((forward.norm() - f.norm()).abs() < 1e-10);
    let back = split_step_evolve(&forward, &cfg, 0.0).unwrap();
    assert!(back.distance(&f).unwrap() < 1e-8);
}

#[test]
fn edge_contact_is_a_reflection_error() {
    let g = Geometry::line(512, 0.1).unwrap();
    let f = gaussian_profile(3.0, 1.0).packet(g).unwrap();
    let cfg = EvolutionConfig::for_grid(PotentialModel::zero(), &g);
    assert!(matches!(split_step_evolve(&f, &cfg, 5.0), Err(ScatterError::Reflection(_))));
}

#[test]
fn free_asymptotic_form_converges_to_the_evolution() {
    let g = Geometry::default_line();
    let prof = gaussian_profile(2.0, 1.0);
    let fhat = |p: f64| prof.eval(p);
    let mut errs = Vec::new();
    for t in [100.0, 200.0] {
        let form = free_asymptotics(&fhat, t, g).unwrap();
        assert!((form.norm() - 1.0).abs() < 1e-10, "{}", form.norm());
        errs.push(l2(g, &form.values, &oracle_packet(g, 1.0, 2.0, t)));
    }
    assert!(errs[0] <= 0.01 && errs[1] < errs[0], "{errs:?}");
}

#[test]
fn packet_lives_where_classical_paths_go() {
    let g = Geometry::default_line();
    let prof = gaussian_profile(2.0, 2.0);
    let t = 100.0;
    let form = free_asymptotics(&|p| prof.eval(p), t, g).unwrap();
    let centre = 2.0 * t * 2.0;
    assert!(form.mass_between(0.5 * centre, 1.5 * centre) > 0.99);
}

fn line_average_oracle(v: impl Fn(f64) -> f64, x: f64) -> f64 {
    let n = 20_000;
    let h = 1.0 / n as f64;
    let s: f64 = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * v(i as f64 * h * x)
        })
        .sum();
    s * h / 3.0
}

#[test]
fn modified_phase_for_coulomb_like_tail() {
    let v0 = 0.5;
    let m = PotentialModel::power_tail(v0, 1.0).unwrap();
    for x in [0.0, 0.5, 3.0, 50.0, -200.0] {
        let t = 40.0;
        let expect = x * x / (4.0 * t) - t * line_average_oracle(|r| v0 / (1.0 + r * r).sqrt(), x);
        let got = modified_phase(&m, x, t).unwrap();
        assert!((got - expect).abs() < 1e-9, "x={x}: {got} vs {expect}");
    }
    let gauss = PotentialModel::gaussian_well(-0.3, 1.0).unwrap();
    for x in [0.7, 9.0] {
        let expect = line_average_oracle(|r| -0.3 * (-r * r).exp(), x);
        assert!((line_average(&gauss, x).unwrap() - expect).abs() < 1e-10);
    }
}

#[test]
fn modified_form_reduces_and_is_unitary() {
    let g = Geometry::default_line();
    let prof = gaussian_profile(2.0, 2.0);
    let fhat = |p: f64| prof.eval(p);
    let free = free_asymptotics(&fhat, 50.0, g).unwrap();
    let same = modified_free_evolution(&PotentialModel::zero(), &fhat, 50.0, g).unwrap();
    assert_eq!(free, same);
    let m = PotentialModel::power_tail(0.5, 1.0).unwrap();
    let u = modified_free_evolution(&m, &fhat, 50.0, g).unwrap();
    assert!((u.norm() - free.norm()).abs() < 1e-12);
    let slow = PotentialModel::power_tail(0.5, 0.5).unwrap();
    assert!(modified_free_evolution(&slow, &fhat, 50.0, g).is_err());
}

fn small_probe_grid() -> (Geometry, NormalizedProfile) {
    // k = 2 packet at T = 80 sits at 60% of the half extent.
    let g = Geometry::line(4096, 2.0 * 533.0 / 4096.0).unwrap();
    let prof = SpectralProfile::SkewNotched { k: 2.0, sigma_low: 1.0, sigma_high: 2.5, notch: 0.5 }
        .normalized()
        .unwrap();
    (g, prof)
}

#[test]
fn free_probe_has_zero_increments() {
    let (g, prof) = small_probe_grid();
    let f = prof.packet(g).unwrap();
    let cfg = EvolutionConfig::for_grid(PotentialModel::zero(), &g);
    let r = moller_probe(&PotentialModel::zero(), &f, &[5.0, 10.0, 20.0], &cfg).unwrap();
    assert!(r.increments.iter().all(|&d| d < 1e-10), "{:?}", r.increments);
    let fhat = |p: f64| prof.eval(p);
    let r = modified_moller_probe(&PotentialModel::zero(), &fhat, &[5.0, 10.0, 20.0], g, &cfg);
    // U_0 with v = 0 is only the asymptotic form, so its increments are O(1/T), not zero.
    assert!(r.unwrap().increments.iter().all(|d| d.is_finite()));
}

#[test]
fn dichotomy_is_stable_under_refinement() {
    let (g, prof) = small_probe_grid();
    let times = [10.0, 20.0, 40.0, 80.0];
    let short = PotentialModel::gaussian_well(-0.3, 1.0).unwrap();
    let long = PotentialModel::power_tail(0.5, 1.0).unwrap();
    let ratios = |g: Geometry, dt_scale: f64| {
        let f = prof.packet(g).unwrap();
        let mut cfg = EvolutionConfig::for_grid(short, &g);
        cfg.dt *= dt_scale;
        let s = moller_probe(&short, &f, &times, &cfg).unwrap();
        let l = moller_probe(&long, &f, &times, &cfg).unwrap();
        (s.decay_ratio, l.decay_ratio, l.verdict)
    };
    let base = ratios(g, 1.0);
    let half_dt = ratios(g, 0.5);
    let Geometry::Line { n, dx } = g else { unreachable!() };
    let wide = ratios(Geometry::line(2 * n, dx).unwrap(), 1.0);
    assert_eq!(base.2, CauchyVerdict::Plateau);
    for other in [half_dt, wide] {
        assert_eq!(other.2, base.2);
        assert!((other.0 / base.0 - 1.0).abs() < 0.02, "{base:?} {other:?}");
        assert!((other.1 / base.1 - 1.0).abs() < 0.02, "{base:?} {other:?}");
    }
    assert!(base.0 > PLATEAU_RATIO && base.1 < PLATEAU_RATIO, "{base:?}");
}

#[test]
fn limit_intertwines_with_free_flow() {
    // W (e^{-i H0 tau} f) = e^{-i H tau} W f, compared at finite T.
    let (g, prof) = small_probe_grid();
    let m = PotentialModel::gaussian_well(-0.3, 1.0).unwrap();
    let f = prof.packet(g).unwrap();
    let cfg = EvolutionConfig::for_grid(m, &g);
    let tau = 5.0;
    let times = [40.0, 40.0 + tau];
    let a = moller_probe(&m, &f, &times, &cfg).unwrap();
    let shifted = free_evolve(&f, tau).unwrap();
    let shifted = WavePacket { t: 0.0, ..shifted };
    let b = moller_probe(&m, &shifted, &times, &cfg).unwrap();
    assert_eq!(a.verdict, b.verdict);
    let moved = split_step_evolve(&a.limit, &cfg, tau).unwrap();
    let moved = WavePacket { t: 0.0, ..moved };
    let d = moved.distance(&b.limit).unwrap();
    assert!(d < 1e-3, "{d}");
}

#[test]
fn time_domain_phase_free_is_one() {
    let r = scattering_phase_from_time_domain(&PotentialModel::zero(), 1.0, 5.0).unwrap();
    assert!((r.value - 1.0).norm() < 1e-8, "{}", r.value);
}

#[test]
fn time_domain_phase_matches_stationary_gaussian() {
    let m = PotentialModel::gaussian_well(-0.3, 1.0).unwrap();
    let r = scattering_phase_from_time_domain(&m, 1.0, 5.0).unwrap();
    let d = radial_phase_shift(&m, 0, 1.0, 30.0, 1e-3).unwrap();
    let e = Complex64::from_polar(1.0, 2.0 * d);
    assert!((r.value - e).norm() < 1e-2, "{} vs {e}", r.value);
}

#[test]
fn time_domain_phase_matches_square_well_matching() {
    let (depth, radius, k) = (1.0f64, 1.0f64, 1.0f64);
    let kk = (k * k + depth).sqrt();
    let delta = ((k / kk) * (kk * radius).tan()).atan() - k * radius;
    let m = PotentialModel::square_well(depth, radius).unwrap();
    let r = scattering_phase_from_time_domain(&m, k, 5.0).unwrap();
    let e = Complex64::from_polar(1.0, 2.0 * delta);
    assert!((r.value - e).norm() < 1e-2, "{} vs {e}", r.value);
}

#[test]
fn wide_band_is_rejected() {
    let m = PotentialModel::gaussian_well(-0.3, 1.0).unwrap();
    assert!(matches!(scattering_phase_from_time_domain(&m, 1.0, 2.0), Err(ScatterError::Parameter(_))));
}

mod invariants {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn free_flow_matches_closed_form_and_keeps_norm(k in -2.0..2.0f64, sigma in 0.8..2.0f64, t in 0.0..4.0f64) {
            let g = Geometry::line(2048, 0.05).unwrap();
            let f = gaussian_profile(k, sigma).packet(g).unwrap();
            let u = split_step_evolve(&f, &EvolutionConfig::for_grid(PotentialModel::zero(), &g), t).unwrap();
            prop_assert!((u.norm() - f.norm()).abs() < 1e-10);
            prop_assert!(l2(g, &u.values, &oracle_packet(g, sigma, k, t)) < 1e-7);
        }
    }
}
