use std::f64::consts::PI;

use num_complex::Complex64;
use scatterlab::born::*;
use scatterlab::numerics::AxialGrid;
use scatterlab::partialwave::{amplitude, phase_shift_table, radial_phase_shift, default_r_max, DEFAULT_DR};
use scatterlab::PotentialModel;

fn gaussian(v0: f64) -> PotentialModel {
    PotentialModel::gaussian_well(v0, 1.0).unwrap()
}

#[test]
fn b0_is_one_and_b1_at_origin_is_half_gaussian() {
    let m = gaussian(1.0);
    let grid = AxialGrid::new(0.05, 6.0, -6.0, 6.0).unwrap();
    let e = transport_coefficients(&m, [0.0, 0.0, 1.0], grid, 2).unwrap();
    assert!(e.b[0].iter().all(|b| *b == Complex64::new(1.0, 0.0)));
    let b1 = e.b_at(1, &[0.0, 0.0, 0.0]).unwrap();
    assert!((b1.re - PI.sqrt() / 2.0).abs() < 1e-6, "{b1}");
    assert!(b1.im.abs() < 1e-15);
}

#[test]
fn coefficients_do_not_depend_on_momentum_magnitude() {
    let m = gaussian(-1.0);
    let grid = AxialGrid::new(0.1, 5.0, -5.0, 5.0).unwrap();
    let a = transport_coefficients(&m, [0.0, 0.6, 0.8], grid, 2).unwrap();
    let b = transport_coefficients(&m, [0.0, 6.0, 8.0], grid, 2).unwrap();
    assert_eq!(a.b, b.b);
    let x = [0.3, -0.4, 0.2];
    assert_eq!(a.b_at(2, &x), b.b_at(2, &x));
}

#[test]
fn zeroth_order_kernel_matches_born_constant() {
    let m = gaussian(-1.0);
    for &(lam, th) in &[(25.0f64, 0.3f64), (100.0, 0.7), (49.0, 2.0)] {
        let k = lam.sqrt();
        let w = [th.sin(), 0.0, th.cos()];
        let s = high_energy_kernel(&m, lam, w, [0.0, 0.0, 1.0], 0).unwrap();
        let f = born_first_amplitude(&m, k, th).unwrap();
        let expect = Complex64::new(0.0, k / (2.0 * PI)) * f;
        assert!((s.value - expect).norm() < 1e-8, "{} vs {}", s.value, expect);
    }
}

#[test]
fn born_is_linear_in_strength() {
    for m in [gaussian(-0.7), PotentialModel::yukawa(0.3, 1.2).unwrap(), PotentialModel::square_well(0.4, 1.5).unwrap()] {
        for th in [0.0, 0.4, 1.9] {
            let a = born_first_amplitude(&m, 1.7, th).unwrap();
            let b = born_first_amplitude(&m.scaled(2.0), 1.7, th).unwrap();
            assert!((b - 2.0 * a).norm() <= 1e-12 * a.norm().max(1e-300), "{a} {b}");
        }
    }
}

#[test]
fn weak_yukawa_phase_shifts_match_numerov() {
    let m = PotentialModel::yukawa(0.1, 1.0).unwrap();
    let r_max = default_r_max(&m, 1.0);
    for l in 0..=5 {
        let exact = radial_phase_shift(&m, l, 1.0, r_max, DEFAULT_DR).unwrap();
        let born = born_first_phase_shift(&m, 1.0, l).unwrap();
        assert!(((born - exact) / exact).abs() < 0.1, "l={l}: {born} vs {exact}");
    }
}

#[test]
fn weak_yukawa_amplitude_real_part_is_born() {
    let (g, mu, k) = (0.1, 1.0, 2.0);
    let m = PotentialModel::yukawa(g, mu).unwrap();
    let t = phase_shift_table(&m, k, scatterlab::partialwave::default_l_max(&m, k)).unwrap();
    let q2 = 2.0 * k * k;
    let closed = -g / (q2 + mu * mu);
    let born = born_first_amplitude(&m, k, PI / 2.0).unwrap();
    assert!((born.re - closed).abs() < 1e-10);
    assert!(born.im.abs() < 1e-14);
    let exact = amplitude(&t, PI / 2.0).unwrap();
    assert!(((exact.re - born.re) / exact.re).abs() < 0.05, "{exact} vs {born}");
}

/// Im f(k, k') = k/(4 pi) int f_B(k, n) f_B(n, k') dOmega_n at second order.
fn second_order_imaginary_part(g: f64, mu: f64, k: f64, theta: f64) -> f64 {
    let fb = |c: f64| -g / (2.0 * k * k * (1.0 - c) + mu * mu);
    let cos_rule = scatterlab::numerics::composite_gauss_legendre(16, -1.0, 1.0, 16).unwrap();
    let n_phi = 256;
    let kp = [theta.sin(), 0.0, theta.cos()];
    let mut acc = 0.0;
    for (c, w) in cos_rule.iter() {
        let s = (1.0 - c * c).sqrt();
        for p in 0..n_phi {
            let phi = 2.0 * PI * p as f64 / n_phi as f64;
            let n = [s * phi.cos(), s * phi.sin(), c];
            let c2 = n[0] * kp[0] + n[2] * kp[2];
            acc += w * (2.0 * PI / n_phi as f64) * fb(c) * fb(c2);
        }
    }
    k / (4.0 * PI) * acc
}

#[test]
fn weak_yukawa_gap_is_the_second_order_imaginary_part() {
    // The exact amplitude differs from first order mainly through its
    // imaginary part, which unitarity fixes at second order.
    let (g, mu, k) = (0.1, 1.0, 2.0);
    let m = PotentialModel::yukawa(g, mu).unwrap();
    let t = phase_shift_table(&m, k, scatterlab::partialwave::default_l_max(&m, k)).unwrap();
    let exact = amplitude(&t, PI / 2.0).unwrap();
    let im2 = second_order_imaginary_part(g, mu, k, PI / 2.0);
    assert!(((exact.im - im2) / im2).abs() < 0.15, "{} vs {im2}", exact.im);
}

#[test]
fn kernel_error_drops_with_order_at_thirty_degrees() {
    let m = gaussian(-1.0);
    let th = PI / 6.0;
    let ex = exact_kernel(&m, 100.0, th).unwrap();
    let w = [th.sin(), 0.0, th.cos()];
    let errs: Vec<f64> = (0..=2)
        .map(|n| (high_energy_kernel(&m, 100.0, w, [0.0, 0.0, 1.0], n).unwrap().value - ex).norm())
        .collect();
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

#[test]
fn first_coefficient_decay_for_power_tail() {
    // |b_1| ~ <x>^{-(rho - 1)} away from the forward cone.
    let m = PotentialModel::power_tail(1.0, 2.5).unwrap();
    let grid = AxialGrid::new(0.25, 100.0, -100.0, 100.0).unwrap();
    let e = transport_coefficients(&m, [0.0, 0.0, 1.0], grid, 1).unwrap();
    let radii = [10.0, 20.0, 40.0, 80.0];
    for angle in [PI / 2.0, 2.0 * PI / 3.0] {
        let p = e.decay_exponent(1, angle, &radii).unwrap();
        assert!((p - 1.5).abs() < 0.2 * 1.5, "angle {angle}: {p}");
    }
    assert!(e.decay_exponent(1, 0.1, &radii).is_err());
}

#[test]
fn gaussian_coefficients_beat_the_bound() {
    let m = gaussian(-1.0);
    let grid = AxialGrid::new(0.05, 8.0, -8.0, 8.0).unwrap();
    let e = transport_coefficients(&m, [0.0, 0.0, 1.0], grid, 2).unwrap();
    // Inside the well the fit is meaningless; measure past two ranges.
    for n in 1..=2 {
        let p = e.decay_exponent(n, PI / 2.0, &[2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(p > 0.8 * (m.rho - 1.0) * n as f64, "n={n}: {p}");
    }
}

#[test]
fn zero_potential_error_order_flags_floor() {
    let r = measure_error_order(&PotentialModel::zero(), &[25.0, 50.0, 100.0, 250.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0], 0)
        .unwrap();
    assert!(r.floor_warning);
    assert!(r.errors.iter().all(|&e| e == 0.0));
}
