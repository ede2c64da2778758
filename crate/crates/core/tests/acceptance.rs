//! Acceptance criteria, one test each. Every test writes its measured line
//! straight to stderr so it shows whether or not the test passes.

use std::f64::consts::PI;
use std::io::Write;

use scatterlab::cli::acceptance::{criterion, AcceptanceOptions, CriterionResult, Status};

fn check(id: usize) -> CriterionResult {
    let r = criterion(id, &AcceptanceOptions::default());
    let _ = writeln!(std::io::stderr(), "{r}");
    r
}

fn value(r: &CriterionResult, key: &str) -> f64 {
    *r.values.get(key).unwrap_or_else(|| panic!("criterion {} has no value {key}: {r}", r.id))
}

fn mod_pi(d: f64) -> f64 {
    let x = d.rem_euclid(PI);
    x.min(PI - x)
}

fn assert_pass(r: &CriterionResult) {
    assert_eq!(r.status, Status::Pass, "{r}");
}

#[test]
fn c01_partial_wave_exactness() {
    let r = check(1);
    // u = sin(k' r) inside, k' = sqrt(k^2 + 1); matching u'/u at r = 1, k = 1.
    let kp = 2f64.sqrt();
    let oracle = -1.0 + (kp.tan() / kp).atan();
    assert!(mod_pi(value(&r, "reference") - oracle) < 1e-14);
    assert!(mod_pi(value(&r, "delta0") - oracle) < 1e-6, "{r}");
    assert_pass(&r);
}

#[test]
fn c02_unitarity_and_accumulation() {
    let r = check(2);
    assert_pass(&r);
}

#[test]
fn c03_born_cross_validation() {
    let r = check(3);
    // q = 2k sin(theta/2) = 2 sqrt(2)
    let oracle = -0.1 / (8.0 + 1.0);
    assert!((value(&r, "closed_form") - oracle).abs() < 1e-15);
    assert!((value(&r, "born") - oracle).abs() < 1e-9);
    assert_pass(&r);
}

#[test]
fn c04_high_energy_error_order() {
    assert_pass(&check(4));
}

#[test]
fn c05_eikonal_closed_form() {
    let r = check(5);
    let oracle = PI / 4.0 * (1.0 / 401f64.sqrt() - 1.0);
    assert!((value(&r, "closed_form_r20_xi1") - oracle).abs() < 1e-15);
    assert_pass(&r);
}

#[test]
fn c06_residual_scaling() {
    assert_pass(&check(6));
}

#[test]
fn c07_s0_vs_exact_kernel() {
    assert_pass(&check(7));
}

#[test]
fn c08_free_asymptotics() {
    assert_pass(&check(8));
}

#[test]
fn c09_short_long_range_dichotomy() {
    assert_pass(&check(9));
}

#[test]
fn c10_time_domain_smatrix() {
    assert_pass(&check(10));
}

#[test]
fn c11_hilbert_schmidt_identity() {
    let r = check(11);
    // (2pi)^-3 * pi^{3/2} * pi^2 = sqrt(pi) / 8
    let oracle = PI.powf(1.5) * PI * PI / (2.0 * PI).powi(3);
    assert!((value(&r, "reference") - oracle).abs() < 1e-15);
    assert!((value(&r, "value") - oracle).abs() < 0.01 * oracle);
    assert_pass(&r);
}

#[test]
fn c12_mourre_positivity() {
    let r = check(12);
    assert!((value(&r, "min_eigenvalue") - 4.0).abs() <= 0.1, "{r}");
    assert_pass(&r);
}

#[test]
fn c13_kato_threshold() {
    assert_pass(&check(13));
}

#[test]
fn c14_lap_stability() {
    assert_pass(&check(14));
}

#[test]
fn c15_diagonal_probe_is_reported() {
    let r = check(15);
    assert_eq!(r.status, Status::Info, "{r}");
    assert!((value(&r, "theory_rho1") + 2.0).abs() < 1e-12);
    assert!((value(&r, "theory_rho075") + 7.0 / 3.0).abs() < 1e-12);
    assert!(value(&r, "fit_rho1").is_finite() && value(&r, "fit_rho075").is_finite());
}

#[test]
fn perturbed_phase_shifts_fail_the_cross_check() {
    let opts = AcceptanceOptions { only: None, phase_perturbation: Some(1e-2) };
    let r = criterion(2, &opts);
    let _ = writeln!(std::io::stderr(), "fault injection: {r}");
    assert_eq!(r.status, Status::Fail);
    assert!(value(&r, "in_out_gap") > 1e-3);
    assert!(value(&r, "modulus_defect") < 1e-12);
}
