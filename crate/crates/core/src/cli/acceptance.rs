//! The acceptance criteria, runnable from the CLI and from tests.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::born::{born_first_amplitude, measure_error_order};
use crate::diagnostics::{hs_norm_resolvent_weight, kato_smoothness_integral, lap_probe, mourre_check};
use crate::eikonal::{approximate_eigenfunction, diagonal_exponent_probe, eikonal_phase_integral, s0_kernel, Sign};
use crate::born::exact_kernel;
use crate::numerics::AxialGrid;
use crate::partialwave::{amplitude, default_l_max, in_out_consistency, phase_shift_table, smatrix_eigenvalues};
use crate::propagator::{
    free_asymptotics, free_evolve, modified_moller_probe, moller_probe, scattering_phase_from_time_domain,
    EvolutionConfig, Geometry, SpectralProfile, DEFAULT_PROBE_TIMES,
};
use crate::{PotentialModel, Result};

pub const CRITERIA: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Reported without a tolerance.
    Info,
}

#[derive(Clone, Debug, Default)]
pub struct AcceptanceOptions {
    /// Criterion numbers to run; all when `None`.
    pub only: Option<Vec<usize>>,
    /// Shift every phase shift of the partial-wave checks by this much.
    pub phase_perturbation: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub status: Status,
    pub measured: String,
    pub expected: String,
    /// Numbers behind `measured`, including the reference values.
    pub values: BTreeMap<String, f64>,
    pub runtime_s: f64,
    pub error: Option<String>,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        };
        write!(
            f,
            "[{tag}] {:02} {}: measured {}; expected {} ({:.1} s)",
            self.id, self.name, self.measured, self.expected, self.runtime_s
        )?;
        if let Some(e) = &self.error {
            write!(f, " error: {e}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AcceptanceReport {
    pub results: Vec<CriterionResult>,
    pub passed: usize,
    pub failed: usize,
}

impl AcceptanceReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

pub fn name(id: usize) -> &'static str {
    match id {
        1 => "partial-wave exactness",
        2 => "S-matrix unitarity and accumulation",
        3 => "Born cross-validation",
        4 => "high-energy error order",
        5 => "eikonal closed form",
        6 => "approximate eigenfunction residual scaling",
        7 => "s0 vs exact kernel",
        8 => "free asymptotics",
        9 => "short/long-range dichotomy",
        10 => "time-domain S-matrix",
        11 => "Hilbert-Schmidt identity",
        12 => "Mourre positivity",
        13 => "Kato smoothness threshold",
        14 => "LAP stability",
        15 => "diagonal singularity probe",
        _ => "unknown",
    }
}

struct Outcome {
    pass: Option<bool>,
    measured: String,
    expected: String,
    values: Vec<(&'static str, f64)>,
}

fn gaussian(v0: f64) -> PotentialModel {
    PotentialModel::gaussian_well(v0, 1.0).expect("valid gaussian")
}

/// `x` reduced to `(-pi/2, pi/2]`, the range of phase shifts.
fn reduce(x: f64) -> f64 {
    let y = x - PI * (x / PI).round();
    if y <= -PI / 2.0 {
        y + PI
    } else {
        y
    }
}

fn c1_partial_wave(opts: &AcceptanceOptions) -> Result<Outcome> {
    let m = PotentialModel::square_well(1.0, 1.0)?;
    let k = 1.0;
    let mut t = phase_shift_table(&m, k, default_l_max(&m, k))?;
    if let Some(eps) = opts.phase_perturbation {
        t = t.perturbed(eps);
    }
    let kp = (k * k + 1.0f64).sqrt();
    let reference = reduce(-k + ((k / kp) * kp.tan()).atan());
    let err = reduce(t.delta[0] - reference).abs();
    Ok(Outcome {
        pass: Some(err < 1e-6),
        measured: format!("delta_0 = {:.10}, |error| = {err:.2e}", t.delta[0]),
        expected: format!("{reference:.10} within 1e-6"),
        values: vec![("delta0", t.delta[0]), ("reference", reference), ("error", err)],
    })
}

fn c2_unitarity(opts: &AcceptanceOptions) -> Result<Outcome> {
    let mut t = phase_shift_table(&gaussian(-1.0), 2.0, 25)?;
    if let Some(eps) = opts.phase_perturbation {
        t = t.perturbed(eps);
    }
    let s = smatrix_eigenvalues(&t);
    let modulus = s.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    let tail = s[20..].iter().map(|z| (z - 1.0).norm()).fold(0.0, f64::max);
    // The table against an independent in/out fit of the radial solutions.
    let cross = in_out_consistency(&t, &[0, 1, 2, 5])?;
    let pass = modulus < 1e-12 && tail < 1e-3 && cross < 1e-4;
    Ok(Outcome {
        pass: Some(pass),
        measured: format!("max ||S_l|-1| = {modulus:.1e}, max_(l>=20) |S_l-1| = {tail:.1e}, in/out gap = {cross:.1e}"),
        expected: "< 1e-12, < 1e-3, < 1e-4".into(),
        values: vec![("modulus_defect", modulus), ("tail", tail), ("in_out_gap", cross)],
    })
}

fn c3_born() -> Result<Outcome> {
    let (g, mu, k, theta) = (0.1, 1.0, 2.0, PI / 2.0);
    let m = PotentialModel::yukawa(g, mu)?;
    let born = born_first_amplitude(&m, k, theta)?;
    let q = 2.0 * k * (theta / 2.0).sin();
    let closed = -g / (q * q + mu * mu);
    let t = phase_shift_table(&m, k, default_l_max(&m, k))?;
    let exact = amplitude(&t, theta)?;
    let rel = (born - exact).norm() / exact.norm();
    Ok(Outcome {
        pass: Some(rel < 0.05 && (born.re - closed).abs() < 1e-8 * closed.abs()),
        measured: format!("f_Born = {:.6}, f = {:.6}{:+.6}i, relative gap {:.2}%", born.re, exact.re, exact.im, 100.0 * rel),
        expected: format!("f_Born = {closed:.6}, gap < 5%"),
        values: vec![("born", born.re), ("closed_form", closed), ("exact_re", exact.re), ("exact_im", exact.im), ("relative_gap", rel)],
    })
}

fn c4_error_order() -> Result<Outcome> {
    let m = gaussian(-1.0);
    let lambdas = [25.0, 50.0, 100.0, 200.0];
    let (w, wp) = ([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
    let n0 = measure_error_order(&m, &lambdas, w, wp, 0)?;
    let n1 = measure_error_order(&m, &lambdas, w, wp, 1)?;
    let pass = (n0.slope + 0.5).abs() <= 0.3 && (n1.slope + 1.0).abs() <= 0.3;
    Ok(Outcome {
        pass: Some(pass),
        measured: format!(
            "slope N=0 {:.2}, N=1 {:.2} (errors {:.1e}..{:.1e})",
            n0.slope,
            n1.slope,
            n0.errors[0],
            n0.errors[n0.errors.len() - 1]
        ),
        expected: "-0.5 +- 0.3 and -1 +- 0.3".into(),
        values: vec![("slope_n0", n0.slope), ("slope_n1", n1.slope)],
    })
}

fn c5_eikonal() -> Result<Outcome> {
    let v0 = 1.0;
    let m = PotentialModel::power_tail(v0, 2.0)?;
    let mut worst = 0.0f64;
    let mut ref_20 = 0.0;
    for xi in [1.0, 5.0] {
        for r in [1.0, 5.0, 20.0] {
            let p = eikonal_phase_integral(&m, [r, 0.0, 0.0], [0.0, 0.0, xi], Sign::Plus)?;
            let closed = PI * v0 / (4.0 * xi) * ((1.0 + r * r).powf(-0.5) - 1.0);
            worst = worst.max((p.value - closed).abs());
            if xi == 1.0 && r == 20.0 {
                ref_20 = closed;
            }
        }
    }
    Ok(Outcome {
        pass: Some(worst < 1e-6),
        measured: format!("max |Phi_+ - closed form| = {worst:.1e}"),
        expected: "< 1e-6".into(),
        values: vec![("max_error", worst), ("closed_form_r20_xi1", ref_20)],
    })
}

fn c6_residual() -> Result<Outcome> {
    let m = gaussian(-1.0);
    let grid = AxialGrid::new(0.05, 6.0, -6.0, 6.0)?;
    let res = |lam: f64, n: usize| approximate_eigenfunction(&m, lam, Sign::Minus, n, grid).map(|p| p.residual_norm);
    let r0 = res(25.0, 0)?;
    let r2 = res(25.0, 2)?;
    let a = res(25.0, 1)?;
    let b = res(100.0, 1)?;
    let slope = (b / a).ln() / 4f64.ln();
    let drop = r0 / r2;
    Ok(Outcome {
        pass: Some(drop >= 5.0 && (slope + 0.5).abs() <= 0.3),
        measured: format!("R0/R2 = {drop:.2} at lambda 25, N=1 slope {slope:.2}"),
        expected: ">= 5, -0.5 +- 0.3".into(),
        values: vec![("drop", drop), ("slope_n1", slope)],
    })
}

fn c7_s0() -> Result<Outcome> {
    let m = gaussian(-1.0);
    let lambda = 100.0;
    let mut worst = 0.0f64;
    let mut window = 0.0f64;
    for deg in [10.0f64, 20.0, 30.0] {
        let th = deg.to_radians();
        let (s, c) = (0.5 * th).sin_cos();
        let sample = s0_kernel(&m, lambda, [s, 0.0, c], [-s, 0.0, c], [0.0, 0.0, 1.0], 3)?;
        let exact = exact_kernel(&m, lambda, th)?;
        worst = worst.max((sample.value - exact).norm() / exact.norm());
        window = window.max(sample.window_sensitivity);
    }
    Ok(Outcome {
        pass: Some(worst < 0.1 && window < 0.1),
        measured: format!("max relative error {:.1}%, window sensitivity {:.1}%", 100.0 * worst, 100.0 * window),
        expected: "< 10%, < 10%".into(),
        values: vec![("relative_error", worst), ("window_sensitivity", window)],
    })
}

fn c8_free_asymptotics() -> Result<Outcome> {
    let g = Geometry::default_line();
    let prof = SpectralProfile::Gaussian { k: 2.0, sigma: 1.0, x0: 0.0 }.normalized()?;
    let f = prof.packet(g)?;
    let fhat = |p: f64| prof.eval(p);
    let err = |t: f64| -> Result<f64> { free_evolve(&f, t)?.distance(&free_asymptotics(&fhat, t, g)?) };
    let (e100, e200) = (err(100.0)?, err(200.0)?);
    Ok(Outcome {
        pass: Some(e100 <= 0.01 && e200 < e100),
        measured: format!("L2 error {e100:.2e} at t=100, {e200:.2e} at t=200"),
        expected: "<= 0.01, then smaller".into(),
        values: vec![("error_t100", e100), ("error_t200", e200)],
    })
}

fn c9_dichotomy() -> Result<Outcome> {
    let g = Geometry::default_line();
    let prof = SpectralProfile::SkewNotched { k: 2.0, sigma_low: 1.0, sigma_high: 2.5, notch: 0.5 }.normalized()?;
    let f = prof.packet(g)?;
    let fhat = move |p: f64| prof.eval(p);
    let short = gaussian(-1.0);
    let long = PotentialModel::power_tail(0.5, 1.0)?;
    let s = moller_probe(&short, &f, &DEFAULT_PROBE_TIMES, &EvolutionConfig::for_grid(short, &g))?;
    let cfg = EvolutionConfig::for_grid(long, &g);
    let l = moller_probe(&long, &f, &DEFAULT_PROBE_TIMES, &cfg)?;
    let lm = modified_moller_probe(&long, &fhat, &DEFAULT_PROBE_TIMES, g, &cfg)?;
    let pass = s.decay_ratio >= 10.0 && l.decay_ratio < 2.0 && lm.decay_ratio >= 10.0;
    Ok(Outcome {
        pass: Some(pass),
        measured: format!(
            "decay short {:.2}, long plain {:.2}, long modified {:.2}",
            s.decay_ratio, l.decay_ratio, lm.decay_ratio
        ),
        expected: ">= 10, < 2, >= 10".into(),
        values: vec![("short", s.decay_ratio), ("long_plain", l.decay_ratio), ("long_modified", lm.decay_ratio)],
    })
}

fn c10_time_domain() -> Result<Outcome> {
    let m = gaussian(-1.0);
    let k = 1.0;
    let td = scattering_phase_from_time_domain(&m, k, 5.0)?;
    let t = phase_shift_table(&m, k, default_l_max(&m, k))?;
    let stationary = Complex64::from_polar(1.0, 2.0 * t.delta[0]);
    let diff = (td.value - stationary).norm();
    Ok(Outcome {
        pass: Some(diff < 1e-2),
        measured: format!(
            "S = {:.5}{:+.5}i vs {:.5}{:+.5}i, |diff| {diff:.1e}",
            td.value.re, td.value.im, stationary.re, stationary.im
        ),
        expected: "< 1e-2".into(),
        values: vec![("difference", diff), ("delta0", t.delta[0])],
    })
}

fn c11_hilbert_schmidt() -> Result<Outcome> {
    let m = gaussian(1.0);
    let a = hs_norm_resolvent_weight(&m, 1.0)?;
    let b = hs_norm_resolvent_weight(&m, 16.0)?;
    let reference = PI.sqrt() / 8.0;
    let rel = (a.value - reference).abs() / reference;
    let ratio = b.value / a.value;
    Ok(Outcome {
        pass: Some(rel < 0.01 && (ratio - 0.25).abs() < 1e-12),
        measured: format!("{:.8} (rel {rel:.1e}), ratio c->16c {ratio:.15}", a.value),
        expected: format!("{reference:.8} within 1%, ratio 0.25"),
        values: vec![("value", a.value), ("reference", reference), ("ratio", ratio)],
    })
}

fn c12_mourre() -> Result<Outcome> {
    let r = mourre_check(&PotentialModel::zero(), (1.0, 2.0), 1024)?;
    Ok(Outcome {
        pass: Some((r.min_eigenvalue - 4.0).abs() <= 0.1),
        measured: format!("{:.4} over {} states", r.min_eigenvalue, r.eigenvalues_in_window),
        expected: "4.0 +- 0.1".into(),
        values: vec![("min_eigenvalue", r.min_eigenvalue)],
    })
}

fn c13_kato() -> Result<Outcome> {
    let f = SpectralProfile::Gaussian { k: 2.0, sigma: 2.5, x0: 0.0 }.normalized()?.packet(Geometry::default_line())?;
    let a = kato_smoothness_integral(1.0, &f, &DEFAULT_PROBE_TIMES)?;
    let b = kato_smoothness_integral(0.25, &f, &DEFAULT_PROBE_TIMES)?;
    Ok(Outcome {
        pass: Some(a.last_growth < 0.01 && b.last_growth > 0.1),
        measured: format!("last-doubling growth r=1 {:.3}%, r=0.25 {:.1}%", 100.0 * a.last_growth, 100.0 * b.last_growth),
        expected: "< 1%, > 10%".into(),
        values: vec![("growth_r1", a.last_growth), ("growth_r025", b.last_growth)],
    })
}

fn c14_lap() -> Result<Outcome> {
    let eps = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let z = PotentialModel::zero();
    let a = lap_probe(&z, 1.0, 1.0, &eps)?;
    let b = lap_probe(&z, 1.0, 0.25, &eps)?;
    Ok(Outcome {
        pass: Some(a.last_change.abs() < 0.05 && b.last_change.abs() > 0.2),
        measured: format!("change r=1 {:.2}%, r=0.25 {:.1}%", 100.0 * a.last_change, 100.0 * b.last_change),
        expected: "< 5%, > 20%".into(),
        values: vec![("change_r1", a.last_change), ("change_r025", b.last_change)],
    })
}

fn c15_diagonal() -> Result<Outcome> {
    let angles = [0.5, 0.35, 0.25, 0.18, 0.12, 0.08, 0.05];
    let mut parts = Vec::new();
    let mut values = Vec::new();
    for (rho, key, theory_key) in [(0.75, "fit_rho075", "theory_rho075"), (1.0, "fit_rho1", "theory_rho1")] {
        let m = PotentialModel::power_tail(0.5, rho)?;
        let p = diagonal_exponent_probe(&m, 16.0, [0.0, 0.0, 1.0], &angles, 0)?;
        parts.push(format!(
            "rho={rho}: {:.2} vs {:.2}{}",
            p.fitted_exponent,
            p.theoretical_exponent,
            if p.unreliable { " (window-sensitive)" } else { "" }
        ));
        values.push((key, p.fitted_exponent));
        values.push((theory_key, p.theoretical_exponent));
    }
    Ok(Outcome {
        pass: None,
        measured: parts.join(", "),
        expected: "-(1 + 1/rho), informational".into(),
        values,
    })
}

/// Runs one criterion; errors count as failures.
pub fn criterion(id: usize, opts: &AcceptanceOptions) -> CriterionResult {
    let start = Instant::now();
    let out = match id {
        1 => c1_partial_wave(opts),
        2 => c2_unitarity(opts),
        3 => c3_born(),
        4 => c4_error_order(),
        5 => c5_eikonal(),
        6 => c6_residual(),
        7 => c7_s0(),
        8 => c8_free_asymptotics(),
        9 => c9_dichotomy(),
        10 => c10_time_domain(),
        11 => c11_hilbert_schmidt(),
        12 => c12_mourre(),
        13 => c13_kato(),
        14 => c14_lap(),
        15 => c15_diagonal(),
        _ => Err(crate::ScatterError::Parameter(format!("no criterion {id}"))),
    };
    let runtime_s = start.elapsed().as_secs_f64();
    match out {
        Ok(o) => CriterionResult {
            id,
            name: name(id),
            status: match o.pass {
                Some(true) => Status::Pass,
                Some(false) => Status::Fail,
                None => Status::Info,
            },
            measured: o.measured,
            expected: o.expected,
            values: o.values.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            runtime_s,
            error: None,
        },
        Err(e) => CriterionResult {
            id,
            name: name(id),
            status: Status::Fail,
            measured: "-".into(),
            expected: "-".into(),
            values: BTreeMap::new(),
            runtime_s,
            error: Some(e.to_string()),
        },
    }
}

/// Runs the selected criteria in order, reporting each as it finishes.
pub fn run(opts: &AcceptanceOptions, mut on_result: impl FnMut(&CriterionResult)) -> AcceptanceReport {
    let ids: Vec<usize> = match &opts.only {
        Some(v) => v.clone(),
        None => (1..=CRITERIA).collect(),
    };
    let mut results = Vec::new();
    for id in ids {
        let r = criterion(id, opts);
        on_result(&r);
        results.push(r);
    }
    let passed = results.iter().filter(|r| r.status == Status::Pass).count();
    let failed = results.iter().filter(|r| r.status == Status::Fail).count();
    AcceptanceReport { results, passed, failed }
}
