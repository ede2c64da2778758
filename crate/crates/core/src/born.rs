//! First Born approximation and the high-energy ray expansion.
//!
//! The ansatz `psi = exp(i x.xi) sum_n (2i|xi|)^{-n} b_n(x, xi_hat)` with
//! `b_0 = 1` turns the Schrödinger equation into the ray equations
//! `xi_hat . grad b_{n+1} = -Δ b_n + v b_n`, solved by integrating from
//! upstream infinity. For a radial potential every `b_n` is symmetric about
//! the `xi_hat` axis, so the recursion runs on an [`AxialGrid`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result, ScatterError};
use crate::numerics::{
    bessel_j0, gauss_legendre_on_breaks, integrate_half_line, log_log_slope, spherical_j, AxialGrid,
};
use crate::partialwave::{amplitude, default_l_max, phase_shift_table};
use crate::potentials::{japanese_bracket, PotentialKind, PotentialModel};

/// Half-angle of the excluded cone around the downstream direction.
pub const DEFAULT_CONE_DEG: f64 = 15.0;

/// Errors below this are indistinguishable from quadrature noise.
pub const KERNEL_FLOOR: f64 = 1e-10;

const RADIAL_CAP: f64 = 1e4;
const TAIL_TOL: f64 = 1e-10;

fn unit(v: [f64; 3]) -> Result<[f64; 3]> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return param("direction must be a nonzero finite vector");
    }
    Ok([v[0] / n, v[1] / n, v[2] / n])
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `int_0^R f(r) dr` on Gauss panels fine enough for oscillation `osc`,
/// with `R` where the potential has decayed to round-off.
fn radial_quadrature<F: Fn(f64) -> f64>(model: &PotentialModel, osc: f64, f: F) -> Result<(f64, f64)> {
    let scale = model.strength().abs().max(1.0);
    let end = match model.compact_radius() {
        Some(r) => r.max(1e-12),
        None => model.tail_radius(1e-17 * scale).min(RADIAL_CAP),
    };
    let mut panel = (model.range() / 16.0).clamp(1e-3, 1.0);
    if osc > 0.0 {
        panel = panel.min(PI / (2.0 * osc));
    }
    let mut breaks = vec![0.0];
    let mut fixed: Vec<f64> = model.breakpoints().into_iter().filter(|&b| b > 0.0 && b < end).collect();
    fixed.push(end);
    for stop in fixed {
        let from = *breaks.last().unwrap();
        let m = ((stop - from) / panel).ceil().max(1.0) as usize;
        for i in 1..=m {
            breaks.push(from + (stop - from) * i as f64 / m as f64);
        }
    }
    let rule = gauss_legendre_on_breaks(16, &breaks)?;
    Ok((rule.integrate(f), end))
}

fn power_tail_params(model: &PotentialModel) -> Option<(f64, f64)> {
    match model.kind {
        PotentialKind::PowerTail { v0, rho } if v0 != 0.0 => Some((v0, rho)),
        _ => None,
    }
}

/// First Born amplitude `f1(theta) = -(4 pi)^{-1} int exp(-i q.x) v dx`.
pub fn born_first_amplitude(model: &PotentialModel, k: f64, theta: f64) -> Result<Complex64> {
    if !(k > 0.0) {
        return param(format!("k must be positive, got {k}"));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(ScatterError::Domain(format!("theta = {theta} outside [0, pi]")));
    }
    if model.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let q = 2.0 * k * (0.5 * theta).sin();
    born_at_momentum_transfer(model, q).map(|v| Complex64::new(v, 0.0))
}

/// `-(4 pi)^{-1} int exp(-i q.x) v(x) dx` for radial `v`.
pub(crate) fn born_at_momentum_transfer(model: &PotentialModel, q: f64) -> Result<f64> {
    if model.is_zero() {
        return Ok(0.0);
    }
    if q < 1e-10 {
        if !model.is_integrable_3d() {
            return Err(ScatterError::Convergence(format!(
                "forward Born amplitude needs int |v| < inf; {} with rho = {} is not integrable",
                model.name(),
                model.rho
            )));
        }
        let (v, end) = radial_quadrature(model, 0.0, |r| r * model.r_times_v(r))?;
        let tail = match power_tail_params(model) {
            Some((v0, rho)) => v0 * end.powf(3.0 - rho) / (rho - 3.0),
            None => 0.0,
        };
        return Ok(-(v + tail));
    }
    let (mut v, end) = radial_quadrature(model, q, |r| model.r_times_v(r) * (q * r).sin())?;
    if let Some((v0, rho)) = power_tail_params(model) {
        if rho <= 1.0 {
            return Err(ScatterError::Convergence(format!(
                "r v(r) does not decay for rho = {rho}; the oscillatory tail diverges"
            )));
        }
        // int_R^inf g sin(qr) dr for g = r v ~ v0 r^{1-rho}, by parts.
        let g = model.r_times_v(end);
        let dg = v0 * (1.0 - rho) * end.powf(-rho);
        let ddg = v0 * (1.0 - rho) * (-rho) * end.powf(-rho - 1.0);
        let (s, c) = (q * end).sin_cos();
        v += g * c / q + dg * s / (q * q);
        let rest = ddg.abs() / q.powi(3);
        if rest > TAIL_TOL {
            return Err(ScatterError::Convergence(format!("oscillatory tail estimate {rest:e} above tolerance")));
        }
    }
    Ok(-v / q)
}

/// First-order Born phase shift `-k int v j_l(kr)^2 r^2 dr`.
pub fn born_first_phase_shift(model: &PotentialModel, k: f64, l: usize) -> Result<f64> {
    if !(k > 0.0) {
        return param(format!("k must be positive, got {k}"));
    }
    if model.is_zero() {
        return Ok(0.0);
    }
    let (mut v, end) = radial_quadrature(model, 2.0 * k, |r| {
        let j = spherical_j(l, k * r);
        model.r_times_v(r) * r * j * j
    })?;
    if let Some((v0, rho)) = power_tail_params(model) {
        if rho <= 1.0 {
            return Err(ScatterError::Convergence(format!("int v j_l^2 r^2 dr diverges for rho = {rho}")));
        }
        // j_l^2 r^2 averages to 1 / (2 k^2) far out.
        v += v0 * end.powf(1.0 - rho) / ((rho - 1.0) * 2.0 * k * k);
        let rest = (v0 * end.powf(-rho) / k.powi(3)).abs();
        if rest > TAIL_TOL {
            return Err(ScatterError::Convergence(format!("phase-shift tail estimate {rest:e} above tolerance")));
        }
    }
    Ok(-k * v)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HighEnergyExpansion {
    /// Highest order `N` computed.
    pub order: usize,
    /// Unit direction of the incoming wave; the grid's z axis.
    pub omega_prime: [f64; 3],
    pub grid: AxialGrid,
    /// `b[n]` on the grid, `n = 0..=N`.
    pub b: Vec<Vec<Complex64>>,
    /// `-Δ b_N + v b_N`; the remainder is `(2i|xi|)^{-N}` times this.
    pub remainder_core: Vec<Complex64>,
    pub cone_half_angle: f64,
}

impl HighEnergyExpansion {
    /// Cylindrical coordinates `(rho, z)` of `x` about the `omega_prime` axis.
    pub fn local(&self, x: &[f64; 3]) -> (f64, f64) {
        let z = dot(x, &self.omega_prime);
        let r2 = dot(x, x);
        ((r2 - z * z).max(0.0).sqrt(), z)
    }

    /// Whether `x` lies outside the downstream cone `x_hat ≈ omega_prime`.
    pub fn off_cone(&self, x: &[f64; 3]) -> bool {
        let (rho, z) = self.local(x);
        z <= 0.0 || rho.atan2(z) > self.cone_half_angle
    }

    pub fn b_at(&self, n: usize, x: &[f64; 3]) -> Option<Complex64> {
        let (rho, z) = self.local(x);
        self.grid.interpolate(self.b.get(n)?, rho, z)
    }

    pub fn remainder(&self, xi_norm: f64) -> Vec<Complex64> {
        let f = Complex64::new(0.0, 2.0 * xi_norm).powi(-(self.order as i32));
        self.remainder_core.iter().map(|r| r * f).collect()
    }

    /// Fitted exponent `p` in `|b_n| ~ <x>^{-p}` along the ray at `angle`
    /// (radians from `omega_prime`) through the given radii.
    pub fn decay_exponent(&self, n: usize, angle: f64, radii: &[f64]) -> Result<f64> {
        let cone = self.cone_half_angle;
        if angle < cone {
            return Err(ScatterError::Domain("decay ray inside the excluded cone".into()));
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &r in radii {
            let v = self
                .grid
                .interpolate(&self.b[n], r * angle.sin(), r * angle.cos())
                .ok_or_else(|| ScatterError::Domain(format!("radius {r} outside the grid")))?;
            xs.push(japanese_bracket(r));
            ys.push(v.norm());
        }
        Ok(-log_log_slope(&xs, &ys))
    }
}

/// Grid wide enough for the potential, spacing `h`.
pub fn default_expansion_grid(model: &PotentialModel, h: f64) -> Result<AxialGrid> {
    let scale = model.strength().abs().max(1.0);
    let r = match model.compact_radius() {
        Some(r) => r,
        None => model.tail_radius(1e-12 * scale),
    };
    if !r.is_finite() || r > 200.0 {
        return Err(ScatterError::Domain(format!("{} is too extended for a finite ray grid", model.name())));
    }
    let ext = r.max(1.0) + 1.0;
    AxialGrid::new(h, ext, -ext, ext)
}

/// Ray recursion for `b_0..=b_N` along `omega_prime` (magnitude ignored).
pub fn transport_coefficients(
    model: &PotentialModel,
    omega_prime: [f64; 3],
    grid: AxialGrid,
    order: usize,
) -> Result<HighEnergyExpansion> {
    let dir = unit(omega_prime)?;
    if !(model.is_short_range() || model.compact_radius().is_some()) {
        return Err(ScatterError::Domain(format!(
            "ray integrals diverge for long-range {} (rho = {})",
            model.name(),
            model.rho
        )));
    }
    let v = grid.sample(|rho, z| model.radial((rho * rho + z * z).sqrt()));
    let mut b = vec![vec![Complex64::new(1.0, 0.0); grid.len()]];
    // Upstream part of the first ray integral, before the grid starts.
    let inflow: Vec<f64> = (0..grid.n_rho)
        .map(|i| {
            let rho = grid.rho(i);
            let (val, _) = integrate_half_line(
                |s| model.radial((rho * rho + (grid.z_min - s).powi(2)).sqrt()),
                1.0,
                1e-14,
                60,
            );
            val
        })
        .collect();
    let mut core = Vec::new();
    for n in 0..=order {
        let lap = grid.laplacian(&b[n]);
        let f: Vec<Complex64> = lap.iter().zip(&v).zip(&b[n]).map(|((l, v), b)| -l + v * b).collect();
        if n == order {
            core = f;
            break;
        }
        let mut next = grid.cumulative_z(&f, true);
        if n == 0 {
            for i in 0..grid.n_rho {
                for j in 0..grid.n_z {
                    next[grid.idx(i, j)] += inflow[i];
                }
            }
        }
        b.push(next);
    }
    Ok(HighEnergyExpansion {
        order,
        omega_prime: dir,
        grid,
        b,
        remainder_core: core,
        cone_half_angle: DEFAULT_CONE_DEG.to_radians(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BornKernelSample {
    pub lambda: f64,
    pub omega: [f64; 3],
    pub omega_prime: [f64; 3],
    pub value: Complex64,
    pub order: usize,
}

/// Spacing that resolves `exp(i k x.(omega' - omega))` and the potential.
fn kernel_grid_step(k: f64) -> f64 {
    (0.5 / k).min(0.05)
}

/// Truncated high-energy kernel `k_N(omega, omega', lambda)` of `S - Id`, `d = 3`.
pub fn high_energy_kernel(
    model: &PotentialModel,
    lambda: f64,
    omega: [f64; 3],
    omega_prime: [f64; 3],
    order: usize,
) -> Result<BornKernelSample> {
    if !(lambda > 0.0) {
        return param(format!("lambda must be positive, got {lambda}"));
    }
    let w = unit(omega)?;
    let wp = unit(omega_prime)?;
    if !(model.compact_radius().is_some() || model.decays_super_polynomially()) {
        return Err(ScatterError::Domain(format!(
            "kernel expansion needs compact support or fast decay; {} has rho = {}",
            model.name(),
            model.rho
        )));
    }
    let k = lambda.sqrt();
    let zero = Complex64::new(0.0, 0.0);
    let mut value = zero;
    if !model.is_zero() {
        let cos_t = dot(&w, &wp).clamp(-1.0, 1.0);
        let sin_t = (1.0 - cos_t * cos_t).sqrt();
        let q = k * (2.0 - 2.0 * cos_t).max(0.0).sqrt();
        // n = 0: b_0 = 1, so the integral is the radial Born transform.
        let i0 = -4.0 * PI * born_at_momentum_transfer(model, q)?;
        let mut sum = Complex64::new(i0, 0.0);
        if order > 0 {
            let grid = default_expansion_grid(model, kernel_grid_step(k))?;
            let exp = transport_coefficients(model, wp, grid, order)?;
            let weights = grid.volume_weights();
            let phase: Vec<Complex64> = grid.sample(|rho, z| {
                let r = (rho * rho + z * z).sqrt();
                Complex64::from_polar(model.radial(r) * bessel_j0(k * rho * sin_t), k * z * (1.0 - cos_t))
            });
            let ik2 = Complex64::new(0.0, 2.0 * k);
            for n in 1..=order {
                let integral: Complex64 = exp.b[n]
                    .iter()
                    .zip(&phase)
                    .zip(&weights)
                    .map(|((b, p), w)| b * p * *w)
                    .sum();
                sum += integral * ik2.powi(-(n as i32));
            }
        }
        value = Complex64::new(0.0, -PI) * (2.0 * PI).powi(-3) * k * sum;
    }
    Ok(BornKernelSample { lambda, omega: w, omega_prime: wp, value, order })
}

/// Exact kernel `(ik/2pi) f(theta)` of `S - Id` from partial waves.
pub fn exact_kernel(model: &PotentialModel, lambda: f64, theta: f64) -> Result<Complex64> {
    let k = lambda.sqrt();
    let table = phase_shift_table(model, k, default_l_max(model, k))?;
    Ok(Complex64::new(0.0, k / (2.0 * PI)) * amplitude(&table, theta)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorOrderReport {
    pub order: usize,
    pub lambdas: Vec<f64>,
    pub exact: Vec<Complex64>,
    pub truncated: Vec<Complex64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub theoretical_slope: f64,
    /// Some error fell below [`KERNEL_FLOOR`]; the slope is unreliable.
    pub floor_warning: bool,
}

/// Fitted slope of `log |k_exact - k_N|` against `log lambda`.
pub fn measure_error_order(
    model: &PotentialModel,
    lambdas: &[f64],
    omega: [f64; 3],
    omega_prime: [f64; 3],
    order: usize,
) -> Result<ErrorOrderReport> {
    if lambdas.len() < 4 {
        return param("need at least four energies");
    }
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) || !(lambdas[0] > 0.0) {
        return param("energies must be positive and increasing");
    }
    if lambdas[lambdas.len() - 1] < 10.0 * lambdas[0] * (1.0 - 1e-12) {
        eprintln!("warning: energies span less than a decade");
    }
    let theta = dot(&unit(omega)?, &unit(omega_prime)?).clamp(-1.0, 1.0).acos();
    let mut exact = Vec::new();
    let mut truncated = Vec::new();
    let mut errors = Vec::new();
    for &lam in lambdas {
        let e = if model.is_zero() { Complex64::new(0.0, 0.0) } else { exact_kernel(model, lam, theta)? };
        let t = high_energy_kernel(model, lam, omega, omega_prime, order)?.value;
        exact.push(e);
        truncated.push(t);
        errors.push((e - t).norm());
    }
    let floor_warning = errors.iter().any(|&e| e < KERNEL_FLOOR);
    let slope = if errors.iter().all(|&e| e > 0.0) { log_log_slope(lambdas, &errors) } else { f64::NAN };
    Ok(ErrorOrderReport {
        order,
        lambdas: lambdas.to_vec(),
        exact,
        truncated,
        errors,
        slope,
        theoretical_slope: -(order as f64) / 2.0,
        floor_warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn yukawa_closed_form() {
        let m = PotentialModel::yukawa(1.0, 1.0).unwrap();
        let f = born_first_amplitude(&m, 1.0, PI).unwrap();
        assert!((f.re + 0.2).abs() < 1e-10, "{f}");
    }

    #[test]
    fn gaussian_forward() {
        let m = PotentialModel::gaussian_well(-1.0, 1.0).unwrap();
        let f = born_first_amplitude(&m, 1.0, 0.0).unwrap();
        assert!((f.re - PI.sqrt() / 4.0).abs() < 1e-10, "{f}");
    }

    #[test]
    fn square_well_phase_shift_closed_form() {
        let (v0, r, k) = (0.7, 1.3, 1.1);
        let m = PotentialModel::square_well(v0, r).unwrap();
        let d = born_first_phase_shift(&m, k, 0).unwrap();
        let expect = (v0 / k) * (r / 2.0 - (2.0 * k * r).sin() / (4.0 * k));
        assert!((d - expect).abs() < 1e-12, "{d} vs {expect}");
    }

    #[test]
    fn divergent_cases() {
        let m = PotentialModel::power_tail(1.0, 2.0).unwrap();
        assert!(matches!(born_first_amplitude(&m, 1.0, 0.0), Err(ScatterError::Convergence(_))));
        let m = PotentialModel::power_tail(1.0, 1.0).unwrap();
        assert!(born_first_phase_shift(&m, 1.0, 0).is_err());
        assert!(transport_coefficients(&m, [0.0, 0.0, 1.0], AxialGrid::new(0.1, 2.0, -2.0, 2.0).unwrap(), 1).is_err());
    }

    #[test]
    fn zero_potential() {
        let m = PotentialModel::zero();
        assert_eq!(born_first_amplitude(&m, 2.0, 1.0).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(born_first_phase_shift(&m, 2.0, 3).unwrap(), 0.0);
        let s = high_energy_kernel(&m, 25.0, [1.0, 0.0, 0.0], [0.0, 0.0, 1.0], 2).unwrap();
        assert_eq!(s.value, Complex64::new(0.0, 0.0));
    }
}
