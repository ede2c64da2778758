//! Eikonal phases, transport corrections and the plane-integral kernel `s_0`.
//!
//! Radial potentials make every field symmetric about `xi_hat`, so the phase
//! corrections `phi_n`, their total `Phi` and the amplitudes `b_n` live on an
//! [`AxialGrid`] with z along `xi_hat`. `Sign::Plus` fields are regular away
//! from `x_hat = -xi_hat` and integrate from downstream infinity,
//! `Sign::Minus` fields are the mirror image.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result, ScatterError};
use crate::numerics::{gauss_legendre, integrate_half_line, log_log_slope, AxialGrid};
use crate::potentials::{japanese_bracket, PotentialKind, PotentialModel};

/// Half-angle of the cone removed around `x_hat = -+xi_hat`.
pub const CONE_HALF_ANGLE_DEG: f64 = 15.0;

/// Fraction of the window radius over which the taper falls from 1 to 0.
pub const TAPER_FRACTION: f64 = 0.2;

/// Enlargement used for the window-sensitivity estimate.
pub const WINDOW_GROWTH: f64 = 1.25;

/// Relative window sensitivity above which `s_0` is flagged.
pub const WINDOW_TOLERANCE: f64 = 0.1;

/// Truncation tail allowed for a phase integral.
pub const PHASE_TAIL_TOL: f64 = 1e-8;

/// Relative disagreement of gradient estimates that marks a grid as too coarse.
pub const GRADIENT_TOLERANCE: f64 = 1e-4;

/// Cap `omega . omega0 > CAP_DELTA` for the plane formula.
pub const CAP_DELTA: f64 = 0.5;

/// Phase corrections beyond `phi_3` are not implemented.
pub const MAX_N0: usize = 3;

const WINDOW_CAP: f64 = 600.0;
const POINTS_PER_PANEL: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

fn unit(v: [f64; 3]) -> Result<[f64; 3]> {
    let n = norm3(&v);
    if !(n > 0.0) || !n.is_finite() {
        return param("direction must be a nonzero finite vector");
    }
    Ok([v[0] / n, v[1] / n, v[2] / n])
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn cplx(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Length scale of the potential's core.
fn core_scale(model: &PotentialModel) -> f64 {
    match model.kind {
        PotentialKind::GaussianWell { width, .. } => width,
        PotentialKind::Yukawa { mu, .. } => 1.0 / mu,
        PotentialKind::SquareWell { radius, .. } | PotentialKind::CompactBump { radius, .. } => radius,
        PotentialKind::PowerTail { .. } | PotentialKind::Zero => 1.0,
    }
}

/// Whether the cone around `x_hat = -sign * xi_hat` contains `(rho, z)`.
fn in_cone(rho: f64, z: f64, sign: Sign, half_angle: f64) -> bool {
    let down = -sign.value() * z;
    if rho == 0.0 && z == 0.0 {
        return false;
    }
    down > 0.0 && rho.atan2(down) < half_angle
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let r = gauss_legendre(16, -1.0, 1.0).expect("16-point rule");
        (r.nodes, r.weights)
    })
}

fn panel<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64) -> f64 {
    let (x, w) = gl16();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    x.iter().zip(w).map(|(t, w)| w * g(mid + half * t)).sum::<f64>() * half
}

/// `int_0^inf g(t) dt` for an integrand with structure of width `w` around
/// `t_star` and of width `core` near 0; `kinks` are known discontinuities.
/// Returns the value and the estimated neglected tail.
fn ray_integral<F: Fn(f64) -> f64>(g: F, t_star: f64, w: f64, core: f64, kinks: &[f64]) -> (f64, f64) {
    let end = t_star.max(0.0) + 8.0 * w.max(core);
    let mut pts = vec![0.0, end];
    let mut s = core / 8.0;
    while s < end {
        pts.push(s);
        s *= 2.0;
    }
    if t_star > 0.0 {
        pts.push(t_star);
        let mut d = w / 8.0;
        while d < end {
            pts.push(t_star - d);
            pts.push(t_star + d);
            d *= 2.0;
        }
    }
    pts.extend_from_slice(kinks);
    pts.retain(|&p| (0.0..=end).contains(&p));
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * end);
    let body: f64 = pts.windows(2).map(|p| panel(&g, p[0], p[1])).sum();
    let (tail, est) = integrate_half_line(|s| g(end + s), end, 1e-15, 100);
    (body + tail, est)
}

/// Ray parameters `t > 0` where `|x + sign t xi_hat|` or `t` crosses a breakpoint radius.
fn crossings(model: &PotentialModel, rho: f64, z: f64, sign: Sign) -> Vec<f64> {
    let mut out = Vec::new();
    for r in model.breakpoints() {
        out.push(r);
        let disc = r * r - rho * rho;
        if disc > 0.0 {
            let c = -sign.value() * z;
            out.push(c - disc.sqrt());
            out.push(c + disc.sqrt());
        }
    }
    out
}

/// `phi_1` and its rho derivative at local coordinates `(rho, z)`:
/// `sign int_0^inf (v(x + sign t xi_hat) - v(t xi_hat)) dt`.
fn phi1_at(model: &PotentialModel, rho: f64, z: f64, sign: Sign, with_gradient: bool) -> (f64, f64, f64) {
    let s = sign.value();
    let core = core_scale(model);
    let w = rho.max(core);
    let t_star = -s * z;
    let kinks = crossings(model, rho, z, sign);
    let r_at = |t: f64| (rho * rho + (z + s * t).powi(2)).sqrt();
    let (val, tail) = ray_integral(|t| model.radial(r_at(t)) - model.radial(t), t_star, w, core, &kinks);
    let mut d_rho = 0.0;
    let mut tail_d = 0.0;
    if with_gradient && rho > 0.0 {
        let (g, tg) = ray_integral(
            |t| {
                let r = r_at(t);
                if r > 0.0 {
                    model.radial_derivative(r) * rho / r
                } else {
                    0.0
                }
            },
            t_star,
            w,
            core,
            &kinks,
        );
        d_rho = s * g;
        tail_d = tg;
    }
    (s * val, d_rho, tail.max(tail_d))
}

fn check_regular(model: &PotentialModel) -> Result<()> {
    if model.coulomb_coefficient() != 0.0 {
        return Err(ScatterError::Domain(format!(
            "{} is singular at the origin; the reference ray integral diverges",
            model.name()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseIntegral {
    pub value: f64,
    /// Estimated truncation tail of the quadrature.
    pub tail: f64,
}

/// `Phi_+-(x, xi) = +-(1/2) int_0^inf (v(x +- t xi) - v(+- t xi)) dt`.
pub fn eikonal_phase_integral(model: &PotentialModel, x: [f64; 3], xi: [f64; 3], sign: Sign) -> Result<PhaseIntegral> {
    let k = norm3(&xi);
    if !(k > 0.0) || !k.is_finite() {
        return param("xi must be a nonzero finite vector");
    }
    if x.iter().any(|c| !c.is_finite()) {
        return param("x must be finite");
    }
    if model.is_zero() {
        return Ok(PhaseIntegral { value: 0.0, tail: 0.0 });
    }
    if !(model.rho > 0.5) {
        return param(format!("phase integral needs rho > 1/2, got {}", model.rho));
    }
    check_regular(model)?;
    let xh = [xi[0] / k, xi[1] / k, xi[2] / k];
    let z = dot(&x, &xh);
    let rho = (dot(&x, &x) - z * z).max(0.0).sqrt();
    if in_cone(rho, z, sign, CONE_HALF_ANGLE_DEG.to_radians()) {
        return Err(ScatterError::Domain("x lies in the excluded cone".into()));
    }
    let (val, _, tail) = phi1_at(model, rho, z, sign, false);
    let out = PhaseIntegral { value: val / (2.0 * k), tail: tail / (2.0 * k) };
    if !(out.tail < PHASE_TAIL_TOL) {
        return Err(ScatterError::Convergence(format!("phase integral tail {:e}", out.tail)));
    }
    Ok(out)
}

/// Number of phase corrections used by default: none for short range
/// (where `Phi = 0` is admissible), `ceil(1.5 / rho)` otherwise.
pub fn default_n0(model: &PotentialModel) -> Result<usize> {
    if model.is_short_range() || model.is_zero() {
        return Ok(0);
    }
    if !(model.rho > 0.5) {
        return param(format!("eikonal corrections need rho > 1/2, got {}", model.rho));
    }
    Ok(((1.5 / model.rho).ceil() as usize).min(MAX_N0))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EikonalData {
    pub sign: Sign,
    pub xi_hat: [f64; 3],
    pub xi_norm: f64,
    pub n0: usize,
    pub grid: AxialGrid,
    /// `phi_n[n]`, `n = 0..=n0`; even orders vanish.
    pub phi_n: Vec<Vec<f64>>,
    /// `Phi = sum_n (2|xi|)^{-n} phi_n`.
    pub phi: Vec<f64>,
    pub phi_rho: Vec<f64>,
    pub phi_z: Vec<f64>,
    pub lap_phi: Vec<f64>,
    /// `q = 2 xi . grad Phi + |grad Phi|^2 + v`.
    pub q: Vec<f64>,
    pub cone_half_angle: f64,
    /// Largest relative disagreement between two gradient estimates of `phi_n`.
    pub gradient_disagreement: f64,
    pub coarse_grid: bool,
    /// `n0 rho > 1`, the condition for a short-range residual `q`.
    pub short_range_residual: bool,
}

impl EikonalData {
    pub fn off_cone(&self, rho: f64, z: f64) -> bool {
        !in_cone(rho, z, self.sign, self.cone_half_angle)
    }

    fn ray_values(&self, field: &[f64], angle: f64, radii: &[f64], odd: bool) -> Result<(Vec<f64>, Vec<f64>)> {
        let (s, c) = angle.sin_cos();
        if !self.off_cone(s, c) {
            return Err(ScatterError::Domain("sampling ray inside the excluded cone".into()));
        }
        let f = cplx(field);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &r in radii {
            let v = self
                .grid
                .interpolate_with_parity(&f, r * s, r * c, odd)
                .ok_or_else(|| ScatterError::Domain(format!("radius {r} outside the grid")))?;
            xs.push(japanese_bracket(r));
            ys.push(v.re);
        }
        Ok((xs, ys))
    }

    /// Fitted `p` in `|grad Phi| ~ <x>^{-p}` along the ray at `angle` from `xi_hat`.
    pub fn gradient_decay_exponent(&self, angle: f64, radii: &[f64]) -> Result<f64> {
        let (xs, a) = self.ray_values(&self.phi_rho, angle, radii, true)?;
        let (_, b) = self.ray_values(&self.phi_z, angle, radii, false)?;
        let ys: Vec<f64> = a.iter().zip(&b).map(|(a, b)| a.hypot(*b)).collect();
        Ok(-log_log_slope(&xs, &ys))
    }

    /// Fitted `p` in `|q| ~ <x>^{-p}`, to compare with `n0 rho`.
    pub fn q_decay_exponent(&self, angle: f64, radii: &[f64]) -> Result<f64> {
        let (xs, ys) = self.ray_values(&self.q, angle, radii, false)?;
        let ys: Vec<f64> = ys.iter().map(|v| v.abs()).collect();
        Ok(-log_log_slope(&xs, &ys))
    }

    /// `Phi` at a point given in local coordinates.
    pub fn phi_at(&self, rho: f64, z: f64) -> Option<f64> {
        self.grid.interpolate(&cplx(&self.phi), rho, z).map(|c| c.re)
    }
}

/// `d/drho` of an odd-in-rho field, second order, mirrored at the axis.
fn rho_derivative_odd(grid: &AxialGrid, f: &[f64]) -> Vec<f64> {
    let h = grid.h;
    let mut out = vec![0.0; grid.len()];
    for i in 0..grid.n_rho {
        for j in 0..grid.n_z {
            let k = grid.idx(i, j);
            out[k] = if i == 0 {
                f[grid.idx(1, j)] / h
            } else if i + 1 < grid.n_rho {
                (f[grid.idx(i + 1, j)] - f[grid.idx(i - 1, j)]) / (2.0 * h)
            } else {
                (3.0 * f[k] - 4.0 * f[grid.idx(i - 1, j)] + f[grid.idx(i - 2, j)]) / (2.0 * h)
            };
        }
    }
    out
}

/// Successive approximations for the eikonal phase along `xi_hat`.
///
/// `n0 = 0` (short range only) gives `Phi = 0` and `q = v`.
pub fn eikonal_iterate(
    model: &PotentialModel,
    xi_hat: [f64; 3],
    xi_norm: f64,
    n0: usize,
    grid: AxialGrid,
    sign: Sign,
) -> Result<EikonalData> {
    let dir = unit(xi_hat)?;
    if !(xi_norm > 0.0) || !xi_norm.is_finite() {
        return param("xi_norm must be positive");
    }
    if n0 > MAX_N0 {
        return param(format!("n0 = {n0} exceeds the implemented {MAX_N0}"));
    }
    if n0 == 0 && !(model.is_short_range() || model.is_zero()) {
        return param("n0 = 0 requires a short-range potential");
    }
    if n0 > 0 && !(model.rho > 0.5) && !model.is_zero() {
        return param(format!("eikonal corrections need rho > 1/2, got {}", model.rho));
    }
    if !model.breakpoints().is_empty() {
        return Err(ScatterError::Domain(format!("{} has jumps; phase gradients are singular", model.name())));
    }
    check_regular(model)?;
    let two_k = 2.0 * xi_norm;
    let len = grid.len();
    let v = grid.sample(|r, z| model.radial((r * r + z * z).sqrt()));
    let dvz = grid.sample(|r, z| {
        let s = (r * r + z * z).sqrt();
        if s > 0.0 {
            model.radial_derivative(s) * z / s
        } else {
            0.0
        }
    });
    let zero = vec![0.0; len];
    let mut phi_n = vec![zero.clone()];
    let mut grads: Vec<(Vec<f64>, Vec<f64>)> = vec![(zero.clone(), zero.clone())];
    let mut lap_n = vec![zero.clone()];
    let mut disagreement: f64 = 0.0;
    let mut tail: f64 = 0.0;

    if n0 >= 1 && !model.is_zero() {
        // Exact ray integrals on the regular edge row; inside the grid
        // d/dz phi_1 = -v and d/dz d_rho phi_1 = -d_rho v are integrated along z.
        let from_below = sign == Sign::Minus;
        let anchor_z = if from_below { grid.z_min } else { grid.z_max() };
        let anchor: Vec<(f64, f64, f64)> =
            (0..grid.n_rho).into_par_iter().map(|i| phi1_at(model, grid.rho(i), anchor_z, sign, true)).collect();
        let dvr = grid.sample(|r, z| {
            let s = (r * r + z * z).sqrt();
            if s > 0.0 {
                model.radial_derivative(s) * r / s
            } else {
                0.0
            }
        });
        let along_v = grid.cumulative_z(&cplx(&v), from_below);
        let along_dvr = grid.cumulative_z(&cplx(&dvr), from_below);
        let s = sign.value();
        let mut p1 = vec![0.0; len];
        let mut g_rho = vec![0.0; len];
        for (i, &(p, d, t)) in anchor.iter().enumerate() {
            tail = tail.max(t);
            for j in 0..grid.n_z {
                let k = grid.idx(i, j);
                p1[k] = p + s * along_v[k].re;
                g_rho[k] = d + s * along_dvr[k].re;
            }
        }
        let g_z: Vec<f64> = v.iter().map(|x| -x).collect();
        // Laplacian from the quadrature gradient: one finite difference instead of two.
        let d_rho = rho_derivative_odd(&grid, &g_rho);
        let lap1: Vec<f64> = (0..len)
            .map(|k| {
                let i = k / grid.n_z;
                let radial = if i == 0 { 2.0 * d_rho[k] } else { d_rho[k] + g_rho[k] / grid.rho(i) };
                radial - dvz[k]
            })
            .collect();
        // Finite-difference gradient of phi_1 against the quadrature one.
        let (fd_rho, fd_z) = grid.gradient(&cplx(&p1));
        let scale = g_rho.iter().chain(&g_z).fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        for i in 1..grid.n_rho.saturating_sub(1) {
            for j in 1..grid.n_z - 1 {
                if !in_cone(grid.rho(i), grid.z(j), sign, CONE_HALF_ANGLE_DEG.to_radians()) {
                    let k = grid.idx(i, j);
                    let e = (fd_rho[k].re - g_rho[k]).hypot(fd_z[k].re - g_z[k]);
                    disagreement = disagreement.max(e / scale);
                }
            }
        }
        phi_n.push(p1);
        grads.push((g_rho, g_z));
        lap_n.push(lap1);
    }
    if n0 >= 2 {
        phi_n.push(zero.clone());
        grads.push((zero.clone(), zero.clone()));
        lap_n.push(zero.clone());
    }
    if n0 >= 3 {
        let (p3, t3) = phi3_on_grid(model, &grid, sign, &grads[1])?;
        tail = tail.max(t3);
        let c = cplx(&p3);
        let (gr, gz) = grid.gradient(&c);
        let lap = grid.laplacian(&c);
        disagreement = disagreement.max(richardson_disagreement(&grid, &p3, sign));
        phi_n.push(p3);
        grads.push((gr.iter().map(|c| c.re).collect(), gz.iter().map(|c| c.re).collect()));
        lap_n.push(lap.iter().map(|c| c.re).collect());
    }
    if tail > PHASE_TAIL_TOL * two_k {
        return Err(ScatterError::Convergence(format!("phase quadrature tail {tail:e}")));
    }

    let mut phi = vec![0.0; len];
    let mut phi_rho = vec![0.0; len];
    let mut phi_z = vec![0.0; len];
    let mut lap_phi = vec![0.0; len];
    for n in 1..=n0 {
        let f = two_k.powi(-(n as i32));
        for k in 0..len {
            phi[k] += f * phi_n[n][k];
            phi_rho[k] += f * grads[n].0[k];
            phi_z[k] += f * grads[n].1[k];
            lap_phi[k] += f * lap_n[n][k];
        }
    }
    // Terms of |grad Phi|^2 that the recursion leaves unbalanced.
    let mut q = if n0 == 0 { v.clone() } else { vec![0.0; len] };
    for m in 1..=n0 {
        for p in 1..=n0 {
            if m + p >= n0 && m % 2 == 1 && p % 2 == 1 {
                let f = two_k.powi(-((m + p) as i32));
                for k in 0..len {
                    q[k] += f * (grads[m].0[k] * grads[p].0[k] + grads[m].1[k] * grads[p].1[k]);
                }
            }
        }
    }
    Ok(EikonalData {
        sign,
        xi_hat: dir,
        xi_norm,
        n0,
        grid,
        phi_n,
        phi,
        phi_rho,
        phi_z,
        lap_phi,
        q,
        cone_half_angle: CONE_HALF_ANGLE_DEG.to_radians(),
        gradient_disagreement: disagreement,
        coarse_grid: disagreement > GRADIENT_TOLERANCE,
        short_range_residual: model.is_zero() || (n0 == 0 && model.is_short_range()) || n0 as f64 * model.rho > 1.0,
    })
}

/// `|D_h f - D_2h f|` over the off-cone interior, relative to `max |D_h f|`.
fn richardson_disagreement(grid: &AxialGrid, f: &[f64], sign: Sign) -> f64 {
    let h = grid.h;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 2..grid.n_rho.saturating_sub(2) {
        for j in 2..grid.n_z.saturating_sub(2) {
            if in_cone(grid.rho(i), grid.z(j), sign, CONE_HALF_ANGLE_DEG.to_radians()) {
                continue;
            }
            let at = |a: usize, b: usize| f[grid.idx(a, b)];
            let r1 = (at(i + 1, j) - at(i - 1, j)) / (2.0 * h);
            let r2 = (at(i + 2, j) - at(i - 2, j)) / (4.0 * h);
            let z1 = (at(i, j + 1) - at(i, j - 1)) / (2.0 * h);
            let z2 = (at(i, j + 2) - at(i, j - 2)) / (4.0 * h);
            worst = worst.max((r1 - r2).hypot(z1 - z2));
            scale = scale.max(r1.hypot(z1));
        }
    }
    if scale > 0.0 {
        worst / scale
    } else {
        0.0
    }
}

/// `phi_3 = sign int_0^inf (|grad phi_1|^2(x + sign t xi_hat) - v(t)^2) dt`,
/// grid part by cumulative quadrature, the rest of each ray pointwise.
fn phi3_on_grid(
    model: &PotentialModel,
    grid: &AxialGrid,
    sign: Sign,
    grad1: &(Vec<f64>, Vec<f64>),
) -> Result<(Vec<f64>, f64)> {
    let s = sign.value();
    let sq: Vec<Complex64> = grad1.0.iter().zip(&grad1.1).map(|(a, b)| Complex64::new(a * a + b * b, 0.0)).collect();
    // int_z^{edge} along the ray direction.
    let along = grid.cumulative_z(&sq, sign == Sign::Minus);
    let edge = if sign == Sign::Plus { grid.z_max() } else { grid.z_min };
    let core = core_scale(model);
    let (v2, t0) = ray_integral(|t| model.radial(t).powi(2), 0.0, core, core, &[]);
    let beyond: Vec<(f64, f64)> = (0..grid.n_rho)
        .into_par_iter()
        .map(|i| {
            let rho = grid.rho(i);
            integrate_half_line(
                |t| {
                    let z = edge + s * t;
                    let (_, d_rho, _) = phi1_at(model, rho, z, sign, true);
                    let d_z = -model.radial((rho * rho + z * z).sqrt());
                    d_rho * d_rho + d_z * d_z
                },
                rho.max(core).max(edge.abs()),
                1e-14,
                80,
            )
        })
        .collect();
    let mut tail = t0;
    let mut out = vec![0.0; grid.len()];
    for i in 0..grid.n_rho {
        tail = tail.max(beyond[i].1);
        for j in 0..grid.n_z {
            let k = grid.idx(i, j);
            out[k] = s * (along[k].re + beyond[i].0 - v2);
        }
    }
    Ok((out, tail))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApproximateEigenfunction {
    pub sign: Sign,
    pub order: usize,
    pub lambda: f64,
    pub eikonal: EikonalData,
    /// `b[n]` on the eikonal grid, `b[0] = 1`.
    pub b: Vec<Vec<Complex64>>,
    /// `sum_n (2i|xi|)^{-n} b_n`.
    pub amplitude: Vec<Complex64>,
    /// `L^2` norm of `(-Δ + v - lambda) psi` over the off-cone grid interior.
    pub residual_norm: f64,
    /// Volume of that region, for normalized comparisons.
    pub region_volume: f64,
}

impl ApproximateEigenfunction {
    /// `psi` at a point in local coordinates.
    pub fn value_local(&self, rho: f64, z: f64) -> Option<Complex64> {
        let b = self.eikonal.grid.interpolate(&self.amplitude, rho, z)?;
        let phi = self.eikonal.phi_at(rho, z)?;
        Some(Complex64::from_polar(1.0, self.eikonal.xi_norm * z + phi) * b)
    }

    /// `psi` at a point in space.
    pub fn value_at(&self, x: [f64; 3]) -> Option<Complex64> {
        let z = dot(&x, &self.eikonal.xi_hat);
        let rho = (dot(&x, &x) - z * z).max(0.0).sqrt();
        self.value_local(rho, z)
    }

    /// Max `|psi|` over the off-cone grid.
    pub fn max_modulus_off_cone(&self) -> f64 {
        let g = &self.eikonal.grid;
        let mut m: f64 = 0.0;
        for i in 0..g.n_rho {
            for j in 0..g.n_z {
                if self.eikonal.off_cone(g.rho(i), g.z(j)) {
                    m = m.max(self.amplitude[g.idx(i, j)].norm());
                }
            }
        }
        m
    }
}

/// Fourth-order central `d/dz`, second order near the edges.
fn z_derivative4(grid: &AxialGrid, f: &[Complex64]) -> Vec<Complex64> {
    let h = grid.h;
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for i in 0..grid.n_rho {
        for j in 0..grid.n_z {
            let at = |b: usize| f[grid.idx(i, b)];
            out[grid.idx(i, j)] = if j >= 2 && j + 2 < grid.n_z {
                (at(j - 2) - 8.0 * at(j - 1) + 8.0 * at(j + 1) - at(j + 2)) / (12.0 * h)
            } else if j >= 1 && j + 1 < grid.n_z {
                (at(j + 1) - at(j - 1)) / (2.0 * h)
            } else if j == 0 {
                (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
            } else {
                (3.0 * at(j) - 4.0 * at(j - 1) + at(j - 2)) / (2.0 * h)
            };
        }
    }
    out
}

/// Transport recursion `xi_hat . grad b_{n+1} = f_n` and the assembled `psi`.
pub fn transport_solve(model: &PotentialModel, eikonal: &EikonalData, order: usize) -> Result<ApproximateEigenfunction> {
    let grid = eikonal.grid;
    if grid.n_rho < 5 || grid.n_z < 5 {
        return param("transport grid needs at least 5 nodes per direction");
    }
    let k = eikonal.xi_norm;
    let ik2 = Complex64::new(0.0, 2.0 * k);
    let i1 = Complex64::new(0.0, 1.0);
    let len = grid.len();
    let phi_rho = &eikonal.phi_rho;
    let phi_z = &eikonal.phi_z;
    // g b = -2i grad Phi . grad b - Δb - i ΔPhi b + q b
    let apply = |b: &[Complex64]| -> Vec<Complex64> {
        let (br, bz) = grid.gradient(b);
        let lap = grid.laplacian(b);
        (0..len)
            .map(|m| {
                -2.0 * i1 * (phi_rho[m] * br[m] + phi_z[m] * bz[m]) - lap[m] - i1 * eikonal.lap_phi[m] * b[m]
                    + eikonal.q[m] * b[m]
            })
            .collect()
    };
    let from_below = eikonal.sign == Sign::Minus;
    // With Phi = 0 the first source is v itself; add its part beyond the grid.
    let inflow: Vec<f64> = if eikonal.n0 == 0 && !model.is_zero() {
        let edge = if from_below { grid.z_min } else { grid.z_max() };
        (0..grid.n_rho)
            .map(|i| {
                let rho = grid.rho(i);
                let (val, _) = integrate_half_line(
                    |s| model.radial((rho * rho + (edge.abs() + s).powi(2)).sqrt()),
                    1.0,
                    1e-14,
                    60,
                );
                val
            })
            .collect()
    } else {
        vec![0.0; grid.n_rho]
    };
    let mut b = vec![vec![Complex64::new(1.0, 0.0); len]];
    for n in 0..order {
        let f = apply(&b[n]);
        let mut next = grid.cumulative_z(&f, from_below);
        if !from_below {
            for x in next.iter_mut() {
                *x = -*x;
            }
        }
        if n == 0 {
            let s = if from_below { 1.0 } else { -1.0 };
            for i in 0..grid.n_rho {
                for j in 0..grid.n_z {
                    next[grid.idx(i, j)] += s * inflow[i];
                }
            }
        }
        b.push(next);
    }
    let mut amp = vec![Complex64::new(0.0, 0.0); len];
    for (n, bn) in b.iter().enumerate() {
        let f = ik2.powi(-(n as i32));
        for (a, x) in amp.iter_mut().zip(bn) {
            *a += f * x;
        }
    }
    // Conjugated operator: exp(-i phi)(-Δ + v - lambda) exp(i phi) B.
    let dz = z_derivative4(&grid, &amp);
    let gb = apply(&amp);
    let weights = grid.volume_weights();
    let mut sum = 0.0;
    let mut vol = 0.0;
    for i in 0..grid.n_rho.saturating_sub(2) {
        for j in 2..grid.n_z.saturating_sub(2) {
            if !eikonal.off_cone(grid.rho(i), grid.z(j)) {
                continue;
            }
            let m = grid.idx(i, j);
            let r = -ik2 * dz[m] + gb[m];
            sum += weights[m] * r.norm_sqr();
            vol += weights[m];
        }
    }
    let residual_norm = sum.sqrt();
    if !residual_norm.is_finite() {
        return Err(ScatterError::Numerical("transport residual is not finite".into()));
    }
    Ok(ApproximateEigenfunction {
        sign: eikonal.sign,
        order,
        lambda: k * k,
        eikonal: eikonal.clone(),
        b,
        amplitude: amp,
        residual_norm,
        region_volume: vol,
    })
}

/// Grid step resolving the potential's core; power tails vary on the scale `<x>`.
fn transport_step(model: &PotentialModel) -> f64 {
    if model.decays_super_polynomially() {
        (core_scale(model) / 20.0).clamp(0.02, 0.25)
    } else {
        0.25
    }
}

/// `psi_+-` for direction `xi_hat` on a grid of the given extents.
pub fn approximate_eigenfunction(
    model: &PotentialModel,
    lambda: f64,
    sign: Sign,
    order: usize,
    grid: AxialGrid,
) -> Result<ApproximateEigenfunction> {
    if !(lambda > 0.0) {
        return param(format!("lambda must be positive, got {lambda}"));
    }
    let n0 = default_n0(model)?;
    let eik = eikonal_iterate(model, [0.0, 0.0, 1.0], lambda.sqrt(), n0, grid, sign)?;
    transport_solve(model, &eik, order)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct S0Sample {
    pub lambda: f64,
    pub omega: [f64; 3],
    pub omega_prime: [f64; 3],
    pub omega0: [f64; 3],
    pub order: usize,
    pub value: Complex64,
    /// Same integral on the window enlarged by [`WINDOW_GROWTH`].
    pub enlarged: Complex64,
    /// `|enlarged - value| / |value|`.
    pub window_sensitivity: f64,
    pub window_radius: f64,
    /// Unsubtracted plane-wave integral relative to its diagonal size.
    pub taper_floor: f64,
    pub converged: bool,
}

/// Shared `psi_+` and `psi_-` fields; radial symmetry lets one grid serve all directions.
struct PlaneFields {
    k: f64,
    grid: AxialGrid,
    plus: [Vec<Complex64>; 6],
    minus: [Vec<Complex64>; 6],
}

impl PlaneFields {
    fn new(model: &PotentialModel, lambda: f64, order: usize, rho_max: f64, z_half: f64) -> Result<Self> {
        let h = transport_step(model);
        let grid = AxialGrid::new(h, rho_max, -z_half, z_half)?;
        let fields = |sign: Sign| -> Result<[Vec<Complex64>; 6]> {
            let psi = approximate_eigenfunction(model, lambda, sign, order, grid)?;
            let (br, bz) = grid.gradient(&psi.amplitude);
            let e = &psi.eikonal;
            Ok([psi.amplitude.clone(), br, bz, cplx(&e.phi), cplx(&e.phi_rho), cplx(&e.phi_z)])
        };
        Ok(PlaneFields { k: lambda.sqrt(), grid, plus: fields(Sign::Plus)?, minus: fields(Sign::Minus)? })
    }

    /// `(psi, omega0 . grad psi)` at `y` for the wave along `dir`.
    fn eval(&self, f: &[Vec<Complex64>; 6], dir: &[f64; 3], omega0: &[f64; 3], y: &[f64; 3]) -> Option<(Complex64, Complex64)> {
        let z = dot(y, dir);
        let perp = [y[0] - z * dir[0], y[1] - z * dir[1], y[2] - z * dir[2]];
        let rho = norm3(&perp);
        let e_rho = if rho > 0.0 { dot(&perp, omega0) / rho } else { 0.0 };
        let e_z = dot(dir, omega0);
        let g = &self.grid;
        let b = g.interpolate(&f[0], rho, z)?;
        let b_r = g.interpolate_with_parity(&f[1], rho, z, true)?;
        let b_z = g.interpolate(&f[2], rho, z)?;
        let phi = g.interpolate(&f[3], rho, z)?.re;
        let p_r = g.interpolate_with_parity(&f[4], rho, z, true)?.re;
        let p_z = g.interpolate(&f[5], rho, z)?.re;
        let e = Complex64::from_polar(1.0, self.k * z + phi);
        let slope = self.k * e_z + p_r * e_rho + p_z * e_z;
        let d = e * (Complex64::new(0.0, slope) * b + b_r * e_rho + b_z * e_z);
        Some((e * b, d))
    }
}

/// C² step from 1 (s <= 1 - TAPER_FRACTION) to 0 (s >= 1).
fn taper(s: f64) -> f64 {
    let a = 1.0 - TAPER_FRACTION;
    if s <= a {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let t = (s - a) / TAPER_FRACTION;
        1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

fn plane_basis(w0: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let seed = if w0[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = dot(&seed, w0);
    let e1 = unit([seed[0] - d * w0[0], seed[1] - d * w0[1], seed[2] - d * w0[2]]).expect("nonzero");
    let e2 = [
        w0[1] * e1[2] - w0[2] * e1[1],
        w0[2] * e1[0] - w0[0] * e1[2],
        w0[0] * e1[1] - w0[1] * e1[0],
    ];
    (e1, e2)
}

/// Tapered window integral; returns `(s_0, free part)`, both with the constant prefactor.
fn plane_integral(
    fields: &PlaneFields,
    model_is_zero: bool,
    w: &[f64; 3],
    wp: &[f64; 3],
    w0: &[f64; 3],
    radius: f64,
    panel_width: f64,
) -> Result<(Complex64, Complex64)> {
    let k = fields.k;
    let panels = ((2.0 * radius / panel_width).ceil() as usize).max(1);
    let rule = crate::numerics::composite_gauss_legendre(POINTS_PER_PANEL, -radius, radius, panels)?;
    let (e1, e2) = plane_basis(w0);
    let free_slope = Complex64::new(0.0, k * (dot(w, w0) + dot(wp, w0)));
    let rows: Vec<Result<(Complex64, Complex64)>> = rule
        .nodes
        .par_iter()
        .zip(&rule.weights)
        .map(|(&a, &wa)| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut free = Complex64::new(0.0, 0.0);
            for (b, wb) in rule.iter() {
                let chi = taper(a.hypot(b) / radius);
                if chi == 0.0 {
                    continue;
                }
                let y = [a * e1[0] + b * e2[0], a * e1[1] + b * e2[1], a * e1[2] + b * e2[2]];
                let weight = wa * wb * chi;
                let plane = Complex64::from_polar(1.0, k * (dot(wp, &y) - dot(w, &y)));
                let f0 = plane * free_slope;
                free += weight * f0;
                if model_is_zero {
                    continue;
                }
                let outside = || ScatterError::Domain("plane window leaves the eigenfunction grid".into());
                let (pp, dp) = fields.eval(&fields.plus, w, w0, &y).ok_or_else(outside)?;
                let (pm, dm) = fields.eval(&fields.minus, wp, w0, &y).ok_or_else(outside)?;
                acc += weight * (pp.conj() * dm - dp.conj() * pm - f0);
            }
            Ok((acc, free))
        })
        .collect();
    let mut total = Complex64::new(0.0, 0.0);
    let mut free = Complex64::new(0.0, 0.0);
    for r in rows {
        let (a, f) = r?;
        total += a;
        free += f;
    }
    let pre = Complex64::new(0.0, -PI) * k * (2.0 * PI).powi(-3);
    Ok((pre * total, pre * free))
}

fn chord(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    norm3(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

/// Window radius: the potential's extent for short range; for long range
/// large enough to contain the stationary region of the phase difference and
/// many oscillations of `exp(i k (omega' - omega).y)` across the taper.
fn window_radius(model: &PotentialModel, k: f64, separation: f64) -> f64 {
    let base = if model.is_zero() {
        (12.0 / (TAPER_FRACTION * k * separation)).max(4.0)
    } else if model.decays_super_polynomially() {
        model.tail_radius(1e-10 * model.strength().abs().max(1.0)) + 2.0
    } else {
        let v0 = model.strength().abs();
        let stationary = (v0 / (k * k * separation)).powf(1.0 / model.rho);
        (3.0 * stationary).max(12.0 / (TAPER_FRACTION * k * separation)).max(10.0)
    };
    base.min(WINDOW_CAP)
}

fn check_cap(w: &[f64; 3], w0: &[f64; 3], name: &str) -> Result<()> {
    if !(dot(w, w0) > CAP_DELTA) {
        return Err(ScatterError::Domain(format!("{name} outside the cap omega . omega0 > {CAP_DELTA}")));
    }
    Ok(())
}

fn sample_with(
    fields: &PlaneFields,
    model: &PotentialModel,
    lambda: f64,
    w: [f64; 3],
    wp: [f64; 3],
    w0: [f64; 3],
    order: usize,
    radius: f64,
) -> Result<S0Sample> {
    let k = lambda.sqrt();
    let panel_width = if model.decays_super_polynomially() {
        (2.0 * PI / k).min(core_scale(model))
    } else {
        2.0 * PI / k
    };
    let (value, free) = plane_integral(fields, model.is_zero(), &w, &wp, &w0, radius, panel_width)?;
    let (enlarged, _) = plane_integral(fields, model.is_zero(), &w, &wp, &w0, WINDOW_GROWTH * radius, panel_width)?;
    let (_, diag) = plane_integral(fields, true, &wp, &wp, &w0, radius, panel_width)?;
    let window_sensitivity = if value.norm() > 0.0 {
        (enlarged - value).norm() / value.norm()
    } else if enlarged.norm() > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(S0Sample {
        lambda,
        omega: w,
        omega_prime: wp,
        omega0: w0,
        order,
        value,
        enlarged,
        window_sensitivity,
        window_radius: radius,
        taper_floor: free.norm() / diag.norm().max(f64::MIN_POSITIVE),
        converged: window_sensitivity <= WINDOW_TOLERANCE && radius < WINDOW_CAP,
    })
}

fn grid_extent(radius: f64, tilt: f64, model: &PotentialModel) -> (f64, f64) {
    let big = WINDOW_GROWTH * radius;
    let ext = if model.decays_super_polynomially() && !model.is_zero() {
        model.tail_radius(1e-12 * model.strength().abs().max(1.0)) + 1.0
    } else {
        1.0
    };
    (big + 1.0, (big * tilt.sin() + 1.0).max(ext))
}

/// Kernel `s_0(omega, omega', lambda)` from the plane integral over `Pi_{omega0}`, `d = 3`.
///
/// The plane-wave part (whose exact value is the identity's delta) is
/// subtracted under the same taper, leaving the off-diagonal kernel.
pub fn s0_kernel(
    model: &PotentialModel,
    lambda: f64,
    omega: [f64; 3],
    omega_prime: [f64; 3],
    omega0: [f64; 3],
    order: usize,
) -> Result<S0Sample> {
    if !(lambda > 0.0) {
        return param(format!("lambda must be positive, got {lambda}"));
    }
    let w = unit(omega)?;
    let wp = unit(omega_prime)?;
    let w0 = unit(omega0)?;
    check_cap(&w, &w0, "omega")?;
    check_cap(&wp, &w0, "omega'")?;
    let sep = chord(&w, &wp);
    if sep < 1e-9 {
        return param("s0 kernel needs omega != omega'");
    }
    let k = lambda.sqrt();
    let radius = window_radius(model, k, sep);
    let tilt = dot(&w, &w0).min(dot(&wp, &w0)).clamp(-1.0, 1.0).acos();
    let (rho_max, z_half) = grid_extent(radius, tilt, model);
    let fields = PlaneFields::new(model, lambda, order, rho_max, z_half)?;
    sample_with(&fields, model, lambda, w, wp, w0, order, radius)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagonalProbe {
    pub rho: f64,
    pub lambda: f64,
    pub angles: Vec<f64>,
    pub separations: Vec<f64>,
    pub samples: Vec<S0Sample>,
    pub fitted_exponent: f64,
    /// `-(1 + 1/rho)` at `d = 3`.
    pub theoretical_exponent: f64,
    /// Some sample failed the window check.
    pub unreliable: bool,
}

/// Log-log slope of `|s_0|` against `|omega - omega'|` near the diagonal at `omega0`.
///
/// Pairs are placed symmetrically about `omega0` at the given opening angles.
pub fn diagonal_exponent_probe(
    model: &PotentialModel,
    lambda: f64,
    omega0: [f64; 3],
    angles: &[f64],
    order: usize,
) -> Result<DiagonalProbe> {
    if !matches!(model.kind, PotentialKind::PowerTail { .. }) {
        return param("diagonal probe expects a power_tail model");
    }
    if !(model.rho > 0.5) {
        return param(format!("diagonal probe needs rho > 1/2, got {}", model.rho));
    }
    if angles.len() < 5 {
        return param("diagonal probe needs at least five angles");
    }
    if angles.windows(2).any(|p| !(p[1] < p[0])) || !(angles[angles.len() - 1] > 0.0) {
        return param("angles must be positive and decreasing");
    }
    if angles[0] < 10.0 * angles[angles.len() - 1] * (1.0 - 1e-12) {
        return param("angles must span at least a decade");
    }
    let w0 = unit(omega0)?;
    let k = lambda.sqrt();
    let (e1, _) = plane_basis(&w0);
    let pair = |a: f64| {
        let (s, c) = (0.5 * a).sin_cos();
        let w = [c * w0[0] + s * e1[0], c * w0[1] + s * e1[1], c * w0[2] + s * e1[2]];
        let wp = [c * w0[0] - s * e1[0], c * w0[1] - s * e1[1], c * w0[2] - s * e1[2]];
        (w, wp)
    };
    let radii: Vec<f64> = angles.iter().map(|&a| window_radius(model, k, 2.0 * (0.5 * a).sin())).collect();
    let r_big = radii.iter().cloned().fold(0.0, f64::max);
    let (rho_max, z_half) = grid_extent(r_big, 0.5 * angles[0], model);
    let fields = PlaneFields::new(model, lambda, order, rho_max, z_half)?;
    let mut samples = Vec::new();
    let mut seps = Vec::new();
    for (&a, &r) in angles.iter().zip(&radii) {
        let (w, wp) = pair(a);
        seps.push(chord(&w, &wp));
        samples.push(sample_with(&fields, model, lambda, w, wp, w0, order, r)?);
    }
    let mags: Vec<f64> = samples.iter().map(|s| s.value.norm()).collect();
    let fitted_exponent = log_log_slope(&seps, &mags);
    Ok(DiagonalProbe {
        rho: model.rho,
        lambda,
        angles: angles.to_vec(),
        separations: seps,
        unreliable: samples.iter().any(|s| !s.converged),
        samples,
        fitted_exponent,
        theoretical_exponent: -(1.0 + 1.0 / model.rho),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taper_is_c2_step() {
        assert_eq!(taper(0.5), 1.0);
        assert_eq!(taper(1.0), 0.0);
        let a = 1.0 - TAPER_FRACTION;
        let eps = 1e-6;
        assert!((taper(a + eps) - 1.0).abs() < 1e-12);
        assert!((taper(0.9) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn plane_basis_is_orthonormal() {
        for w0 in [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.6, 0.0, 0.8]] {
            let (a, b) = plane_basis(&w0);
            assert!(dot(&a, &w0).abs() < 1e-14 && dot(&b, &w0).abs() < 1e-14 && dot(&a, &b).abs() < 1e-14);
            assert!((norm3(&a) - 1.0).abs() < 1e-14 && (norm3(&b) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn ray_integral_with_offset_feature() {
        // int_0^inf exp(-(t - 5)^2) dt = sqrt(pi)/2 (1 + erf 5)
        let (v, tail) = ray_integral(|t| (-(t - 5.0) * (t - 5.0)).exp(), 5.0, 1.0, 1.0, &[]);
        assert!((v - PI.sqrt()).abs() < 1e-10, "{v}");
        assert!(tail < 1e-12);
    }

    #[test]
    fn cone_membership() {
        let c = CONE_HALF_ANGLE_DEG.to_radians();
        assert!(in_cone(0.1, -1.0, Sign::Plus, c));
        assert!(!in_cone(0.1, 1.0, Sign::Plus, c));
        assert!(in_cone(0.1, 1.0, Sign::Minus, c));
        assert!(!in_cone(0.0, 0.0, Sign::Minus, c));
    }
}
