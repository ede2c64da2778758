//! Numerical checks of the operator-theoretic side.
//!
//! Everything here is desk scale and dense where a spectral decomposition is
//! needed (`n <= 2048`). The limiting-absorption probe works on the infinite
//! lattice `hZ` through its closed-form Green function, so a finite window of
//! the weighted resolvent never sees box eigenvalues.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{param, Result, ScatterError};
use crate::numerics::{gauss_legendre_on_breaks, integrate_half_line, Direction, UnitaryFft};
use crate::potentials::{PotentialKind, PotentialModel};
use crate::propagator::{Geometry, WavePacket, EDGE_THRESHOLD};

pub const MAX_DENSE: usize = 2048;

/// Grid spacing used by `mourre_check` when none is given.
pub const MOURRE_DX: f64 = 0.25;

/// Largest fraction of `lambda_max` a Mourre window may reach.
pub const MOURRE_RELIABLE_FRACTION: f64 = 0.25;

/// Relative growth over the last doubling of `T` below which a Kato integral saturates.
pub const KATO_SATURATION: f64 = 0.01;

/// Relative change between the last two `eps` below which the LAP norm is stable.
pub const LAP_STABILITY: f64 = 0.05;

pub const LAP_DEFAULT_POINTS: usize = 2048;
pub const LAP_DEFAULT_SPACING: f64 = 1.0;

/// Potential values below this fraction of the peak are treated as outside the support.
const SUPPORT_CUTOFF: f64 = 1e-16;

/// `x_j = (j - (n-1)/2) dx` with Dirichlet conditions beyond both ends.
fn centred_grid(n: usize, dx: f64) -> Vec<f64> {
    let c = 0.5 * (n as f64 - 1.0);
    (0..n).map(|j| (j as f64 - c) * dx).collect()
}

fn check_grid(n: usize, dx: f64) -> Result<()> {
    if n < 8 || n > MAX_DENSE {
        return param(format!("dense grids need 8 <= n <= {MAX_DENSE}, got {n}"));
    }
    if !(dx > 0.0) || !dx.is_finite() {
        return param(format!("grid spacing must be positive, got {dx}"));
    }
    Ok(())
}

fn sample_potential(model: &PotentialModel, x: &[f64]) -> Result<Vec<f64>> {
    if let PotentialKind::Yukawa { .. } = model.kind {
        return param("yukawa is singular at the origin and has no 1D grid realization");
    }
    Ok(x.iter().map(|&x| model.radial(x.abs())).collect())
}

/// `H = -D2 + v` with second-order differences on a Dirichlet grid.
#[derive(Clone, Debug)]
pub struct DiscretizedOperator {
    pub n: usize,
    pub dx: f64,
    pub x: Vec<f64>,
    pub potential: Vec<f64>,
    pub matrix: DMatrix<f64>,
}

impl DiscretizedOperator {
    pub fn new(model: &PotentialModel, n: usize, dx: f64) -> Result<Self> {
        check_grid(n, dx)?;
        let x = centred_grid(n, dx);
        Self::on_points(model, x, dx)
    }

    fn on_points(model: &PotentialModel, x: Vec<f64>, dx: f64) -> Result<Self> {
        let potential = sample_potential(model, &x)?;
        let n = x.len();
        let inv = 1.0 / (dx * dx);
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0 * inv + potential[i]
            } else if i.abs_diff(j) == 1 {
                -inv
            } else {
                0.0
            }
        });
        Ok(Self { n, dx, x, potential, matrix })
    }

    /// `max |H - H^T|`.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    /// The kinetic part `-D2`.
    pub fn kinetic(&self) -> DMatrix<f64> {
        let mut k = self.matrix.clone();
        for i in 0..self.n {
            k[(i, i)] -= self.potential[i];
        }
        k
    }

    /// Largest eigenvalue of the kinetic part, `4 / dx^2`.
    pub fn lambda_max(&self) -> f64 {
        4.0 / (self.dx * self.dx)
    }
}

/// `A = -i (D X + X D)`, with `D` the centred difference; stored as the real
/// antisymmetric `S = D X + X D`.
#[derive(Clone, Debug)]
pub struct DilationGenerator {
    pub n: usize,
    pub dx: f64,
    pub s: DMatrix<f64>,
}

impl DilationGenerator {
    pub fn new(x: &[f64], dx: f64) -> Self {
        let n = x.len();
        let h = 0.5 / dx;
        // (D X + X D)_{ij} = D_ij (x_j + x_i)
        let s = DMatrix::from_fn(n, n, |i, j| {
            if j == i + 1 {
                h * (x[i] + x[j])
            } else if i == j + 1 {
                -h * (x[i] + x[j])
            } else {
                0.0
            }
        });
        Self { n, dx, s }
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        self.s.map(|v| Complex64::new(0.0, -v))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let a = self.matrix();
        (&a - a.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HsReport {
    pub c: f64,
    /// `||(H_0 + c)^{-1} |V|^{1/2}||_HS^2`
    pub value: f64,
    pub closed_form: f64,
    pub l1_norm: f64,
    /// `int (|xi|^2 + c)^{-2} d xi` over `R^3`.
    pub xi_integral: f64,
}

/// Squared Hilbert–Schmidt norm of `(H_0 + c)^{-1} |V|^{1/2}` in three dimensions.
pub fn hs_norm_resolvent_weight(model: &PotentialModel, c: f64) -> Result<HsReport> {
    if !(c > 0.0) || !c.is_finite() {
        return param(format!("c must be positive, got {c}"));
    }
    let l1_norm = l1_norm_3d(model)?;
    // xi = sqrt(c) u makes the c^{-1/2} law exact.
    let (u_int, _) = integrate_half_line(|u| u * u / (1.0 + u * u).powi(2), 1.0, 1e-15, 200);
    let xi_integral = 4.0 * PI * u_int / c.sqrt();
    let value = l1_norm * xi_integral / (2.0 * PI).powi(3);
    Ok(HsReport { c, value, closed_form: l1_norm / (8.0 * PI * c.sqrt()), l1_norm, xi_integral })
}

/// `int_{R^3} |v| dx`.
pub fn l1_norm_3d(model: &PotentialModel) -> Result<f64> {
    if let PotentialKind::PowerTail { rho, .. } = model.kind {
        if rho <= 3.0 {
            return Err(ScatterError::Divergence(format!(
                "int |v| diverges in three dimensions for rho = {rho} <= 3"
            )));
        }
    }
    if model.is_zero() {
        return Ok(0.0);
    }
    let f = |r: f64| 4.0 * PI * r * r * model.radial(r).abs();
    if let Some(radius) = model.compact_radius() {
        let mut breaks: Vec<f64> = (0..=16).map(|i| radius * i as f64 / 16.0).collect();
        breaks.extend(model.breakpoints());
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        return Ok(gauss_legendre_on_breaks(24, &breaks)?.integrate(f));
    }
    if let PotentialKind::Yukawa { g, mu } = model.kind {
        // r^2 |v| = |g| r e^{-mu r} is smooth; the half-line rule resolves it directly.
        let (v, _) = integrate_half_line(|r| 4.0 * PI * g.abs() * r * (-mu * r).exp(), 1.0 / mu, 1e-15, 200);
        return Ok(v);
    }
    let (v, tail) = integrate_half_line(f, 1.0, 1e-14, 400);
    if !(tail <= 1e-8 * v.abs().max(1.0)) {
        return Err(ScatterError::Convergence(format!("L1 tail estimate {tail:.2e} too large")));
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KatoReport {
    pub r: f64,
    pub t_values: Vec<f64>,
    /// `I(T) / ||f||^2`
    pub integrals: Vec<f64>,
    /// `I(T_last) / I(T_prev) - 1`
    pub last_growth: f64,
    pub saturating: bool,
}

/// `I(T) = int_0^T ||<x>^{-r} e^{-i H_0 t} f||^2 dt` on the 1D line.
pub fn kato_smoothness_integral(r: f64, f: &WavePacket, t_values: &[f64]) -> Result<KatoReport> {
    if !(r >= 0.0) || !r.is_finite() {
        return param(format!("weight exponent must be non-negative, got {r}"));
    }
    let Geometry::Line { n, dx } = f.geometry else {
        return param("kato integral runs on the 1D line");
    };
    if t_values.len() < 2 || t_values[0] <= 0.0 || t_values.windows(2).any(|w| w[1] <= w[0]) {
        return param("T values must be positive, increasing and at least two");
    }
    let mass = f.mass();
    if mass == 0.0 {
        return Ok(KatoReport {
            r,
            t_values: t_values.to_vec(),
            integrals: vec![0.0; t_values.len()],
            last_growth: 0.0,
            saturating: true,
        });
    }
    let x = f.geometry.coordinates();
    let weight: Vec<f64> = x.iter().map(|x| (1.0 + x * x).powf(-r)).collect();
    let p = crate::numerics::angular_frequencies(n, dx);
    let mut fft = UnitaryFft::new(n)?;
    let mut spectrum = f.values.clone();
    fft.process(&mut spectrum, Direction::Forward)?;
    let edge_cut = 0.9 * f.geometry.extent();

    let mut sample = |t: f64| -> Result<f64> {
        let mut u: Vec<Complex64> =
            spectrum.iter().zip(&p).map(|(a, q)| a * Complex64::from_polar(1.0, -q * q * t)).collect();
        fft.process(&mut u, Direction::Inverse)?;
        let edge: f64 = u.iter().zip(&x).filter(|(_, x)| x.abs() > edge_cut).map(|(v, _)| v.norm_sqr()).sum();
        if edge * dx > EDGE_THRESHOLD * mass {
            return Err(ScatterError::Reflection(format!("packet reached the grid edge by t = {t:.1}")));
        }
        Ok(u.iter().zip(&weight).map(|(v, w)| v.norm_sqr() * w).sum::<f64>() * dx)
    };

    // Unit panels to t = 8, then ratio 1.25, with every T a break.
    let t_max = *t_values.last().unwrap();
    let mut breaks = vec![0.0];
    let mut b = 0.0;
    while b < t_max {
        b = if b < 8.0 { b + 0.5 } else { b * 1.25 };
        breaks.push(b.min(t_max));
    }
    breaks.extend_from_slice(t_values);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let rule = gauss_legendre_on_breaks(16, &[0.0, 1.0])?;
    let mut integrals = Vec::with_capacity(t_values.len());
    let mut acc = 0.0;
    let mut next = 0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        for (node, weight) in rule.nodes.iter().zip(&rule.weights) {
            acc += weight * (b - a) * sample(a + (b - a) * node)?;
        }
        while next < t_values.len() && (t_values[next] - b).abs() < 1e-12 {
            integrals.push(acc / mass);
            next += 1;
        }
    }
    let k = integrals.len();
    let last_growth = integrals[k - 1] / integrals[k - 2] - 1.0;
    Ok(KatoReport { r, t_values: t_values.to_vec(), integrals, last_growth, saturating: last_growth < KATO_SATURATION })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MourreReport {
    pub window: (f64, f64),
    pub n: usize,
    pub dx: f64,
    pub eigenvalues_in_window: usize,
    pub lowest_in_window: f64,
    /// Minimal eigenvalue of `E(I) i[H, A] E(I)`.
    pub min_eigenvalue: f64,
}

/// Mourre check at the default spacing `MOURRE_DX`.
pub fn mourre_check(model: &PotentialModel, window: (f64, f64), n: usize) -> Result<MourreReport> {
    mourre_check_with(model, window, n, MOURRE_DX)
}

/// Minimal eigenvalue of the commutator `i[H, A]` projected onto the eigenvectors
/// of `H` with eigenvalue in `window`.
///
/// The commutator is the lattice operator: the products are formed on a grid
/// padded by two points per side and the inner block kept. A commutator of the
/// truncated matrices would vanish on every eigenvector by the discrete virial
/// identity.
pub fn mourre_check_with(model: &PotentialModel, window: (f64, f64), n: usize, dx: f64) -> Result<MourreReport> {
    check_grid(n, dx)?;
    let (l1, l2) = window;
    if !(0.0 < l1 && l1 < l2) {
        return param(format!("window needs 0 < l1 < l2, got ({l1}, {l2})"));
    }
    let op = DiscretizedOperator::new(model, n, dx)?;
    if l2 >= MOURRE_RELIABLE_FRACTION * op.lambda_max() {
        return param(format!(
            "window top {l2} is beyond {MOURRE_RELIABLE_FRACTION} of lambda_max = {:.2}; refine the grid",
            op.lambda_max()
        ));
    }
    let pad = 2;
    let mut xe = op.x.clone();
    for k in 1..=pad {
        xe.insert(0, op.x[0] - k as f64 * dx);
        xe.push(op.x[n - 1] + k as f64 * dx);
    }
    let he = DiscretizedOperator::on_points(model, xe.clone(), dx)?;
    let se = DilationGenerator::new(&xe, dx);
    let ce = &he.matrix * &se.s - &se.s * &he.matrix;
    let commutator = ce.view((pad, pad), (n, n)).into_owned();

    let eig = op.matrix.clone().symmetric_eigen();
    let idx: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] >= l1 && eig.eigenvalues[i] <= l2).collect();
    if idx.is_empty() {
        return Err(ScatterError::Window(format!("no eigenvalues of the discrete H in [{l1}, {l2}]")));
    }
    let v = DMatrix::from_fn(n, idx.len(), |i, j| eig.eigenvectors[(i, idx[j])]);
    let projected = v.transpose() * commutator * &v;
    let sym = 0.5 * (&projected + projected.transpose());
    let min_eigenvalue = sym.symmetric_eigen().eigenvalues.min();
    let lowest_in_window = idx.iter().map(|&i| eig.eigenvalues[i]).fold(f64::INFINITY, f64::min);
    Ok(MourreReport { window, n, dx, eigenvalues_in_window: idx.len(), lowest_in_window, min_eigenvalue })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatticeWindow {
    pub n: usize,
    pub h: f64,
}

impl Default for LatticeWindow {
    fn default() -> Self {
        Self { n: LAP_DEFAULT_POINTS, h: LAP_DEFAULT_SPACING }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LapReport {
    pub lambda: f64,
    pub r: f64,
    pub epsilons: Vec<f64>,
    pub norms: Vec<f64>,
    /// `norm(eps_last) / norm(eps_prev) - 1`
    pub last_change: f64,
    pub stable: bool,
    /// `r <= 1/2`: outside the range where the limit is expected to exist.
    pub below_threshold: bool,
    pub lattice: LatticeWindow,
}

/// `||<x>^{-r} (H - lambda - i eps)^{-1} <x>^{-r}||` on the default lattice window.
pub fn lap_probe(model: &PotentialModel, lambda: f64, r: f64, epsilons: &[f64]) -> Result<LapReport> {
    lap_probe_on(model, lambda, r, epsilons, LatticeWindow::default())
}

pub fn lap_probe_on(
    model: &PotentialModel,
    lambda: f64,
    r: f64,
    epsilons: &[f64],
    lattice: LatticeWindow,
) -> Result<LapReport> {
    check_grid(lattice.n, lattice.h)?;
    if !lambda.is_finite() {
        return param("lambda must be finite");
    }
    if !(r >= 0.0) || !r.is_finite() {
        return param(format!("weight exponent must be non-negative, got {r}"));
    }
    if epsilons.len() < 2 || epsilons.iter().any(|e| !(*e > 0.0)) || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return param("epsilons must be positive, strictly decreasing and at least two");
    }
    let x = centred_grid(lattice.n, lattice.h);
    let v = sample_potential(model, &x)?;
    let eps_min = *epsilons.last().unwrap();
    check_discrete_spectrum(&v, lattice.h, lambda, 10.0 * eps_min)?;

    let weights: Vec<f64> = x.iter().map(|x| (1.0 + x * x).powf(-0.5 * r)).collect();
    let norms: Vec<f64> = epsilons
        .iter()
        .map(|&eps| {
            let op = WeightedResolvent::new(&v, &weights, lattice.h, Complex64::new(lambda, eps))?;
            Ok(op.largest_singular_value())
        })
        .collect::<Result<_>>()?;
    let k = norms.len();
    let last_change = norms[k - 1] / norms[k - 2] - 1.0;
    Ok(LapReport {
        lambda,
        r,
        epsilons: epsilons.to_vec(),
        norms,
        last_change,
        stable: last_change.abs() < LAP_STABILITY,
        below_threshold: r <= 0.5,
        lattice,
    })
}

/// Rejects `lambda` within `delta` of an eigenvalue of the lattice operator
/// outside the band `[0, 4/h^2]`; band eigenvalues of the window are box artifacts.
fn check_discrete_spectrum(v: &[f64], h: f64, lambda: f64, delta: f64) -> Result<()> {
    let top = 4.0 / (h * h);
    let count = |mu: f64| sturm_count(v, h, mu);
    let mut ranges = Vec::new();
    if lambda - delta < 0.0 {
        ranges.push((lambda - delta, (lambda + delta).min(0.0)));
    }
    if lambda + delta > top {
        ranges.push(((lambda - delta).max(top), lambda + delta));
    }
    for (a, b) in ranges {
        if a < b && count(b) > count(a) {
            return Err(ScatterError::ResonanceProximity(format!(
                "a discrete eigenvalue lies within {delta:.1e} of lambda = {lambda}"
            )));
        }
    }
    Ok(())
}

/// Number of eigenvalues of the Dirichlet window matrix below `mu`.
fn sturm_count(v: &[f64], h: f64, mu: f64) -> usize {
    let off = 1.0 / (h * h);
    let mut d = 1.0;
    let mut count = 0;
    for (i, vi) in v.iter().enumerate() {
        let a = 2.0 * off + vi - mu;
        d = if i == 0 { a } else { a - off * off / d };
        if d == 0.0 {
            d = f64::EPSILON * off;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// `K = h W G_v W` on a window of the lattice, `G_v = (H - z)^{-1}` on `hZ`.
///
/// The free Green function is Toeplitz and applied by circulant embedding; the
/// potential enters exactly through `G_v = G_0 - h G_0[:, S] V_S M^{-1} G_0[S, :]`,
/// `M = I + h G_0[S, S] V_S`, with `S` the support of `v` in the window.
struct WeightedResolvent {
    n: usize,
    h: f64,
    weights: Vec<f64>,
    symbol: Vec<Complex64>,
    fft: std::cell::RefCell<UnitaryFft>,
    support: Vec<usize>,
    v_support: Vec<f64>,
    m_lu: Option<nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl WeightedResolvent {
    fn new(v: &[f64], weights: &[f64], h: f64, z: Complex64) -> Result<Self> {
        let n = v.len();
        // xi + 1/xi = 2 - z h^2 with |xi| < 1.
        let b = Complex64::new(2.0, 0.0) - z * h * h;
        let root = (b * b - 4.0).sqrt();
        let mut xi = 0.5 * (b - root);
        if xi.norm() > 1.0 {
            xi = 1.0 / xi;
        }
        if (xi.norm() - 1.0).abs() < 1e-15 {
            return Err(ScatterError::Numerical("lattice Green function is not decaying; eps too small".into()));
        }
        let amp = h / (1.0 / xi - xi);
        let mut t = Vec::with_capacity(n);
        let mut p = Complex64::new(1.0, 0.0);
        for _ in 0..n {
            t.push(amp * p);
            p *= xi;
        }
        let m = 2 * n;
        let mut c = vec![Complex64::default(); m];
        c[..n].copy_from_slice(&t);
        for k in 1..n {
            c[m - k] = t[k];
        }
        let mut fft = UnitaryFft::new(m)?;
        fft.process(&mut c, Direction::Forward)?;
        let scale = (m as f64).sqrt();
        let symbol: Vec<Complex64> = c.into_iter().map(|s| s * scale).collect();

        let peak = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let support: Vec<usize> = if peak == 0.0 {
            Vec::new()
        } else {
            (0..n).filter(|&i| v[i].abs() > SUPPORT_CUTOFF * peak).collect()
        };
        let v_support: Vec<f64> = support.iter().map(|&i| v[i]).collect();
        let m_lu = if support.is_empty() {
            None
        } else {
            let s = support.len();
            let mat = DMatrix::from_fn(s, s, |i, j| {
                let g = t[support[i].abs_diff(support[j])];
                let delta = if i == j { 1.0 } else { 0.0 };
                Complex64::new(delta, 0.0) + h * g * v_support[j]
            });
            Some(mat.lu())
        };
        Ok(Self {
            n,
            h,
            weights: weights.to_vec(),
            symbol,
            fft: std::cell::RefCell::new(fft),
            support,
            v_support,
            m_lu,
        })
    }

    fn toeplitz(&self, x: &[Complex64]) -> Vec<Complex64> {
        let m = 2 * self.n;
        let mut buf = vec![Complex64::default(); m];
        buf[..self.n].copy_from_slice(x);
        let mut fft = self.fft.borrow_mut();
        fft.process(&mut buf, Direction::Forward).expect("planned length");
        buf.iter_mut().zip(&self.symbol).for_each(|(a, s)| *a *= s);
        fft.process(&mut buf, Direction::Inverse).expect("planned length");
        buf.truncate(self.n);
        buf
    }

    fn green(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut g = self.toeplitz(y);
        if let Some(lu) = &self.m_lu {
            let rhs = DVector::from_iterator(self.support.len(), self.support.iter().map(|&i| g[i]));
            let sol = lu.solve(&rhs).expect("resolvent identity matrix is invertible off the spectrum");
            let mut spread = vec![Complex64::default(); self.n];
            for (k, &i) in self.support.iter().enumerate() {
                spread[i] = self.v_support[k] * sol[k];
            }
            let corr = self.toeplitz(&spread);
            g.iter_mut().zip(&corr).for_each(|(a, c)| *a -= self.h * c);
        }
        g
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let wx: Vec<Complex64> = x.iter().zip(&self.weights).map(|(a, w)| a * w).collect();
        let g = self.green(&wx);
        g.iter().zip(&self.weights).map(|(a, w)| a * w * self.h).collect()
    }

    /// `K` is complex symmetric, so `K^* x = conj(K conj(x))`.
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        let c: Vec<Complex64> = x.iter().map(|a| a.conj()).collect();
        self.apply(&c).into_iter().map(|a| a.conj()).collect()
    }

    /// Golub–Kahan–Lanczos with full reorthogonalization.
    fn largest_singular_value(&self) -> f64 {
        let n = self.n;
        let max_steps = n.min(400);
        let norm = |v: &[Complex64]| v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let orth = |v: &mut Vec<Complex64>, basis: &[Vec<Complex64>]| {
            for _ in 0..2 {
                for b in basis {
                    let d: Complex64 = b.iter().zip(v.iter()).map(|(p, q)| p.conj() * q).sum();
                    v.iter_mut().zip(b).for_each(|(q, p)| *q -= d * p);
                }
            }
        };
        let mut v: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0 + (0.37 * i as f64).sin(), 0.0)).collect();
        let s = norm(&v);
        v.iter_mut().for_each(|a| *a /= s);
        let mut vs = vec![v];
        let mut us: Vec<Vec<Complex64>> = Vec::new();
        let (mut alphas, mut betas) = (Vec::new(), Vec::new());
        let mut sigma = 0.0;
        let mut settled = 0;
        for j in 0..max_steps {
            let mut u = self.apply(&vs[j]);
            if j > 0 {
                let b: f64 = betas[j - 1];
                u.iter_mut().zip(&us[j - 1]).for_each(|(a, p)| *a -= b * p);
            }
            orth(&mut u, &us);
            let a = norm(&u);
            if a == 0.0 {
                break;
            }
            u.iter_mut().for_each(|x| *x /= a);
            alphas.push(a);
            let mut w = self.apply_adjoint(&u);
            w.iter_mut().zip(&vs[j]).for_each(|(x, p)| *x -= a * p);
            us.push(u);
            orth(&mut w, &vs);
            let b = norm(&w);
            let k = alphas.len();
            let bidiag = DMatrix::from_fn(k, k, |r, c| {
                if r == c {
                    alphas[r]
                } else if c == r + 1 {
                    betas[r]
                } else {
                    0.0
                }
            });
            let next = bidiag.singular_values().max();
            if (next - sigma).abs() <= 1e-13 * next {
                settled += 1;
            } else {
                settled = 0;
            }
            sigma = next;
            if settled >= 3 || b <= 1e-14 * sigma {
                break;
            }
            w.iter_mut().for_each(|x| *x /= b);
            betas.push(b);
            vs.push(w);
        }
        sigma
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sturm_count_matches_dense() {
        let v: Vec<f64> = (0..40).map(|i| -3.0 * (-((i as f64 - 20.0) / 4.0).powi(2)).exp()).collect();
        let h = 0.5;
        let m = DMatrix::from_fn(40, 40, |i, j| {
            if i == j {
                2.0 / (h * h) + v[i]
            } else if i.abs_diff(j) == 1 {
                -1.0 / (h * h)
            } else {
                0.0
            }
        });
        let e = m.symmetric_eigen().eigenvalues;
        for mu in [-2.5, -1.0, 0.3, 5.0] {
            assert_eq!(sturm_count(&v, h, mu), e.iter().filter(|&&x| x < mu).count());
        }
    }

    #[test]
    fn lanczos_matches_dense_svd() {
        let n = 64;
        let v: Vec<f64> = (0..n).map(|i| -0.5 * (-((i as f64 - 32.0) / 3.0).powi(2)).exp()).collect();
        let w: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + ((i as f64 - 32.0) * 0.5).powi(2)).sqrt()).collect();
        let z = Complex64::new(1.0, 0.05);
        let op = WeightedResolvent::new(&v, &w, 0.5, z).unwrap();
        let dense = DMatrix::from_fn(n, n, |i, j| {
            let mut e = vec![Complex64::default(); n];
            e[j] = Complex64::new(1.0, 0.0);
            op.apply(&e)[i]
        });
        let svd = dense.singular_values().max();
        assert!((op.largest_singular_value() - svd).abs() < 1e-10 * svd);
        // Resolvent identity reproduces (H_window_on_lattice - z)^{-1} column by column.
        let h = 0.5;
        let free = WeightedResolvent::new(&vec![0.0; n], &vec![1.0; n], h, z).unwrap();
        let full = WeightedResolvent::new(&v, &vec![1.0; n], h, z).unwrap();
        let mut e = vec![Complex64::default(); n];
        e[30] = Complex64::new(1.0, 0.0);
        let g0 = free.green(&e);
        let gv = full.green(&e);
        // G_v = G_0 - G_0 (h V) G_v on the window.
        let hv: Vec<Complex64> = gv.iter().zip(&v).map(|(a, b)| a * b).collect();
        let corr = free.green(&hv);
        for i in 0..n {
            assert!((gv[i] - (g0[i] - h * corr[i])).norm() < 1e-12);
        }
    }
}
