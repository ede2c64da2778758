//! Radial reference solver in three dimensions.
//!
//! Each channel `u'' = (l(l+1)/r^2 + v - k^2) u` is integrated by Numerov from
//! the origin and matched to Riccati–Bessel functions a quarter wavelength
//! apart. Phase shifts feed the S-matrix eigenvalues `exp(2i delta_l)` and the
//! amplitude `f(theta)`, normalized so that the kernel of `S - Id` on the sphere
//! is `(ik/2pi) f`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result, ScatterError};
use crate::numerics::{complex_lsq2, gauss_legendre, legendre_table, spherical_bessel};
use crate::potentials::PotentialModel;

pub const DEFAULT_DR: f64 = 1e-3;

/// Matching radius never exceeds this unless given explicitly.
const R_MAX_CAP: f64 = 2000.0;

/// Largest tail value tolerated at the matching radius.
const TAIL_AT_MATCH: f64 = 1e-6;

const OVERFLOW: f64 = 1e200;

/// Round-off level of the matched phase shifts at default settings.
pub const PHASE_NOISE_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialWaveSettings {
    pub dr: f64,
    /// Outer matching radius; chosen from the potential tail when absent.
    pub r_max: Option<f64>,
}

impl Default for PartialWaveSettings {
    fn default() -> Self {
        PartialWaveSettings { dr: DEFAULT_DR, r_max: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseShiftTable {
    pub k: f64,
    pub l_max: usize,
    /// `delta[l]` in `(-pi/2, pi/2]`.
    pub delta: Vec<f64>,
    pub model: PotentialModel,
    pub settings: PartialWaveSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeKernel {
    pub lambda: f64,
    pub thetas: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Always `"f_theta"`: `S - Id` has kernel `(ik/2pi) a`.
    pub normalization: String,
    /// Set when a sample sits at `theta = 0`, where only the truncated sum is meaningful.
    pub forward_truncated: bool,
}

/// Default outer radius: past the `1e-10` tail and at least `30/k` beyond the range.
pub fn default_r_max(model: &PotentialModel, k: f64) -> f64 {
    let scale = model.strength().abs().max(1.0);
    let tail = model.tail_radius(1e-10 * scale);
    let wave = model.range() + 30.0 / k;
    tail.max(wave).min(R_MAX_CAP.max(wave))
}

/// Smallest admissible `l_max` for a table at momentum `k`.
pub fn default_l_max(model: &PotentialModel, k: f64) -> usize {
    (k * model.range()).ceil() as usize + 8
}

struct Channel {
    h: f64,
    u: Vec<f64>,
}

impl Channel {
    fn at(&self, i: usize) -> (f64, f64) {
        (i as f64 * self.h, self.u[i])
    }
}

/// Step size adjusted so every potential discontinuity falls on a node.
fn aligned_step(model: &PotentialModel, dr: f64) -> f64 {
    match model.breakpoints().first() {
        Some(&b) if b > 0.0 => b / (b / dr).ceil(),
        _ => dr,
    }
}

fn check_common(model: &PotentialModel, k: f64, dr: f64) -> Result<()> {
    if !(k > 0.0) || !k.is_finite() {
        return param(format!("momentum k must be positive, got {k}"));
    }
    if !(dr > 0.0) || !dr.is_finite() {
        return param(format!("step dr must be positive, got {dr}"));
    }
    if !model.is_radial() {
        return param("partial waves need a radial potential");
    }
    if !(model.is_short_range() || model.compact_radius().is_some()) {
        return param(format!(
            "partial waves need rho > 1 or compact support ({} has rho = {})",
            model.name(),
            model.rho
        ));
    }
    Ok(())
}

/// Regular solution on `r_i = i h`, `i = 0..=n`.
fn integrate_channel(model: &PotentialModel, l: usize, k: f64, h: f64, n: usize) -> Channel {
    let ll = (l * (l + 1)) as f64;
    let k2 = k * k;
    let breaks = model.breakpoints();
    let h2 = h * h;
    let g = |i: usize| -> f64 {
        let r = i as f64 * h;
        let on_break = breaks.iter().any(|&b| ((b - r) / h).abs() < 1e-6);
        let v = if on_break {
            0.5 * (model.radial(r - 0.5 * h) + model.radial(r + 0.5 * h))
        } else {
            model.radial(r)
        };
        ll / (r * r) + v - k2
    };
    let c0 = model.coulomb_coefficient();
    let mut u = vec![0.0; n + 1];

    // Numerov on w_i = (1 - h^2 g_i / 12) u_i.
    let (start, mut w_prev, mut w_cur) = if l == 0 {
        // u = r (1 + c0 r / 2 + ...): g u -> c0 A at the origin.
        let a = 1.0 / (1.0 + 0.5 * c0 * h);
        u[1] = h;
        let w0 = -h2 / 12.0 * c0 * a;
        let w1 = (1.0 - h2 * g(1) / 12.0) * u[1];
        (1, w0, w1)
    } else {
        // Begin where h^2 g is moderate; the irregular admixture decays like r^{-2l-1}.
        let m = ((2.0 * ll.sqrt()).ceil() as usize).max(2).min(n);
        let a1 = c0 / (2.0 * (l + 1) as f64);
        let reg = |i: usize| {
            let r = i as f64 * h;
            r.powi(l as i32 + 1) * (1.0 + a1 * r)
        };
        u[m - 1] = reg(m - 1);
        u[m] = reg(m);
        let w0 = (1.0 - h2 * g(m - 1) / 12.0) * u[m - 1];
        let w1 = (1.0 - h2 * g(m) / 12.0) * u[m];
        (m, w0, w1)
    };
    for i in start..n {
        let gi = g(i);
        let w_next = 2.0 * w_cur - w_prev + h2 * gi * u[i];
        let g_next = g(i + 1);
        u[i + 1] = w_next / (1.0 - h2 * g_next / 12.0);
        w_prev = w_cur;
        w_cur = w_next;
        if u[i + 1].abs() > OVERFLOW {
            for x in u[..=i + 1].iter_mut() {
                *x /= OVERFLOW;
            }
            w_prev /= OVERFLOW;
            w_cur /= OVERFLOW;
        }
    }
    Channel { h, u }
}

fn reduce_half_open(delta: f64) -> f64 {
    let mut d = delta;
    while d <= -FRAC_PI_2 {
        d += PI;
    }
    while d > FRAC_PI_2 {
        d -= PI;
    }
    d
}

fn grid_for(model: &PotentialModel, k: f64, r_max: f64, dr: f64) -> Result<(f64, usize)> {
    let h = aligned_step(model, dr);
    let tail = model.radial(r_max).abs();
    if tail > TAIL_AT_MATCH {
        return param(format!(
            "r_max = {r_max} too small: |v(r_max)| = {tail:e} exceeds {TAIL_AT_MATCH:e}"
        ));
    }
    let n = (r_max / h).round() as usize;
    let quarter = ((FRAC_PI_2 / k) / h).round().max(1.0) as usize;
    if n <= quarter + 2 {
        return param(format!("r_max = {r_max} shorter than a quarter wavelength"));
    }
    Ok((h, n))
}

/// Phase shift of channel `l` at momentum `k`.
pub fn radial_phase_shift(model: &PotentialModel, l: usize, k: f64, r_max: f64, dr: f64) -> Result<f64> {
    check_common(model, k, dr)?;
    let (h, n) = grid_for(model, k, r_max, dr)?;
    if model.is_zero() {
        // The regular solution is exactly r j_l(kr).
        return Ok(0.0);
    }
    let ch = integrate_channel(model, l, k, h, n);
    let quarter = ((FRAC_PI_2 / k) / h).round().max(1.0) as usize;
    let (r1, u1) = ch.at(n - quarter);
    let (r2, u2) = ch.at(n);
    let (j1, y1) = spherical_bessel(l, k * r1)?;
    let (j2, y2) = spherical_bessel(l, k * r2)?;
    // u = A r (j cos d - y sin d); with K = r2 u1 / (r1 u2):
    // tan d = (K j2 - j1) / (K y2 - y1), cross-multiplied to avoid u2 = 0.
    let num = r2 * u1 * j2 - r1 * u2 * j1;
    let den = r2 * u1 * y2 - r1 * u2 * y1;
    if !num.is_finite() || !den.is_finite() || (num == 0.0 && den == 0.0) {
        return Err(ScatterError::Numerical(format!("degenerate matching in channel l = {l}")));
    }
    Ok(reduce_half_open(num.atan2(den)))
}

/// All channels `0..=l_max` at the given settings, computed in parallel.
pub fn phase_shift_table_with(
    model: &PotentialModel,
    k: f64,
    l_max: usize,
    settings: PartialWaveSettings,
) -> Result<PhaseShiftTable> {
    check_common(model, k, settings.dr)?;
    let need = default_l_max(model, k);
    if l_max < need {
        return param(format!("l_max = {l_max} below ceil(k * range) + 8 = {need}"));
    }
    let r_max = settings.r_max.unwrap_or_else(|| default_r_max(model, k));
    let delta = (0..=l_max)
        .into_par_iter()
        .map(|l| radial_phase_shift(model, l, k, r_max, settings.dr))
        .collect::<Result<Vec<f64>>>()?;
    Ok(PhaseShiftTable {
        k,
        l_max,
        delta,
        model: *model,
        settings: PartialWaveSettings { dr: settings.dr, r_max: Some(r_max) },
    })
}

pub fn phase_shift_table(model: &PotentialModel, k: f64, l_max: usize) -> Result<PhaseShiftTable> {
    phase_shift_table_with(model, k, l_max, PartialWaveSettings::default())
}

impl PhaseShiftTable {
    /// Table built from given phase shifts (no solver run).
    pub fn from_deltas(model: PotentialModel, k: f64, delta: Vec<f64>) -> Result<Self> {
        if !(k > 0.0) {
            return param("k must be positive");
        }
        if delta.is_empty() {
            return param("empty phase-shift list");
        }
        Ok(PhaseShiftTable {
            k,
            l_max: delta.len() - 1,
            delta: delta.into_iter().map(reduce_half_open).collect(),
            model,
            settings: PartialWaveSettings::default(),
        })
    }

    /// Fault-injection hook: every phase shift moved by `eps`.
    pub fn perturbed(&self, eps: f64) -> Self {
        let mut t = self.clone();
        for d in t.delta.iter_mut() {
            *d = reduce_half_open(*d + eps);
        }
        t
    }

    pub fn lambda(&self) -> f64 {
        self.k * self.k
    }

    /// Whether `|delta_l|` is non-increasing over the last five channels.
    ///
    /// Values under [`PHASE_NOISE_FLOOR`] count as zero.
    pub fn tail_is_monotone(&self) -> bool {
        let n = self.delta.len();
        let from = n.saturating_sub(5);
        let clip = |d: f64| if d.abs() < PHASE_NOISE_FLOOR { 0.0 } else { d.abs() };
        self.delta[from..].windows(2).all(|w| clip(w[1]) <= clip(w[0]))
    }

    pub fn all_finite(&self) -> bool {
        self.delta.iter().all(|d| d.is_finite())
    }
}

/// `exp(2i delta_l)` per channel; each has multiplicity `2l + 1`.
pub fn smatrix_eigenvalues(table: &PhaseShiftTable) -> Vec<Complex64> {
    table.delta.iter().map(|&d| Complex64::from_polar(1.0, 2.0 * d)).collect()
}

pub fn multiplicities(table: &PhaseShiftTable) -> Vec<usize> {
    (0..=table.l_max).map(|l| 2 * l + 1).collect()
}

fn partial_sum(table: &PhaseShiftTable, t: f64) -> Complex64 {
    let p = legendre_table(table.l_max, t);
    let s: Complex64 = table
        .delta
        .iter()
        .zip(&p)
        .enumerate()
        .map(|(l, (&d, &pl))| (2 * l + 1) as f64 * (Complex64::from_polar(1.0, 2.0 * d) - 1.0) * pl)
        .sum();
    s / Complex64::new(0.0, 2.0 * table.k)
}

/// Scattering amplitude `f(theta)`, `0 <= theta <= pi`.
pub fn amplitude(table: &PhaseShiftTable, theta: f64) -> Result<Complex64> {
    if table.delta.is_empty() {
        return param("empty phase-shift table");
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(ScatterError::Domain(format!("theta = {theta} outside [0, pi]")));
    }
    Ok(partial_sum(table, theta.cos()))
}

pub fn amplitude_kernel(table: &PhaseShiftTable, thetas: &[f64]) -> Result<AmplitudeKernel> {
    let values = thetas.iter().map(|&t| amplitude(table, t)).collect::<Result<Vec<_>>>()?;
    Ok(AmplitudeKernel {
        lambda: table.lambda(),
        thetas: thetas.to_vec(),
        values,
        normalization: "f_theta".into(),
        forward_truncated: thetas.iter().any(|&t| t == 0.0),
    })
}

/// Coefficient `c_l` of `f = sum_l (2l+1)/(4pi) c_l P_l(cos theta)`, by Gauss quadrature.
pub fn legendre_coefficient(table: &PhaseShiftTable, l: usize) -> Complex64 {
    let rule = gauss_legendre(table.l_max + l + 8, -1.0, 1.0).expect("valid rule");
    let mut acc = Complex64::new(0.0, 0.0);
    for (t, w) in rule.iter() {
        let pl = legendre_table(l, t)[l];
        acc += partial_sum(table, t) * pl * w;
    }
    acc * 2.0 * PI
}

/// Singular values of the discretized operator `Id + (ik/2pi) f(omega . omega')`.
///
/// Works block by block in the azimuthal index `m`; blocks with `|m| > l_max`
/// are the identity and are skipped.
pub fn assembled_smatrix_singular_values(table: &PhaseShiftTable) -> Result<Vec<f64>> {
    let lmax = table.l_max;
    let n_theta = lmax + 4;
    let n_phi = 2 * lmax + 4;
    let rule = gauss_legendre(n_theta, -1.0, 1.0)?;
    let c = Complex64::new(0.0, table.k / (2.0 * PI));
    let nodes: Vec<(f64, f64)> = rule.nodes.iter().map(|&t| (t, (1.0 - t * t).max(0.0).sqrt())).collect();
    let psi: Vec<f64> = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
    // f at every (i, i', psi_j), shared by all blocks.
    let f_vals: Vec<Vec<Vec<Complex64>>> = nodes
        .par_iter()
        .map(|&(ti, si)| {
            nodes
                .iter()
                .map(|&(tj, sj)| {
                    psi.iter()
                        .map(|&p| partial_sum(table, (ti * tj + si * sj * p.cos()).clamp(-1.0, 1.0)))
                        .collect()
                })
                .collect()
        })
        .collect();
    let blocks: Vec<Vec<f64>> = (0..=lmax as i64)
        .into_par_iter()
        .map(|m| {
            let mut b = DMatrix::<Complex64>::zeros(n_theta, n_theta);
            for i in 0..n_theta {
                for j in 0..n_theta {
                    let fm: Complex64 = psi
                        .iter()
                        .zip(&f_vals[i][j])
                        .map(|(&p, &fv)| fv * Complex64::from_polar(1.0, m as f64 * p))
                        .sum::<Complex64>()
                        * (2.0 * PI / n_phi as f64);
                    let wij = (rule.weights[i] * rule.weights[j]).sqrt();
                    b[(i, j)] = c * fm * wij;
                    if i == j {
                        b[(i, j)] += 1.0;
                    }
                }
            }
            b.svd(false, false).singular_values.iter().copied().collect()
        })
        .collect();
    Ok(blocks.into_iter().flatten().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InOutDecomposition {
    pub b_minus: Complex64,
    pub b_plus: Complex64,
    pub condition: f64,
}

impl InOutDecomposition {
    pub fn ratio(&self) -> Complex64 {
        self.b_plus / self.b_minus
    }
}

/// Fits `u = b+ H+(kr) - b- H-(kr)` with `H±(x) = ±i x (j_l ± i y_l) ~ exp(±i(x - l pi/2))`.
///
/// The relative minus sign is the incoming-wave convention, under which
/// `b+ = exp(2i delta_l) b-`.
pub fn radial_in_out_decomposition(
    model: &PotentialModel,
    l: usize,
    k: f64,
    r_samples: &[f64],
) -> Result<InOutDecomposition> {
    radial_in_out_decomposition_with(model, l, k, r_samples, DEFAULT_DR)
}

pub fn radial_in_out_decomposition_with(
    model: &PotentialModel,
    l: usize,
    k: f64,
    r_samples: &[f64],
    dr: f64,
) -> Result<InOutDecomposition> {
    check_common(model, k, dr)?;
    if r_samples.len() < 2 {
        return param("need at least two radii");
    }
    let scale = model.strength().abs().max(1.0);
    for &r in r_samples {
        if !(r > 0.0) || model.radial(r).abs() > 1e-8 * scale {
            return param(format!("radius {r} is not in the asymptotic region"));
        }
    }
    let h = aligned_step(model, dr);
    let r_top = r_samples.iter().cloned().fold(0.0, f64::max);
    let n = (r_top / h).ceil() as usize + 2;
    let ch = integrate_channel(model, l, k, h, n);
    let i = Complex64::new(0.0, 1.0);
    let mut basis_plus = Vec::with_capacity(r_samples.len());
    let mut basis_minus = Vec::with_capacity(r_samples.len());
    let mut data = Vec::with_capacity(r_samples.len());
    let norm = ch.u.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    for &r in r_samples {
        let (rr, ur) = ch.at((r / h).round() as usize);
        let x = k * rr;
        let (j, y) = spherical_bessel(l, x)?;
        let hp = i * x * Complex64::new(j, y);
        let hm = -i * x * Complex64::new(j, -y);
        basis_plus.push(hp);
        basis_minus.push(-hm);
        data.push(Complex64::new(ur / norm, 0.0));
    }
    let ([b_plus, b_minus], condition) = complex_lsq2(&basis_plus, &basis_minus, &data)?;
    Ok(InOutDecomposition { b_minus, b_plus, condition })
}

/// Largest `|exp(2i delta_l) - b+/b-|` over `channels`, sampled a quarter
/// wavelength apart past the tail.
pub fn in_out_consistency(table: &PhaseShiftTable, channels: &[usize]) -> Result<f64> {
    let k = table.k;
    let scale = table.model.strength().abs().max(1.0);
    let tail = table.model.tail_radius(1e-9 * scale).max(1.0) + 2.0 * PI / k;
    let eig = smatrix_eigenvalues(table);
    let mut worst = 0.0f64;
    for &l in channels {
        if l > table.l_max {
            return param(format!("channel {l} beyond l_max"));
        }
        // Past the turning point kr = l, where j_l and y_l are comparable.
        let r0 = tail.max(1.5 * (l + 2) as f64 / k);
        let samples: Vec<f64> = (0..8).map(|j| r0 + j as f64 * FRAC_PI_2 / (2.0 * k)).collect();
        let d = radial_in_out_decomposition_with(&table.model, l, k, &samples, table.settings.dr)?;
        worst = worst.max((d.ratio() - eig[l]).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_oracle(k: f64) -> f64 {
        // delta_0 = -kR + atan((k/k') tan(k' R)), R = 1, V0 = 1
        let kp = (k * k + 1.0).sqrt();
        reduce_half_open(-k + ((k / kp) * kp.tan()).atan())
    }

    #[test]
    fn zero_potential_has_no_shift() {
        let m = PotentialModel::zero();
        for l in [0, 1, 4, 9] {
            let d = radial_phase_shift(&m, l, 1.0, 40.0, 1e-3).unwrap();
            assert!(d.abs() < 1e-8, "l={l}: {d}");
        }
    }

    #[test]
    fn square_well_s_wave_closed_form() {
        let m = PotentialModel::square_well(1.0, 1.0).unwrap();
        let d = radial_phase_shift(&m, 0, 1.0, 40.0, 1e-3).unwrap();
        let expect = -1.0 + (2f64.sqrt().tan() / 2f64.sqrt()).atan();
        assert!((expect - square_oracle(1.0)).abs() < 1e-15);
        assert!((d - expect).abs() < 1e-6, "{d} vs {expect}");
    }

    #[test]
    fn gaussian_step_refinement() {
        let m = PotentialModel::gaussian_well(-1.0, 1.0).unwrap();
        let a = radial_phase_shift(&m, 0, 1.0, 40.0, 1e-3).unwrap();
        let b = radial_phase_shift(&m, 0, 1.0, 40.0, 1e-4).unwrap();
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn bad_inputs() {
        let m = PotentialModel::gaussian_well(-1.0, 1.0).unwrap();
        assert!(radial_phase_shift(&m, 0, 0.0, 40.0, 1e-3).is_err());
        assert!(radial_phase_shift(&m, 0, 1.0, 2.0, 1e-3).is_err());
        let lr = PotentialModel::power_tail(0.5, 1.0).unwrap();
        assert!(radial_phase_shift(&lr, 0, 1.0, 40.0, 1e-3).is_err());
        assert!(phase_shift_table(&m, 2.0, 5).is_err());
    }

    #[test]
    fn eigenvalue_examples() {
        let z = PhaseShiftTable::from_deltas(PotentialModel::zero(), 1.0, vec![0.0; 4]).unwrap();
        assert!(smatrix_eigenvalues(&z).iter().all(|s| (s - 1.0).norm() < 1e-15));
        let t = PhaseShiftTable::from_deltas(PotentialModel::zero(), 1.0, vec![PI / 4.0, 0.0, 0.0]).unwrap();
        let s = smatrix_eigenvalues(&t);
        assert!((s[0] - Complex64::i()).norm() < 1e-15);
        assert!((s[1] - 1.0).norm() < 1e-15);
        assert_eq!(multiplicities(&t), vec![1, 3, 5]);
    }

    #[test]
    fn s_wave_only_amplitude_is_isotropic() {
        let d0: f64 = 0.4;
        let k = 1.3;
        let t = PhaseShiftTable::from_deltas(PotentialModel::zero(), k, vec![d0, 0.0, 0.0]).unwrap();
        let expect = Complex64::from_polar(1.0, d0) * d0.sin() / k;
        for th in [0.1, 1.0, 2.0, PI] {
            assert!((amplitude(&t, th).unwrap() - expect).norm() < 1e-14);
        }
        assert!(amplitude(&t, -0.1).is_err());
    }

    #[test]
    fn in_out_ratio_free_and_square_well() {
        let rs = [20.0, 20.4, 21.1, 22.0];
        let z = radial_in_out_decomposition(&PotentialModel::zero(), 2, 1.0, &rs).unwrap();
        assert!((z.ratio() - 1.0).norm() < 1e-6);
        let m = PotentialModel::square_well(1.0, 1.0).unwrap();
        let d = radial_in_out_decomposition(&m, 0, 1.0, &rs).unwrap();
        let expect = Complex64::from_polar(1.0, 2.0 * square_oracle(1.0));
        assert!((d.ratio() - expect).norm() < 1e-5);
    }

    #[test]
    fn ill_conditioned_fit_detected() {
        let m = PotentialModel::zero();
        let r = radial_in_out_decomposition(&m, 0, 1.0, &[10.0, 10.0 + 1e-9]);
        assert!(matches!(r, Err(ScatterError::Numerical(_))));
    }
}
