//! Radial potential catalog with decay metadata.
//!
//! Every built-in is a function of `|x|` only. Decay is classified by the
//! declared exponent `rho` in `|v(x)| <= C <x>^{-rho}`: short range for
//! `rho > 1`, long range for `0 < rho <= 1`.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Pointwise regularization radius for the Coulomb-like factor of the Yukawa model.
pub const YUKAWA_R_MIN: f64 = 1e-6;

/// Declared decay exponent for models decaying faster than any power.
pub const SUPER_POLYNOMIAL_RHO: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    /// `v0 exp(-(r/width)^2)`
    GaussianWell { v0: f64, width: f64 },
    /// `g exp(-mu r) / r`
    Yukawa { g: f64, mu: f64 },
    /// `-depth` for `r < radius`, zero outside.
    SquareWell { depth: f64, radius: f64 },
    /// `v0 <x>^{-rho}`
    PowerTail { v0: f64, rho: f64 },
    /// `v0 exp(1 - 1/(1 - (r/radius)^2))` inside the ball, zero outside.
    CompactBump { v0: f64, radius: f64 },
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialModel {
    pub kind: PotentialKind,
    /// Claimed exponent in `|v| <= C <x>^{-rho}`.
    pub rho: f64,
}

pub fn japanese_bracket(r: f64) -> f64 {
    (1.0 + r * r).sqrt()
}

impl PotentialModel {
    pub fn new(kind: PotentialKind) -> Result<Self> {
        let rho = match kind {
            PotentialKind::GaussianWell { width, .. } => {
                if !(width > 0.0) {
                    return param("gaussian_well width must be positive");
                }
                SUPER_POLYNOMIAL_RHO
            }
            PotentialKind::Yukawa { mu, .. } => {
                if !(mu > 0.0) {
                    return param("yukawa mu must be positive");
                }
                SUPER_POLYNOMIAL_RHO
            }
            PotentialKind::SquareWell { radius, .. } | PotentialKind::CompactBump { radius, .. } => {
                if !(radius > 0.0) {
                    return param("radius must be positive");
                }
                SUPER_POLYNOMIAL_RHO
            }
            PotentialKind::PowerTail { rho, .. } => {
                if !(rho > 0.0) {
                    return param("power_tail rho must be positive");
                }
                rho
            }
            PotentialKind::Zero => SUPER_POLYNOMIAL_RHO,
        };
        Ok(Self { kind, rho })
    }

    pub fn zero() -> Self {
        Self::new(PotentialKind::Zero).unwrap()
    }

    pub fn gaussian_well(v0: f64, width: f64) -> Result<Self> {
        Self::new(PotentialKind::GaussianWell { v0, width })
    }

    pub fn yukawa(g: f64, mu: f64) -> Result<Self> {
        Self::new(PotentialKind::Yukawa { g, mu })
    }

    pub fn square_well(depth: f64, radius: f64) -> Result<Self> {
        Self::new(PotentialKind::SquareWell { depth, radius })
    }

    pub fn power_tail(v0: f64, rho: f64) -> Result<Self> {
        Self::new(PotentialKind::PowerTail { v0, rho })
    }

    pub fn compact_bump(v0: f64, radius: f64) -> Result<Self> {
        Self::new(PotentialKind::CompactBump { v0, radius })
    }

    /// Same profile, different claimed decay exponent.
    pub fn with_declared_rho(mut self, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return param("declared rho must be positive");
        }
        self.rho = rho;
        Ok(self)
    }

    /// Scale the strength parameter.
    pub fn scaled(&self, factor: f64) -> Self {
        use PotentialKind::*;
        let kind = match self.kind {
            GaussianWell { v0, width } => GaussianWell { v0: v0 * factor, width },
            Yukawa { g, mu } => Yukawa { g: g * factor, mu },
            SquareWell { depth, radius } => SquareWell { depth: depth * factor, radius },
            PowerTail { v0, rho } => PowerTail { v0: v0 * factor, rho },
            CompactBump { v0, radius } => CompactBump { v0: v0 * factor, radius },
            Zero => Zero,
        };
        Self { kind, rho: self.rho }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PotentialKind::GaussianWell { .. } => "gaussian_well",
            PotentialKind::Yukawa { .. } => "yukawa",
            PotentialKind::SquareWell { .. } => "square_well",
            PotentialKind::PowerTail { .. } => "power_tail",
            PotentialKind::CompactBump { .. } => "compact_bump",
            PotentialKind::Zero => "zero",
        }
    }

    /// All built-ins are radial.
    pub fn is_radial(&self) -> bool {
        true
    }

    pub fn is_zero(&self) -> bool {
        match self.kind {
            PotentialKind::Zero => true,
            PotentialKind::GaussianWell { v0, .. }
            | PotentialKind::PowerTail { v0, .. }
            | PotentialKind::CompactBump { v0, .. } => v0 == 0.0,
            PotentialKind::Yukawa { g, .. } => g == 0.0,
            PotentialKind::SquareWell { depth, .. } => depth == 0.0,
        }
    }

    pub fn is_short_range(&self) -> bool {
        self.rho > 1.0
    }

    /// True when `v` vanishes outside a ball.
    pub fn compact_radius(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::SquareWell { radius, .. } | PotentialKind::CompactBump { radius, .. } => Some(radius),
            PotentialKind::Zero => Some(0.0),
            _ => None,
        }
    }

    /// True for models whose tails fall faster than every power of `r`.
    pub fn decays_super_polynomially(&self) -> bool {
        !matches!(self.kind, PotentialKind::PowerTail { .. }) || self.is_zero()
    }

    /// Whether `int |v| d^3x` is finite.
    pub fn is_integrable_3d(&self) -> bool {
        match self.kind {
            PotentialKind::PowerTail { rho, .. } => self.is_zero() || rho > 3.0,
            _ => true,
        }
    }

    /// Radial profile `v(r)`, `r >= 0`.
    pub fn radial(&self, r: f64) -> f64 {
        let r = r.abs();
        match self.kind {
            PotentialKind::GaussianWell { v0, width } => {
                let s = r / width;
                v0 * (-s * s).exp()
            }
            PotentialKind::Yukawa { g, mu } => g * (-mu * r).exp() / r.max(YUKAWA_R_MIN),
            PotentialKind::SquareWell { depth, radius } => {
                if r < radius {
                    -depth
                } else {
                    0.0
                }
            }
            PotentialKind::PowerTail { v0, rho } => v0 * (1.0 + r * r).powf(-0.5 * rho),
            PotentialKind::CompactBump { v0, radius } => {
                let s = r / radius;
                if s < 1.0 {
                    v0 * (1.0 - 1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            }
            PotentialKind::Zero => 0.0,
        }
    }

    /// `r v(r)`, finite at the origin for every model (exact for Yukawa).
    pub fn r_times_v(&self, r: f64) -> f64 {
        match self.kind {
            PotentialKind::Yukawa { g, mu } => g * (-mu * r.abs()).exp(),
            _ => r * self.radial(r),
        }
    }

    /// `lim_{r -> 0} r v(r)`.
    pub fn coulomb_coefficient(&self) -> f64 {
        match self.kind {
            PotentialKind::Yukawa { g, .. } => g,
            _ => 0.0,
        }
    }

    /// First radial derivative `v'(r)`.
    pub fn radial_derivative(&self, r: f64) -> f64 {
        let r = r.abs();
        match self.kind {
            PotentialKind::GaussianWell { width, .. } => -2.0 * r / (width * width) * self.radial(r),
            PotentialKind::Yukawa { mu, .. } => -(mu + 1.0 / r.max(YUKAWA_R_MIN)) * self.radial(r),
            PotentialKind::PowerTail { rho, .. } => -rho * r / (1.0 + r * r) * self.radial(r),
            PotentialKind::CompactBump { radius, .. } => {
                let s = r / radius;
                if s < 1.0 {
                    let d = 1.0 - s * s;
                    -2.0 * s / (radius * d * d) * self.radial(r)
                } else {
                    0.0
                }
            }
            PotentialKind::SquareWell { .. } | PotentialKind::Zero => 0.0,
        }
    }

    /// `v(x)` for a point in any dimension.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.radial(norm(x))
    }

    /// Radius beyond which `|v| <= tol` (tails are monotone for all built-ins).
    pub fn tail_radius(&self, tol: f64) -> f64 {
        if let Some(r) = self.compact_radius() {
            return r;
        }
        if self.is_zero() {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.radial(hi).abs() > tol {
            hi *= 2.0;
            if hi > 1e12 {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.radial(mid).abs() > tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Effective interaction range used to size partial-wave sums.
    pub fn range(&self) -> f64 {
        let scale = self.strength().abs().max(1.0);
        self.tail_radius(1e-8 * scale).max(1e-12)
    }

    pub fn strength(&self) -> f64 {
        match self.kind {
            PotentialKind::GaussianWell { v0, .. }
            | PotentialKind::PowerTail { v0, .. }
            | PotentialKind::CompactBump { v0, .. } => v0,
            PotentialKind::Yukawa { g, .. } => g,
            PotentialKind::SquareWell { depth, .. } => -depth,
            PotentialKind::Zero => 0.0,
        }
    }

    /// Radii where `v` is discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            PotentialKind::SquareWell { radius, .. } => vec![radius],
            _ => Vec::new(),
        }
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayOrderReport {
    pub order: usize,
    /// Per-radius `|d^order v| <r>^{rho + order}`.
    pub ratios: Vec<f64>,
    /// Empirical constant: supremum of the ratios.
    pub empirical_constant: f64,
    /// Max over the outer half divided by max over the inner half.
    pub growth: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub claimed_rho: f64,
    pub radii: Vec<f64>,
    pub orders: Vec<DecayOrderReport>,
    pub pass: bool,
}

/// Allowed growth of the weighted derivative across the sampled radii.
pub const DECAY_GROWTH_TOLERANCE: f64 = 1.05;

/// Check `|d^a v| <= C <x>^{-rho-|a|}` on sampled radii with central differences.
///
/// The second-order bound uses the largest Hessian eigenvalue of a radial
/// function, `max(|v''|, |v'|/r)`.
pub fn verify_decay(model: &PotentialModel, derivative_orders: usize, sample_radii: &[f64]) -> Result<DecayReport> {
    if derivative_orders > 2 {
        return param("derivative orders above 2 are not supported");
    }
    if sample_radii.is_empty() || sample_radii.iter().any(|&r| !(r > 0.0)) {
        return param("sample radii must be positive");
    }
    if sample_radii.windows(2).any(|w| w[0] >= w[1]) {
        return param("sample radii must be increasing");
    }
    let rho = model.rho;
    let mut orders = Vec::new();
    for order in 0..=derivative_orders {
        let ratios: Vec<f64> = sample_radii
            .iter()
            .map(|&r| {
                let h = 1e-3 * r.max(1.0);
                let v = |s: f64| model.radial(s);
                let d = match order {
                    0 => v(r).abs(),
                    1 => ((v(r + h) - v(r - h)) / (2.0 * h)).abs(),
                    _ => {
                        let d2 = (v(r + h) - 2.0 * v(r) + v(r - h)) / (h * h);
                        let d1 = (v(r + h) - v(r - h)) / (2.0 * h);
                        d2.abs().max(d1.abs() / r)
                    }
                };
                d * japanese_bracket(r).powf(rho + order as f64)
            })
            .collect();
        let empirical_constant = ratios.iter().cloned().fold(0.0, f64::max);
        let split = (ratios.len() / 2).max(1);
        let inner = ratios[..split].iter().cloned().fold(0.0, f64::max);
        let outer = ratios[split..].iter().cloned().fold(0.0, f64::max);
        let growth = if inner > 0.0 {
            outer / inner
        } else if outer > 0.0 {
            f64::INFINITY
        } else {
            1.0
        };
        orders.push(DecayOrderReport {
            order,
            empirical_constant,
            growth,
            pass: growth <= DECAY_GROWTH_TOLERANCE && ratios.iter().all(|r| r.is_finite()),
            ratios,
        });
    }
    let pass = orders.iter().all(|o| o.pass);
    Ok(DecayReport {
        claimed_rho: rho,
        radii: sample_radii.to_vec(),
        orders,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn builtins() -> Vec<PotentialModel> {
        vec![
            PotentialModel::gaussian_well(-1.0, 1.0).unwrap(),
            PotentialModel::yukawa(0.5, 1.0).unwrap(),
            PotentialModel::square_well(1.0, 1.0).unwrap(),
            PotentialModel::power_tail(1.0, 1.0).unwrap(),
            PotentialModel::power_tail(0.5, 2.0).unwrap(),
            PotentialModel::compact_bump(2.0, 1.5).unwrap(),
            PotentialModel::zero(),
        ]
    }

    fn radii() -> Vec<f64> {
        (0..9).map(|i| 10.0 * 10f64.powf(i as f64 / 4.0)).collect()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(PotentialModel::zero().evaluate(&[1.0, 2.0, 3.0]), 0.0);
        let p = PotentialModel::power_tail(1.0, 1.0).unwrap();
        assert_eq!(p.evaluate(&[0.0, 0.0, 0.0]), 1.0);
        let g = PotentialModel::gaussian_well(-1.0, 1.0).unwrap();
        assert!((g.evaluate(&[0.0, 1.0, 0.0]) + (-1.0f64).exp()).abs() < 1e-15);
        assert!((g.evaluate(&[0.0, 1.0, 0.0]) + 0.3678794).abs() < 1e-7);
    }

    #[test]
    fn square_well_edge_is_half_open() {
        let s = PotentialModel::square_well(2.0, 1.0).unwrap();
        assert_eq!(s.radial(0.999999), -2.0);
        assert_eq!(s.radial(1.0), 0.0);
    }

    #[test]
    fn yukawa_finite_at_origin() {
        let y = PotentialModel::yukawa(1.0, 1.0).unwrap();
        assert!(y.radial(0.0).is_finite());
        assert_eq!(y.r_times_v(0.0), 1.0);
    }

    #[test]
    fn decay_examples() {
        let r = [10.0, 100.0, 1000.0];
        let p1 = PotentialModel::power_tail(1.0, 1.0).unwrap();
        assert!(verify_decay(&p1, 2, &r).unwrap().pass);
        let g = PotentialModel::gaussian_well(-1.0, 1.0).unwrap().with_declared_rho(3.0).unwrap();
        assert!(verify_decay(&g, 2, &r).unwrap().pass);
        let p05 = PotentialModel::power_tail(1.0, 0.5).unwrap().with_declared_rho(1.0).unwrap();
        let rep = verify_decay(&p05, 0, &r).unwrap();
        assert!(!rep.pass);
        // Ratio grows like <x>^{0.5}: compare with direct evaluation.
        let expect = (japanese_bracket(1000.0) / japanese_bracket(10.0)).sqrt();
        assert!((rep.orders[0].ratios[2] / rep.orders[0].ratios[0] - expect).abs() < 1e-9);
    }

    #[test]
    fn decay_rejects_bad_radii() {
        let p = PotentialModel::zero();
        assert!(verify_decay(&p, 1, &[2.0, 1.0]).is_err());
        assert!(verify_decay(&p, 1, &[0.0, 1.0]).is_err());
        assert!(verify_decay(&p, 3, &[1.0]).is_err());
    }

    #[test]
    fn classification_consistency() {
        for m in builtins() {
            let rep = verify_decay(&m, 2, &radii()).unwrap();
            assert!(rep.pass, "{} failed at declared rho: {:?}", m.name(), rep);
            if let PotentialKind::PowerTail { .. } = m.kind {
                let worse = m.with_declared_rho(m.rho + 0.5).unwrap();
                assert!(!verify_decay(&worse, 2, &radii()).unwrap().pass);
            }
        }
    }

    #[test]
    fn tail_radius_gaussian() {
        let g = PotentialModel::gaussian_well(1.0, 1.0).unwrap();
        let r = g.tail_radius(1e-10);
        assert!((r - (1e10f64).ln().sqrt()).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn radial_symmetry(
            x in proptest::collection::vec(-5.0f64..5.0, 3),
            axis in proptest::collection::vec(-1.0f64..1.0, 3),
            angle in 0.0f64..6.28,
        ) {
            let n = norm(&axis);
            prop_assume!(n > 1e-3 && norm(&x) > 0.1);
            let k: Vec<f64> = axis.iter().map(|a| a / n).collect();
            // Rodrigues rotation.
            let (s, c) = angle.sin_cos();
            let dot = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
            let cross = [k[1] * x[2] - k[2] * x[1], k[2] * x[0] - k[0] * x[2], k[0] * x[1] - k[1] * x[0]];
            let rx: Vec<f64> = (0..3).map(|i| x[i] * c + cross[i] * s + k[i] * dot * (1.0 - c)).collect();
            for m in builtins() {
                let a = m.evaluate(&x);
                let b = m.evaluate(&rx);
                // Square-well edge: skip points straddling the discontinuity.
                if let PotentialKind::SquareWell { radius, .. } = m.kind {
                    if (norm(&x) - radius).abs() < 1e-12 { continue; }
                }
                prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0), "{}: {a} vs {b}", m.name());
            }
        }
    }
}
