//! Small dense helpers: least-squares slopes, 2x2 complex solves, spectral norms.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, ScatterError};

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of `log|y|` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    linear_fit(&lx, &ly).0
}

/// Complex least squares for `data ≈ c0 * basis0 + c1 * basis1`.
///
/// Returns the coefficients and the condition number of the normal matrix.
pub fn complex_lsq2(
    basis0: &[Complex64],
    basis1: &[Complex64],
    data: &[Complex64],
) -> Result<([Complex64; 2], f64)> {
    let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    };
    let g00 = dot(basis0, basis0);
    let g01 = dot(basis0, basis1);
    let g11 = dot(basis1, basis1);
    let r0 = dot(basis0, data);
    let r1 = dot(basis1, data);
    // Hermitian 2x2: eigenvalues from trace and determinant.
    let tr = g00.re + g11.re;
    let det = (g00 * g11 - g01 * g01.conj()).re;
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let (emax, emin) = (0.5 * tr + disc, 0.5 * tr - disc);
    let cond = if emin > 0.0 { emax / emin } else { f64::INFINITY };
    if !cond.is_finite() || cond > 1e8 {
        return Err(ScatterError::Numerical(format!(
            "two-term fit condition number {cond:.3e} exceeds 1e8"
        )));
    }
    let det_c = g00 * g11 - g01 * g01.conj();
    let c0 = (g11 * r0 - g01 * r1) / det_c;
    let c1 = (g00 * r1 - g01.conj() * r0) / det_c;
    Ok(([c0, c1], cond))
}

/// Largest singular value of a complex matrix via power iteration on `M^* M`.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    let n = m.ncols();
    let mut v = DVector::from_fn(n, |i, _| Complex64::new(1.0 + (i as f64 * 0.37).sin(), 0.1));
    let mut sigma = 0.0;
    for _ in 0..500 {
        let w = m * &v;
        let u = m.adjoint() * &w;
        let norm = u.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = w.norm() / v.norm();
        v = u.unscale(norm);
        if (next - sigma).abs() <= 1e-13 * next {
            return next;
        }
        sigma = next;
    }
    sigma
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let (s, b) = linear_fit(&x, &y);
        assert!((s - 2.5).abs() < 1e-14 && (b + 1.0).abs() < 1e-14);
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        assert!((log_log_slope(&x, &y) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn lsq2_exact_and_ill_conditioned() {
        let b0: Vec<Complex64> = (0..10).map(|i| Complex64::from_polar(1.0, 0.3 * i as f64)).collect();
        let b1: Vec<Complex64> = b0.iter().map(|z| z.conj()).collect();
        let c = [Complex64::new(0.2, -1.0), Complex64::new(3.0, 0.5)];
        let d: Vec<Complex64> = b0.iter().zip(&b1).map(|(a, b)| c[0] * a + c[1] * b).collect();
        let (fit, _) = complex_lsq2(&b0, &b1, &d).unwrap();
        assert!((fit[0] - c[0]).norm() < 1e-12 && (fit[1] - c[1]).norm() < 1e-12);
        assert!(complex_lsq2(&b0, &b0, &d).is_err());
    }

    #[test]
    fn spectral_norm_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -3.0),
            Complex64::new(2.0, 0.0),
        ]));
        assert!((spectral_norm(&m) - 3.0).abs() < 1e-10);
    }
}
