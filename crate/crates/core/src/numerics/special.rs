//! Spherical Bessel functions, Legendre polynomials and the cylindrical J0.

use std::f64::consts::PI;

use crate::error::{Result, ScatterError};

const RESCALE: f64 = 1e250;

/// Spherical Bessel j_l(x), any x >= 0.
pub fn spherical_j(l: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    let x_abs = x.abs();
    let val = if x_abs < 1e-2 || (x_abs * x_abs < 0.1 * (l as f64 + 1.0)) {
        series_j(l, x_abs)
    } else if x_abs >= l as f64 {
        upward_j(l, x_abs)
    } else {
        miller_j(l, x_abs)
    };
    // j_l(-x) = (-1)^l j_l(x)
    if x < 0.0 && l % 2 == 1 {
        -val
    } else {
        val
    }
}

/// Spherical Bessel y_l(x), x > 0, by upward recurrence.
pub fn spherical_y(l: usize, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(ScatterError::Domain(format!("y_l requires x > 0, got {x}")));
    }
    let (s, c) = x.sin_cos();
    let mut y0 = -c / x;
    if l == 0 {
        return Ok(y0);
    }
    let mut y1 = -c / (x * x) - s / x;
    for n in 1..l {
        let y2 = (2 * n + 1) as f64 / x * y1 - y0;
        y0 = y1;
        y1 = y2;
        if !y1.is_finite() {
            break;
        }
    }
    Ok(y1)
}

/// Both kinds at once, `(j_l, y_l)`.
pub fn spherical_bessel(l: usize, x: f64) -> Result<(f64, f64)> {
    let y = spherical_y(l, x)?;
    Ok((spherical_j(l, x), y))
}

/// Derivatives `(j_l'(x), y_l'(x))` from the lowering relations.
pub fn spherical_bessel_derivatives(l: usize, x: f64) -> Result<(f64, f64)> {
    if l == 0 {
        let (j1, y1) = spherical_bessel(1, x)?;
        return Ok((-j1, -y1));
    }
    let (j, y) = spherical_bessel(l, x)?;
    let (jm, ym) = spherical_bessel(l - 1, x)?;
    let c = (l + 1) as f64 / x;
    Ok((jm - c * j, ym - c * y))
}

fn upward_j(l: usize, x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    let mut j0 = s / x;
    if l == 0 {
        return j0;
    }
    let mut j1 = s / (x * x) - c / x;
    for n in 1..l {
        let j2 = (2 * n + 1) as f64 / x * j1 - j0;
        j0 = j1;
        j1 = j2;
    }
    j1
}

fn series_j(l: usize, x: f64) -> f64 {
    // x^l / (2l+1)!! * sum_k (-x^2/2)^k / (k! (2l+3)(2l+5)...(2l+2k+1))
    let mut pref = 1.0;
    for i in 1..=l {
        pref *= x / (2 * i + 1) as f64;
    }
    let z = -0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= z / (k as f64 * (2 * l + 2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    pref * sum
}

fn miller_j(l: usize, x: f64) -> f64 {
    let start = l + 20 + (40.0 * (l as f64 + x)).sqrt() as usize;
    // Values carry an implicit factor RESCALE^scale.
    let mut scale: i32 = 0;
    let mut f_next = 0.0;
    let mut f = 1e-30;
    let captured = |n: usize, f: f64, scale: i32, slot: &mut [(f64, i32); 3]| {
        if n == l {
            slot[0] = (f, scale);
        }
        if n == 1 {
            slot[1] = (f, scale);
        }
        if n == 0 {
            slot[2] = (f, scale);
        }
    };
    let mut slot = [(0.0, 0); 3];
    captured(start, f, scale, &mut slot);
    let mut n = start;
    while n > 0 {
        // f_{n-1} = (2n+1)/x f_n - f_{n+1}
        let f_prev = (2 * n + 1) as f64 / x * f - f_next;
        f_next = f;
        f = f_prev;
        n -= 1;
        if f.abs() > RESCALE {
            f /= RESCALE;
            f_next /= RESCALE;
            scale += 1;
        }
        captured(n, f, scale, &mut slot);
    }
    let (fl, sl) = slot[0];
    let (f1, s1) = slot[1];
    let (f0, s0) = slot[2];
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    // j_l = F_l * (j_ref / F_ref), F = f * RESCALE^scale
    let (ratio, ds) = if j0.abs() >= j1.abs() {
        (j0 / f0, sl - s0)
    } else {
        (j1 / f1, sl - s1)
    };
    if ds == 0 {
        return fl * ratio;
    }
    let log_mag = fl.abs().ln() + ratio.abs().ln() + ds as f64 * RESCALE.ln();
    (fl * ratio).signum() * log_mag.exp()
}

/// Legendre polynomial P_l(t) by the three-term recurrence.
pub fn legendre_p(l: usize, t: f64) -> Result<f64> {
    if !(t.abs() <= 1.0 + 1e-14) {
        return Err(ScatterError::Domain(format!("|t| > 1 in P_l: {t}")));
    }
    let t = t.clamp(-1.0, 1.0);
    Ok(legendre_p_unchecked(l, t))
}

pub(crate) fn legendre_p_unchecked(l: usize, t: f64) -> f64 {
    let mut p0 = 1.0;
    if l == 0 {
        return p0;
    }
    let mut p1 = t;
    for k in 2..=l {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// All P_0..=P_lmax at t.
pub fn legendre_table(l_max: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(l_max + 1);
    out.push(1.0);
    if l_max >= 1 {
        out.push(t);
    }
    for k in 2..=l_max {
        let kf = k as f64;
        let p = ((2.0 * kf - 1.0) * t * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
        out.push(p);
    }
    out
}

/// Cylindrical J0 via the periodic trapezoid rule on its integral representation.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    let m = (x as usize + 40).next_power_of_two();
    let h = PI / m as f64;
    // (1/pi) int_0^pi cos(x sin phi) dphi; integrand is even and pi-periodic.
    let mut s = 0.0;
    for i in 0..m {
        s += (x * (i as f64 * h).sin()).cos();
    }
    s / m as f64
}
