//! Gauss–Legendre rules and fixed-panel composites.

use std::f64::consts::PI;

use crate::error::{param, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: (f64, f64),
}

impl QuadratureRule {
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Iterator over `(node, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Nodes and weights on [-1, 1] by Newton iteration on P_n.
fn reference_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        // Tricomi initial guess, refined by Newton.
        let mut x = ((i as f64 + 0.75) / (nf + 0.5) * PI).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// n-point Gauss–Legendre rule on [a, b].
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if n == 0 {
        return param("gauss_legendre needs n >= 1");
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return param(format!("degenerate interval [{a}, {b}]"));
    }
    let (x, w) = reference_rule(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    Ok(QuadratureRule {
        nodes: x.iter().map(|t| mid + half * t).collect(),
        weights: w.iter().map(|w| w * half).collect(),
        interval: (a, b),
    })
}

/// Composite rule: `panels` equal panels of an `n`-point Gauss–Legendre rule.
pub fn composite_gauss_legendre(n: usize, a: f64, b: f64, panels: usize) -> Result<QuadratureRule> {
    let breaks: Vec<f64> = (0..=panels.max(1))
        .map(|i| a + (b - a) * i as f64 / panels.max(1) as f64)
        .collect();
    gauss_legendre_on_breaks(n, &breaks)
}

/// One `n`-point panel between each consecutive pair of break points.
pub fn gauss_legendre_on_breaks(n: usize, breaks: &[f64]) -> Result<QuadratureRule> {
    if breaks.len() < 2 {
        return param("need at least two break points");
    }
    if n == 0 {
        return param("gauss_legendre needs n >= 1");
    }
    let (x, w) = reference_rule(n);
    let mut nodes = Vec::with_capacity(n * (breaks.len() - 1));
    let mut weights = Vec::with_capacity(nodes.capacity());
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if !(a < b) {
            return param(format!("break points not increasing at {a}, {b}"));
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        nodes.extend(x.iter().map(|t| mid + half * t));
        weights.extend(w.iter().map(|w| w * half));
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        interval: (breaks[0], breaks[breaks.len() - 1]),
    })
}

/// Integral over [0, inf) on dyadic panels [0, s], [s, 2s], [2s, 4s], ...
///
/// Stops when a panel contributes less than `tol` (absolute) twice in a row,
/// or after `max_panels`. Returns the value and an estimate of the neglected tail
/// assuming geometric decay of the panel contributions.
pub fn integrate_half_line<F: FnMut(f64) -> f64>(
    mut f: F,
    scale: f64,
    tol: f64,
    max_panels: usize,
) -> (f64, f64) {
    let (x, w) = reference_rule(24);
    let panel = |a: f64, b: f64, f: &mut F| -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        x.iter().zip(&w).map(|(t, w)| w * half * f(mid + half * t)).sum()
    };
    let mut total = panel(0.0, scale, &mut f);
    let mut a = scale;
    let mut prev = total.abs();
    let mut small = 0;
    let mut tail = f64::INFINITY;
    for _ in 0..max_panels {
        let b = 2.0 * a;
        let c = panel(a, b, &mut f);
        total += c;
        let ratio = if prev > 0.0 { c.abs() / prev } else { 0.0 };
        tail = if ratio < 1.0 {
            c.abs() * ratio / (1.0 - ratio)
        } else {
            f64::INFINITY
        };
        prev = c.abs();
        a = b;
        if c.abs() < tol && tail < tol {
            small += 1;
            if small >= 2 {
                break;
            }
        } else {
            small = 0;
        }
    }
    (total, tail)
}

/// Cumulative integral of uniformly sampled data, `out[0] = 0`.
///
/// Each cell uses the cubic through four neighbouring samples (fourth order).
pub fn cumulative_uniform(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    for i in 1..n {
        // Cell [i-1, i]; cubic through four neighbours where available.
        let cell = if n >= 4 {
            let (j0, f) = if i == 1 {
                (0, [9.0, 19.0, -5.0, 1.0])
            } else if i == n - 1 {
                (n - 4, [1.0, -5.0, 19.0, 9.0])
            } else {
                (i - 2, [-1.0, 13.0, 13.0, -1.0])
            };
            h / 24.0 * (0..4).map(|m| f[m] * values[j0 + m]).sum::<f64>()
        } else {
            0.5 * h * (values[i - 1] + values[i])
        };
        out[i] = out[i - 1] + cell;
    }
    out
}

/// Complex variant of [`cumulative_uniform`].
pub fn cumulative_uniform_complex(values: &[num_complex::Complex64], h: f64) -> Vec<num_complex::Complex64> {
    let re: Vec<f64> = values.iter().map(|z| z.re).collect();
    let im: Vec<f64> = values.iter().map(|z| z.im).collect();
    cumulative_uniform(&re, h)
        .into_iter()
        .zip(cumulative_uniform(&im, h))
        .map(|(a, b)| num_complex::Complex64::new(a, b))
        .collect()
}
