//! Uniform grid in cylindrical coordinates `(rho, z)` for fields symmetric
//! about the z axis.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{param, Result};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AxialGrid {
    pub h: f64,
    /// Nodes `rho_i = i h`, `i < n_rho`.
    pub n_rho: usize,
    pub z_min: f64,
    /// Nodes `z_j = z_min + j h`, `j < n_z`.
    pub n_z: usize,
}

impl AxialGrid {
    /// Covers `[0, rho_max] x [z_min, z_max]`, widening slightly so both
    /// directions have an even number of intervals.
    pub fn new(h: f64, rho_max: f64, z_min: f64, z_max: f64) -> Result<Self> {
        if !(h > 0.0) || !(rho_max > 0.0) || !(z_max > z_min) {
            return param("axial grid needs h > 0, rho_max > 0 and z_max > z_min");
        }
        let even = |len: f64| {
            let m = (len / h).ceil() as usize;
            (m + m % 2).max(4)
        };
        let n_rho = even(rho_max) + 1;
        let n_z = even(z_max - z_min) + 1;
        Ok(AxialGrid { h, n_rho, z_min, n_z })
    }

    pub fn len(&self) -> usize {
        self.n_rho * self.n_z
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rho(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn z(&self, j: usize) -> f64 {
        self.z_min + j as f64 * self.h
    }

    pub fn z_max(&self) -> f64 {
        self.z(self.n_z - 1)
    }

    pub fn rho_max(&self) -> f64 {
        self.rho(self.n_rho - 1)
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_z + j
    }

    pub fn sample<T, F: Fn(f64, f64) -> T>(&self, f: F) -> Vec<T> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.n_rho {
            for j in 0..self.n_z {
                out.push(f(self.rho(i), self.z(j)));
            }
        }
        out
    }

    /// True for nodes away from the outer rho edge and both z edges.
    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        i + 1 < self.n_rho && j > 0 && j + 1 < self.n_z
    }

    /// Cylindrical Laplacian `f_rr + f_r / rho + f_zz`, second order.
    pub fn laplacian(&self, f: &[Complex64]) -> Vec<Complex64> {
        let h2 = self.h * self.h;
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        for i in 0..self.n_rho {
            for j in 0..self.n_z {
                let c = f[self.idx(i, j)];
                let radial = if i == 0 {
                    // Even in rho: f_rr + f_r/rho -> 2 f_rr at the axis (fourth order).
                    (16.0 * f[self.idx(1, j)] - f[self.idx(2, j)] - 15.0 * c) / (3.0 * h2)
                } else if i + 1 < self.n_rho {
                    let (p, m) = (f[self.idx(i + 1, j)], f[self.idx(i - 1, j)]);
                    (p - 2.0 * c + m) / h2 + (p - m) / (2.0 * self.h * self.rho(i))
                } else {
                    let (a, b, d) = (f[self.idx(i - 1, j)], f[self.idx(i - 2, j)], f[self.idx(i - 3, j)]);
                    let frr = (2.0 * c - 5.0 * a + 4.0 * b - d) / h2;
                    let fr = (3.0 * c - 4.0 * a + b) / (2.0 * self.h);
                    frr + fr / self.rho(i)
                };
                let axial = if j == 0 {
                    let (a, b, d) = (f[self.idx(i, 1)], f[self.idx(i, 2)], f[self.idx(i, 3)]);
                    (2.0 * c - 5.0 * a + 4.0 * b - d) / h2
                } else if j + 1 < self.n_z {
                    (f[self.idx(i, j + 1)] - 2.0 * c + f[self.idx(i, j - 1)]) / h2
                } else {
                    let (a, b, d) = (f[self.idx(i, j - 1)], f[self.idx(i, j - 2)], f[self.idx(i, j - 3)]);
                    (2.0 * c - 5.0 * a + 4.0 * b - d) / h2
                };
                out[self.idx(i, j)] = radial + axial;
            }
        }
        out
    }

    /// `(d/drho, d/dz)` by central differences, one-sided at the edges.
    pub fn gradient(&self, f: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let h = self.h;
        let mut dr = vec![Complex64::new(0.0, 0.0); self.len()];
        let mut dz = dr.clone();
        for i in 0..self.n_rho {
            for j in 0..self.n_z {
                let k = self.idx(i, j);
                dr[k] = if i == 0 {
                    Complex64::new(0.0, 0.0)
                } else if i + 1 < self.n_rho {
                    (f[self.idx(i + 1, j)] - f[self.idx(i - 1, j)]) / (2.0 * h)
                } else {
                    (3.0 * f[k] - 4.0 * f[self.idx(i - 1, j)] + f[self.idx(i - 2, j)]) / (2.0 * h)
                };
                dz[k] = if j == 0 {
                    (-3.0 * f[k] + 4.0 * f[self.idx(i, 1)] - f[self.idx(i, 2)]) / (2.0 * h)
                } else if j + 1 < self.n_z {
                    (f[self.idx(i, j + 1)] - f[self.idx(i, j - 1)]) / (2.0 * h)
                } else {
                    (3.0 * f[k] - 4.0 * f[self.idx(i, j - 1)] + f[self.idx(i, j - 2)]) / (2.0 * h)
                };
            }
        }
        (dr, dz)
    }

    /// Running integral along z: `int_{z_min}^{z} f` when `from_below`,
    /// otherwise `int_{z}^{z_max} f`.
    pub fn cumulative_z(&self, f: &[Complex64], from_below: bool) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        for i in 0..self.n_rho {
            let row = &f[self.idx(i, 0)..self.idx(i, 0) + self.n_z];
            let c = super::cumulative_uniform_complex(row, self.h);
            let total = c[self.n_z - 1];
            for j in 0..self.n_z {
                out[self.idx(i, j)] = if from_below { c[j] } else { total - c[j] };
            }
        }
        out
    }

    fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
        let mut w = vec![0.0; n];
        for (k, wk) in w.iter_mut().enumerate() {
            *wk = if k == 0 || k == n - 1 {
                h / 3.0
            } else if k % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            };
        }
        w
    }

    /// Volume weights `2 pi rho drho dz` (composite Simpson in both directions).
    pub fn volume_weights(&self) -> Vec<f64> {
        let wr = Self::simpson_weights(self.n_rho, self.h);
        let wz = Self::simpson_weights(self.n_z, self.h);
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.n_rho {
            for &w in &wz {
                out.push(2.0 * PI * self.rho(i) * wr[i] * w);
            }
        }
        out
    }

    /// Bicubic Lagrange interpolation; the field is mirrored across the axis.
    /// Returns `None` outside the grid.
    pub fn interpolate(&self, f: &[Complex64], rho: f64, z: f64) -> Option<Complex64> {
        self.interpolate_with_parity(f, rho, z, false)
    }

    /// As [`interpolate`](Self::interpolate), for a field that is even
    /// (`odd = false`) or odd (e.g. a `rho` derivative) across the axis.
    pub fn interpolate_with_parity(&self, f: &[Complex64], rho: f64, z: f64, odd: bool) -> Option<Complex64> {
        let rho = rho.abs();
        let s = rho / self.h;
        let t = (z - self.z_min) / self.h;
        if s > (self.n_rho - 1) as f64 + 1e-9 || t < -1e-9 || t > (self.n_z - 1) as f64 + 1e-9 {
            return None;
        }
        let stencil = |x: f64, n: usize, mirror: bool| -> ([i64; 4], [f64; 4]) {
            let mut base = x.floor() as i64 - 1;
            if !mirror {
                base = base.max(0);
            }
            let base = base.min(n as i64 - 4);
            let idx = [base, base + 1, base + 2, base + 3];
            let mut w = [1.0; 4];
            for a in 0..4 {
                for b in 0..4 {
                    if a != b {
                        w[a] *= (x - idx[b] as f64) / (idx[a] - idx[b]) as f64;
                    }
                }
            }
            (idx, w)
        };
        let (ri, rw) = stencil(s, self.n_rho, true);
        let (zi, zw) = stencil(t, self.n_z, false);
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..4 {
            let i = ri[a].unsigned_abs() as usize;
            let sign = if odd && ri[a] < 0 { -1.0 } else { 1.0 };
            for b in 0..4 {
                acc += f[self.idx(i, zi[b] as usize)] * (sign * rw[a] * zw[b]);
            }
        }
        Some(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> AxialGrid {
        AxialGrid::new(0.05, 4.0, -4.0, 4.0).unwrap()
    }

    fn laplacian_error(h: f64) -> f64 {
        // Delta exp(-r^2) = (4 r^2 - 6) exp(-r^2)
        let g = AxialGrid::new(h, 4.0, -4.0, 4.0).unwrap();
        let f = g.sample(|r, z| Complex64::new((-(r * r + z * z)).exp(), 0.0));
        let lap = g.laplacian(&f);
        let mut worst: f64 = 0.0;
        for i in 0..g.n_rho {
            for j in 0..g.n_z {
                let r2 = g.rho(i).powi(2) + g.z(j).powi(2);
                let exact = (4.0 * r2 - 6.0) * (-r2).exp();
                worst = worst.max((lap[g.idx(i, j)].re - exact).abs());
            }
        }
        worst
    }

    #[test]
    fn laplacian_second_order() {
        let (a, b) = (laplacian_error(0.1), laplacian_error(0.05));
        assert!(b < 2e-2, "{b}");
        let order = (a / b).log2();
        assert!((order - 2.0).abs() < 0.2, "{order}");
    }

    #[test]
    fn volume_of_gaussian() {
        let g = grid();
        let f = g.sample(|r, z| (-(r * r + z * z)).exp());
        let v: f64 = g.volume_weights().iter().zip(&f).map(|(w, f)| w * f).sum();
        assert!((v - PI.powf(1.5)).abs() < 1e-5, "{v}");
    }

    #[test]
    fn cumulative_both_ways() {
        let g = grid();
        let f = g.sample(|_, z| Complex64::new(z.cos(), 0.0));
        let up = g.cumulative_z(&f, true);
        let down = g.cumulative_z(&f, false);
        for j in 0..g.n_z {
            let z = g.z(j);
            assert!((up[g.idx(3, j)].re - (z.sin() - g.z_min.sin())).abs() < 1e-6);
            assert!((down[g.idx(3, j)].re - (g.z_max().sin() - z.sin())).abs() < 1e-6);
        }
    }

    #[test]
    fn interpolation_of_smooth_field() {
        let g = grid();
        let f = g.sample(|r, z| Complex64::new((-(r * r) - 0.5 * z).exp(), r * r * z));
        for &(r, z) in &[(0.0, 0.0), (0.013, 1.234), (2.71, -3.9), (3.99, 3.99)] {
            let v = g.interpolate(&f, r, z).unwrap();
            let e = Complex64::new((-(r * r) - 0.5 * z).exp(), r * r * z);
            assert!((v - e).norm() < 1e-5, "{r} {z}: {v} vs {e}");
        }
        assert!(g.interpolate(&f, 5.0, 0.0).is_none());
    }

    #[test]
    fn odd_field_near_axis() {
        let g = grid();
        let f = g.sample(|r, z| Complex64::new(r * (-(r * r + z * z)).exp(), 0.0));
        for &(r, z) in &[(0.01, 0.3), (0.07, -1.0)] {
            let v = g.interpolate_with_parity(&f, r, z, true).unwrap().re;
            let e = r * (-(r * r + z * z)).exp();
            assert!((v - e).abs() < 1e-6, "{v} vs {e}");
        }
    }
}
