//! Unitary discrete Fourier transform on top of rustfft.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{param, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `X_k = n^{-1/2} sum_j x_j e^{-2 pi i jk/n}`
    Forward,
    Inverse,
}

/// Planned forward/inverse pair of a fixed length, reusable across time steps.
#[derive(Clone)]
pub struct UnitaryFft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for UnitaryFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitaryFft").field("n", &self.n).finish()
    }
}

impl UnitaryFft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return param("dft length must be positive");
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Ok(Self { n, forward, inverse, scratch: vec![Complex64::default(); len] })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn process(&mut self, data: &mut [Complex64], direction: Direction) -> Result<()> {
        if data.len() != self.n {
            return param(format!("dft planned for {} points, got {}", self.n, data.len()));
        }
        let plan = match direction {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        };
        plan.process_with_scratch(data, &mut self.scratch);
        let norm = 1.0 / (self.n as f64).sqrt();
        data.iter_mut().for_each(|z| *z *= norm);
        Ok(())
    }
}

/// One-shot unitary DFT.
pub fn dft(values: &[Complex64], direction: Direction) -> Result<Vec<Complex64>> {
    let mut out = values.to_vec();
    dft_in_place(&mut out, direction)?;
    Ok(out)
}

pub fn dft_in_place(data: &mut [Complex64], direction: Direction) -> Result<()> {
    UnitaryFft::new(data.len())?.process(data, direction)
}

/// Angular frequencies matching the DFT bin ordering for spacing `dx`.
pub fn angular_frequencies(n: usize, dx: f64) -> Vec<f64> {
    let dk = 2.0 * PI / (n as f64 * dx);
    (0..n)
        .map(|j| {
            let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
            m * dk
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(values: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = values.len();
        (0..n)
            .map(|k| {
                values
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * Complex64::from_polar(1.0, sign * 2.0 * PI * (j * k) as f64 / n as f64))
                    .sum::<Complex64>()
                    / (n as f64).sqrt()
            })
            .collect()
    }

    #[test]
    fn ones_give_dc_spike() {
        let out = dft(&vec![Complex64::new(1.0, 0.0); 8], Direction::Forward).unwrap();
        assert!((out[0] - Complex64::new(8f64.sqrt(), 0.0)).norm() < 1e-14);
        assert!(out[1..].iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn single_frequency_single_bin() {
        let n = 32;
        let m = 5;
        let x: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * (m * j) as f64 / n as f64))
            .collect();
        let out = dft(&x, Direction::Forward).unwrap();
        let oracle = naive(&x, -1.0);
        for (k, (a, b)) in out.iter().zip(&oracle).enumerate() {
            assert!((a - b).norm() < 1e-12);
            if k != m {
                assert!(a.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        assert!(dft(&[], Direction::Forward).is_err());
        let mut plan = UnitaryFft::new(8).unwrap();
        assert!(plan.process(&mut [Complex64::default(); 4], Direction::Forward).is_err());
        let x = vec![Complex64::new(1.0, 0.5); 12];
        let y = dft(&dft(&x, Direction::Forward).unwrap(), Direction::Inverse).unwrap();
        assert!(x.iter().zip(&y).all(|(a, b)| (a - b).norm() < 1e-14));
    }

    proptest! {
        #[test]
        fn round_trip_and_parseval(
            raw in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64)
        ) {
            let x: Vec<Complex64> = raw.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
            let y = dft(&x, Direction::Forward).unwrap();
            let z = dft(&y, Direction::Inverse).unwrap();
            for (a, b) in x.iter().zip(&z) {
                prop_assert!((a - b).norm() < 1e-12);
            }
            let nx: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let ny: f64 = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            prop_assert!((nx - ny).abs() < 1e-12);
            let oracle = naive(&x, -1.0);
            for (a, b) in y.iter().zip(&oracle) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
