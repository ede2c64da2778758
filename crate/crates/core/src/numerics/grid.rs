use crate::error::{param, Result};

/// Origin-centred uniform grid, `x_j = (j - n/2) dx`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformGrid {
    pub dimension: usize,
    pub n: usize,
    pub dx: f64,
}

impl UniformGrid {
    pub fn new(dimension: usize, n: usize, dx: f64) -> Result<Self> {
        if dimension != 1 && dimension != 3 {
            return param(format!("grid dimension must be 1 or 3, got {dimension}"));
        }
        if n < 8 || n % 2 != 0 {
            return param(format!("grid needs an even n >= 8, got {n}"));
        }
        if !(dx > 0.0) || !dx.is_finite() {
            return param(format!("grid spacing must be positive, got {dx}"));
        }
        Ok(Self { dimension, n, dx })
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.dx
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coordinate(j)).collect()
    }

    /// Half extent `n dx / 2`.
    pub fn half_extent(&self) -> f64 {
        0.5 * self.n as f64 * self.dx
    }

    pub fn total_points(&self) -> usize {
        self.n.pow(self.dimension as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates() {
        assert!(UniformGrid::new(2, 16, 0.1).is_err());
        assert!(UniformGrid::new(1, 7, 0.1).is_err());
        assert!(UniformGrid::new(1, 6, 0.1).is_err());
        assert!(UniformGrid::new(1, 16, 0.0).is_err());
        let g = UniformGrid::new(3, 8, 0.5).unwrap();
        assert_eq!(g.coordinate(4), 0.0);
        assert_eq!(g.total_points(), 512);
    }
}
