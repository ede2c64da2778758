//! Shared numerical kernels.

mod axial;
mod fft;
mod grid;
mod linalg;
mod quadrature;
mod special;

pub use axial::AxialGrid;
pub use fft::{angular_frequencies, dft, dft_in_place, Direction, UnitaryFft};
pub use grid::UniformGrid;
pub use linalg::{complex_lsq2, linear_fit, log_log_slope, spectral_norm};
pub use quadrature::{
    composite_gauss_legendre, cumulative_uniform, cumulative_uniform_complex, gauss_legendre, gauss_legendre_on_breaks,
    integrate_half_line, QuadratureRule,
};
pub use special::{
    bessel_j0, legendre_p, legendre_table, spherical_bessel, spherical_bessel_derivatives,
    spherical_j, spherical_y,
};
