//! Zernike and spherical Fourier transforms.
//!
//! Positions use `theta` as the polar angle from `+z` and `phi` as the
//! azimuth. Radii are divided by `r_max` before the radial basis is
//! evaluated, so every transform lives on the unit ball.
//!
//! The 3D radial Zernike functions are
//! `R^n_l(r) = (-1)^k sqrt(2n+3) binom((n+l+3)/2 - 1, k) r^l 2F1(-k, (n+l+3)/2; l+3/2; r^2)`
//! with `k = (n-l)/2`; they vanish unless `n - l` is even and non-negative
//! and are orthonormal under `int_0^1 R R' r^2 dr`.

mod cloud;
mod quadrature;
mod sft;
mod zernike;
mod zft;

pub use cloud::{cartesian_to_spherical, parse_point_clouds, spherical_to_cartesian, CloudPoint, PointCloud};
pub use quadrature::{dh_grid, gauss_legendre, DhGrid};
pub use sft::{inverse_sft, read_signals, sft_grid, write_signals, SphericalSignal};
pub use zernike::{radial_count, zernike_radial, zernike_radial_table};
pub use zft::{inverse_zft, zft_density, zft_point_cloud, zft_signature, ZftConfig};
