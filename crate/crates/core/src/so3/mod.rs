//! Special functions and representation theory of SO(3).
//!
//! Conventions, fixed once for the whole crate:
//!
//! * Spherical coordinates: `theta` is the polar angle from `+z`, `phi` the
//!   azimuth from `+x` towards `+y`.
//! * Associated Legendre functions carry the Condon-Shortley phase `(-1)^m`.
//! * Real spherical harmonics are obtained from the complex ones by the fixed
//!   unitary map `S = U Y`:
//!
//!   ```text
//!   m > 0 :  S_lm = (Y_l^{-m} + (-1)^m Y_l^m) / sqrt(2)          (cosine terms)
//!   m = 0 :  S_l0 = Y_l^0
//!   m < 0 :  S_lm = i (Y_l^m - (-1)^m Y_l^{-m}) / sqrt(2)        (sine terms)
//!   ```
//!
//!   which cancels the Condon-Shortley phase, so that `S_1 = sqrt(3/4pi) (y, z, x)`.
//! * Degree-`l` coefficient vectors are stored with `m` running from `-l` to `l`.
//! * [`wigner_d_real`] returns `D_l(R)` with `S_l(R x) = D_l(R) S_l(x)`; the
//!   coefficients of a rotated signal `f(R^-1 x)` are `D_l(R) c`, and
//!   `D_l(R1 R2) = D_l(R1) D_l(R2)`. For `l = 1`, `D_1(R) = P R P^T` with the
//!   coordinate permutation `P (x, y, z) = (y, z, x)`.

mod cg;
mod frame;
mod harmonics;
mod rotation;
mod wigner;

pub use cg::{clebsch_gordan_complex, clebsch_gordan_real, CgBlock, CgCache};
pub use frame::{gram_schmidt_frame, Frame, FRAME_EPSILON};
pub use harmonics::{
    assoc_legendre_normalized, real_spherical_harmonics, real_spherical_harmonics_dir, sh_index,
    sh_len, ShValues,
};
pub use rotation::Rotation;
pub use wigner::{wigner_d_real, wigner_d_real_all, wigner_small_d, WignerD};

/// Converts a degree-1 real coefficient vector `(m=-1, m=0, m=1)` to a Cartesian vector.
#[inline]
pub fn vector_from_l1<T: Copy>(h: [T; 3]) -> [T; 3] {
    [h[2], h[0], h[1]]
}

/// Converts a Cartesian vector to its degree-1 real coefficient vector.
#[inline]
pub fn l1_from_vector<T: Copy>(v: [T; 3]) -> [T; 3] {
    [v[1], v[2], v[0]]
}
