//! Steerable-tensor toolkit for SO(3)-equivariant autoencoding.
//!
//! The crate is organised bottom-up:
//!
//! * [`so3`]: real spherical harmonics, real Wigner-D matrices, real-basis
//!   Clebsch-Gordan coefficients and Gram-Schmidt frames.
//! * [`steerable`]: the [`SteerableTensor`] value type, its rotation action,
//!   tensor products, norms and pairwise-invariant losses.
//! * [`fourier`]: Zernike and spherical Fourier transforms (forward and inverse).
//! * [`autodiff`]: a small reverse-mode tape with Adam.
//! * [`layers`]: linearity, efficient tensor product, batch norm, signal norm
//!   and their composition into Clebsch-Gordan blocks.
//! * [`model`]: the holographic (variational) autoencoder and its training loop.
//! * [`eval`]: latent-space classifiers, clustering metrics and the
//!   equivariance audit.
//!
//! Most numeric kernels are generic over [`Real`] (`f32` or `f64`); the
//! trainable model runs in `f64`. Concrete aliases for the common case are
//! exported at the crate root.

pub mod autodiff;
pub mod error;
pub mod eval;
pub mod fourier;
pub mod layers;
pub mod model;
pub mod scalar;
pub mod so3;
pub mod steerable;

pub use error::{Error, Result};
pub use scalar::Real;
pub use so3::{CgBlock, CgCache, Frame, Rotation};
pub use steerable::{SteerableTensor, TensorSignature};

/// Double-precision steerable tensor, the type the model trains on.
pub type Tensor = SteerableTensor<f64>;
/// Single-precision steerable tensor.
pub type Tensor32 = SteerableTensor<f32>;
/// Double-precision rotation.
pub type Rot = Rotation<f64>;
/// Single-precision rotation.
pub type Rot32 = Rotation<f32>;
/// Double-precision frame.
pub type Frame64 = Frame<f64>;
/// Double-precision point cloud.
pub type Cloud = fourier::PointCloud<f64>;
/// Double-precision spherical signal on a Driscoll-Healy grid.
pub type Signal = fourier::SphericalSignal<f64>;
