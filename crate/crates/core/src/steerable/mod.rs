//! Steerable tensors and their algebra.
//!
//! A [`SteerableTensor`] stores, for each degree `l` of its
//! [`TensorSignature`], a `C x (2l+1)` block of real coefficients. Storage is
//! flat: degree-major, then channel-major, then `m` from `-l` to `l`. Under a
//! rotation `R` every channel row transforms as `h -> D_l(R) h`.

mod io;
mod loss;
mod normalize;
mod product;
mod signature;
mod tensor;

pub use io::TensorDataset;
pub use loss::{cosine_loss, mse, per_degree_sq_error};
pub use normalize::DatasetNormalizer;
pub use product::{cg_tensor_product_full, generalized_dot};
pub use signature::TensorSignature;
pub use tensor::SteerableTensor;
