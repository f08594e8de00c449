//! Reverse-mode differentiation over rank-3 `f64` buffers.
//!
//! Every node holds a `[batch, channels, m]` array. Model code keeps one node
//! per degree, so the primitives here are the ones the equivariant layers
//! need: broadcasting arithmetic, reductions, per-degree channel mixing,
//! channel-wise Clebsch-Gordan contraction and channel concatenation.

mod adam;
mod tape;

pub use adam::Adam;
pub use tape::{Gradients, ParamId, Shape, Tape, Var};
