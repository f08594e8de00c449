//! Equivariant layers and their composition into Clebsch-Gordan blocks.
//!
//! Each layer has a pure form over [`SteerableTensor`](crate::SteerableTensor)
//! values (generic in the scalar type) and a taped form over per-degree
//! `[batch, channels, 2l+1]` nodes used for training. Both compute the same
//! function.

mod block;
mod etp;
mod linear;
mod mst;
mod norm;
mod taped;

pub use block::{cg_block_forward, BlockParams, BlockSpec};
pub use etp::{etp_forward, etp_signature};
pub use linear::{linear_forward, DegreeMatrix};
pub use mst::{mst_pair_set, MstPairSet};
pub use norm::{batch_norm_forward, signal_norm_forward, BatchNormState, Mode, BN_MOMENTUM, NORM_EPSILON};
pub use taped::{
    batch_to_vars, batch_norm_tape, cg_block_tape, etp_tape, linear_tape, signal_norm_tape, skip_tape, vars_to_batch,
    BlockVars, DegreeVars,
};
