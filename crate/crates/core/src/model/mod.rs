//! Holographic (variational) autoencoder: encoder, decoder, training and
//! checkpoints.

mod api;
mod checkpoint;
mod config;
mod net;
mod synthetic;
mod train;

pub use api::{LatentCode, LossParts};
pub use checkpoint::{Checkpoint, CheckpointMeta};
pub use config::{beta_schedule, ModelConfig};
pub use net::{Network, ParamStore};
pub use synthetic::{synthetic_clouds, SyntheticSample, SYNTHETIC_CLASSES};
pub use train::{BestSnapshot, EpochRecord, TrainState};
