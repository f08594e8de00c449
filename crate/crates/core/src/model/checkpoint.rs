use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::net::Network;
use super::train::{BestSnapshot, EpochRecord, TrainState};
use crate::autodiff::Adam;
use crate::error::{Error, Result};
use crate::steerable::DatasetNormalizer;

const MAGIC: &[u8; 8] = b"HOLOCKP1";

/// JSON header of a checkpoint file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config: ModelConfig,
    pub config_hash: String,
    /// Epochs completed.
    pub epoch: usize,
    pub normalizer: Option<DatasetNormalizer>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub best_val_loss: Option<f64>,
    pub adam_t: u64,
    pub has_optimizer: bool,
}

/// Training state plus dataset normaliser, as stored on disk.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub state: TrainState,
}

fn running_buffers(prefix: &str, running: &[Vec<Vec<f64>>], out: &mut Vec<(String, Vec<f64>)>) {
    for (b, degs) in running.iter().enumerate() {
        for (d, v) in degs.iter().enumerate() {
            out.push((format!("{prefix}running/{b}/{d}"), v.clone()));
        }
    }
}

impl Checkpoint {
    /// Full resumable state.
    pub fn from_state(state: &TrainState, normalizer: Option<DatasetNormalizer>) -> Self {
        let cfg = &state.net.config;
        let meta = CheckpointMeta {
            config: cfg.clone(),
            config_hash: cfg.hash(),
            epoch: state.epoch,
            normalizer,
            history: state.history.clone(),
            best_epoch: state.best.as_ref().map(|b| b.epoch),
            best_val_loss: state.best.as_ref().map(|b| b.val_loss),
            adam_t: state.adam.t,
            has_optimizer: true,
        };
        Self { meta, state: state.clone() }
    }

    /// Best-epoch parameters only, without optimiser state.
    pub fn best_of(state: &TrainState, normalizer: Option<DatasetNormalizer>) -> Self {
        let mut c = Self::from_state(state, normalizer);
        c.state.net = state.best_network();
        c.state.adam = Adam::new();
        c.state.best = None;
        c.meta.adam_t = 0;
        c.meta.has_optimizer = false;
        c
    }

    pub fn network(&self) -> &Network {
        &self.state.net
    }

    fn buffers(&self) -> Vec<(String, Vec<f64>)> {
        let s = &self.state;
        let names = &s.net.params.names;
        let mut out: Vec<(String, Vec<f64>)> =
            names.iter().zip(&s.net.params.values).map(|(n, v)| (format!("param/{n}"), v.clone())).collect();
        running_buffers("", &s.net.running, &mut out);
        if self.meta.has_optimizer {
            for (i, n) in names.iter().enumerate() {
                if let (Some(m), Some(v)) = (s.adam.m.get(i), s.adam.v.get(i)) {
                    out.push((format!("adam.m/{n}"), m.clone()));
                    out.push((format!("adam.v/{n}"), v.clone()));
                }
            }
            if let Some(b) = &s.best {
                out.extend(names.iter().zip(&b.params.values).map(|(n, v)| (format!("best/param/{n}"), v.clone())));
                running_buffers("best/", &b.running, &mut out);
            }
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let meta = serde_json::to_vec(&self.meta)?;
        w.write_all(MAGIC)?;
        w.write_all(&(meta.len() as u64).to_le_bytes())?;
        w.write_all(&meta)?;
        let bufs = self.buffers();
        w.write_all(&(bufs.len() as u32).to_le_bytes())?;
        for (name, v) in bufs {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&(v.len() as u64).to_le_bytes())?;
            for x in v {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a checkpoint file".into()));
        }
        let mut u64b = [0u8; 8];
        let mut u32b = [0u8; 4];
        r.read_exact(&mut u64b)?;
        let mut meta = vec![0u8; u64::from_le_bytes(u64b) as usize];
        r.read_exact(&mut meta)?;
        let meta: CheckpointMeta = serde_json::from_slice(&meta)?;
        if meta.config.hash() != meta.config_hash {
            return Err(Error::Format("checkpoint config hash does not match its config".into()));
        }
        r.read_exact(&mut u32b)?;
        let count = u32::from_le_bytes(u32b) as usize;
        let mut bufs = HashMap::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut u32b)?;
            let mut name = vec![0u8; u32::from_le_bytes(u32b) as usize];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|_| Error::Format("non-UTF-8 buffer name".into()))?;
            r.read_exact(&mut u64b)?;
            let n = u64::from_le_bytes(u64b) as usize;
            let mut v = Vec::with_capacity(n);
            for _ in 0..n {
                r.read_exact(&mut u64b)?;
                v.push(f64::from_le_bytes(u64b));
            }
            bufs.insert(name, v);
        }

        let mut net = Network::from_config(meta.config.clone())?;
        let mut take = |key: String, len: usize| -> Result<Vec<f64>> {
            let v = bufs.remove(&key).ok_or_else(|| Error::Format(format!("checkpoint lacks buffer {key}")))?;
            if v.len() != len {
                return Err(Error::Format(format!("buffer {key} has {} values, expected {len}", v.len())));
            }
            Ok(v)
        };
        let fill_running = |prefix: &str, running: &mut Vec<Vec<Vec<f64>>>, take: &mut dyn FnMut(String, usize) -> Result<Vec<f64>>| {
            for (b, degs) in running.iter_mut().enumerate() {
                for (d, v) in degs.iter_mut().enumerate() {
                    *v = take(format!("{prefix}running/{b}/{d}"), v.len())?;
                }
            }
            Ok::<(), Error>(())
        };
        let names = net.params.names.clone();
        for (i, n) in names.iter().enumerate() {
            net.params.values[i] = take(format!("param/{n}"), net.params.values[i].len())?;
        }
        fill_running("", &mut net.running, &mut take)?;
        let mut adam = Adam::new();
        let mut best = None;
        if meta.has_optimizer {
            adam.t = meta.adam_t;
            if meta.adam_t > 0 {
                for (i, n) in names.iter().enumerate() {
                    let len = net.params.values[i].len();
                    adam.m.push(take(format!("adam.m/{n}"), len)?);
                    adam.v.push(take(format!("adam.v/{n}"), len)?);
                }
            }
            if let (Some(epoch), Some(val_loss)) = (meta.best_epoch, meta.best_val_loss) {
                let mut params = net.params.clone();
                for (i, n) in names.iter().enumerate() {
                    params.values[i] = take(format!("best/param/{n}"), params.values[i].len())?;
                }
                let mut running = net.running.clone();
                fill_running("best/", &mut running, &mut take)?;
                best = Some(BestSnapshot { epoch, val_loss, params, running });
            }
        }
        let state = TrainState { net, adam, epoch: meta.epoch, history: meta.history.clone(), best };
        Ok(Self { meta, state })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::read_from(bytes.as_slice())
    }
}
