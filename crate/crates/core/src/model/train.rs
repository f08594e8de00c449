use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::api::LossParts;
use super::config::beta_schedule;
use super::net::{Network, ParamStore};
use crate::autodiff::{Adam, Tape};
use crate::error::{Error, Result};
use crate::layers::Mode;
use crate::steerable::SteerableTensor;

/// Summary of one training epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub beta: f64,
    pub train: LossParts,
    pub val: LossParts,
    /// Whether this epoch was eligible for model selection.
    pub selectable: bool,
}

/// Parameters kept for the best validation epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct BestSnapshot {
    pub epoch: usize,
    pub val_loss: f64,
    pub params: ParamStore,
    pub running: Vec<Vec<Vec<f64>>>,
}

/// Everything needed to continue a run bit-for-bit.
#[derive(Clone, Debug)]
pub struct TrainState {
    pub net: Network,
    pub adam: Adam,
    /// Next epoch to run.
    pub epoch: usize,
    pub history: Vec<EpochRecord>,
    pub best: Option<BestSnapshot>,
}

impl TrainState {
    pub fn new(net: Network) -> Self {
        Self { net, adam: Adam::new(), epoch: 0, history: Vec::new(), best: None }
    }

    /// One pass over `train` in a seed- and epoch-determined order, then
    /// validation in evaluation mode.
    pub fn run_epoch(&mut self, train: &[SteerableTensor<f64>], val: &[SteerableTensor<f64>]) -> Result<EpochRecord> {
        if train.is_empty() {
            return Err(Error::InvalidArgument("empty training set".into()));
        }
        let cfg = self.net.config.clone();
        let e = self.epoch;
        let lr = cfg.lr_at(e);
        let beta = if cfg.variational { beta_schedule(e, cfg.beta, cfg.e_rec, cfg.e_warmup) } else { 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(e as u64 + 1);
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut rng);

        let mut acc = LossParts::default();
        for (bi, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<_> = idx.iter().map(|&i| train[i].clone()).collect();
            let mut tape = Tape::new();
            let leaves = self.net.leaves(&mut tape)?;
            let t = self.net.taped_loss(&mut tape, &leaves, &batch, Mode::Train, beta, Some(&mut rng))?;
            if !t.parts.total.is_finite() {
                return Err(Error::NonFinite(format!("loss {} at epoch {e}, batch {bi}", t.parts.total)));
            }
            let grads = tape.backward(t.loss)?;
            let g: Vec<Option<Vec<f64>>> = leaves.iter().map(|&v| grads.wrt(v).map(<[f64]>::to_vec)).collect();
            self.adam
                .step(&mut self.net.params.values, &g, lr)
                .map_err(|err| Error::NonFinite(format!("epoch {e}, batch {bi}: {err}")))?;
            self.net.update_running(&t.norms);
            let w = batch.len() as f64 / train.len() as f64;
            acc.total += w * t.parts.total;
            acc.reconstruction += w * t.parts.reconstruction;
            acc.kl += w * t.parts.kl;
        }
        let val_parts = if val.is_empty() { acc } else { self.net.evaluate_loss(val, beta)? };
        if !val_parts.total.is_finite() {
            return Err(Error::NonFinite(format!("validation loss {} at epoch {e}", val_parts.total)));
        }
        let selectable = !cfg.variational || e >= cfg.e_rec + cfg.e_warmup;
        if selectable && self.best.as_ref().is_none_or(|b| val_parts.total < b.val_loss) {
            self.best = Some(BestSnapshot {
                epoch: e,
                val_loss: val_parts.total,
                params: self.net.params.clone(),
                running: self.net.running.clone(),
            });
        }
        let rec = EpochRecord { epoch: e, lr, beta, train: acc, val: val_parts, selectable };
        self.history.push(rec.clone());
        self.epoch += 1;
        Ok(rec)
    }

    /// Runs until `config.epochs`, calling `after_epoch` once per epoch.
    pub fn train<F>(&mut self, train: &[SteerableTensor<f64>], val: &[SteerableTensor<f64>], mut after_epoch: F) -> Result<()>
    where
        F: FnMut(&TrainState, &EpochRecord) -> Result<()>,
    {
        while self.epoch < self.net.config.epochs {
            let rec = self.run_epoch(train, val)?;
            after_epoch(self, &rec)?;
        }
        Ok(())
    }

    /// The network with the best selected parameters, or the current one if
    /// no epoch has been selectable yet.
    pub fn best_network(&self) -> Network {
        let mut net = self.net.clone();
        if let Some(b) = &self.best {
            net.params = b.params.clone();
            net.running = b.running.clone();
        }
        net
    }
}
