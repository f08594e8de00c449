use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::steerable::TensorSignature;

fn default_alpha() -> f64 {
    1.0
}
fn default_lr() -> f64 {
    1e-3
}
fn default_batch() -> usize {
    100
}

/// Architecture, objective and optimisation settings of one run.
///
/// `degrees_list` and `channels_list` give the output maximum degree and
/// channel count of each encoder block; the decoder uses the reversed channel
/// list and the degree schedule `min(2^b, L)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub input_signature: TensorSignature,
    pub blocks: usize,
    pub degrees_list: Vec<usize>,
    pub channels_list: Vec<usize>,
    pub z: usize,
    #[serde(default)]
    pub c_init: Option<usize>,
    #[serde(default)]
    pub variational: bool,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub e_rec: usize,
    #[serde(default)]
    pub e_warmup: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    /// Orders of magnitude the learning rate drops every `lr_decay_epochs`.
    #[serde(default)]
    pub lr_decay_orders: f64,
    #[serde(default)]
    pub lr_decay_epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ModelConfig {
    /// Maximum input degree `L`.
    pub fn l_max(&self) -> usize {
        self.input_signature.l_max().unwrap_or(0)
    }

    /// Decoder block output degrees, `min(2^b, L)` for `b = 1..=B`.
    pub fn decoder_degrees(&self) -> Vec<usize> {
        let l = self.l_max();
        (1..=self.blocks).map(|b| if b >= usize::BITS as usize - 1 { l } else { (1usize << b).min(l) }).collect()
    }

    /// Decoder block channel counts (encoder list reversed).
    pub fn decoder_channels(&self) -> Vec<usize> {
        self.channels_list.iter().rev().copied().collect()
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.l_max();
        let b = self.blocks;
        if b == 0 {
            return Err(Error::Config("at least one block is required".into()));
        }
        if self.degrees_list.len() != b || self.channels_list.len() != b {
            return Err(Error::Config(format!(
                "blocks = {b} but degrees_list has {} entries and channels_list has {}",
                self.degrees_list.len(),
                self.channels_list.len()
            )));
        }
        if l == 0 {
            return Err(Error::Config("input signature must contain a degree above 0".into()));
        }
        if self.z == 0 {
            return Err(Error::Config("invariant latent size z must be positive".into()));
        }
        if self.channels_list.contains(&0) || self.c_init == Some(0) {
            return Err(Error::Config("channel counts must be positive".into()));
        }
        if *self.degrees_list.last().expect("b > 0") != 1 {
            return Err(Error::Config(format!(
                "the final encoder block must have l_max = 1, got {}",
                self.degrees_list[b - 1]
            )));
        }
        let mut prev = l;
        for (i, &d) in self.degrees_list.iter().enumerate() {
            if d > l {
                return Err(Error::Config(format!("encoder block {} has l_max = {d} above the input L = {l}", i + 1)));
            }
            if d > 2 * prev {
                return Err(Error::Config(format!(
                    "encoder block {} cannot reach l_max = {d} from input degree {prev} (at most {})",
                    i + 1,
                    2 * prev
                )));
            }
            prev = d;
        }
        let dec = self.decoder_degrees();
        if dec[b - 1] < l {
            return Err(Error::Config(format!(
                "decoder reachability violated: l_max,b = min(2^b, L) gives l_max,B = {} < L = {l} with B = {b} blocks; \
                 the constraint l_max,B >= L requires B >= log2(L) = {:.3}",
                dec[b - 1],
                (l as f64).log2()
            )));
        }
        if self.input_signature.uniform_channels().is_none() && self.c_init.is_none() {
            return Err(Error::Config(format!(
                "input signature {} has unequal channels per degree; an initial projection (c_init) is required",
                self.input_signature
            )));
        }
        if self.variational && (self.beta < 0.0 || !self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be a finite non-negative number, got {}", self.beta)));
        }
        if !(self.lr > 0.0) || !(self.alpha > 0.0) || self.lr_decay_orders < 0.0 {
            return Err(Error::Config("lr and alpha must be positive and lr_decay_orders non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the compact JSON serialisation with `epochs` zeroed, so a
    /// finished run can be resumed with a larger epoch budget.
    pub fn hash(&self) -> String {
        let s = serde_json::to_string(&Self { epochs: 0, ..self.clone() }).expect("config serialises");
        hex::encode(Sha256::digest(s.as_bytes()))
    }

    /// Learning rate of epoch `e`: `lr * 10^(-orders * e / decay_epochs)`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        if self.lr_decay_epochs == 0 {
            return self.lr;
        }
        self.lr * 10f64.powf(-self.lr_decay_orders * epoch as f64 / self.lr_decay_epochs as f64)
    }
}

/// KL weight: 0 before `e_rec`, then a linear ramp reaching `beta` after
/// `e_warmup` more epochs.
pub fn beta_schedule(epoch: usize, beta: f64, e_rec: usize, e_warmup: usize) -> f64 {
    if epoch < e_rec {
        0.0
    } else if e_warmup == 0 || epoch >= e_rec + e_warmup {
        beta
    } else {
        beta * (epoch - e_rec) as f64 / e_warmup as f64
    }
}
