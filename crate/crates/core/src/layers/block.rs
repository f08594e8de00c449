use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::etp::etp_signature;
use super::{
    batch_norm_forward, etp_forward, linear_forward, mst_pair_set, signal_norm_forward, BatchNormState, DegreeMatrix, Mode,
    MstPairSet, BN_MOMENTUM,
};
use crate::error::{Error, Result};
use crate::so3::CgCache;
use crate::steerable::{SteerableTensor, TensorSignature};
use crate::Real;

/// Shape of one Clebsch-Gordan block: input signature (uniform channels),
/// output maximum degree and output channel count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSpec {
    pub input: TensorSignature,
    pub l_max_out: usize,
    pub c_out: usize,
}

impl BlockSpec {
    pub fn new(input: TensorSignature, l_max_out: usize, c_out: usize) -> Result<Self> {
        if input.is_empty() || input.uniform_channels().is_none() {
            return Err(Error::ChannelMismatch(format!("block input {input} must have equal channels per degree")));
        }
        if c_out == 0 {
            return Err(Error::Config("block output needs at least one channel".into()));
        }
        Ok(Self { input, l_max_out, c_out })
    }

    pub fn l_max_in(&self) -> usize {
        self.input.l_max().unwrap_or(0)
    }

    pub fn pairs(&self) -> MstPairSet {
        mst_pair_set(self.l_max_in(), self.l_max_out.min(2 * self.l_max_in()))
    }

    pub fn etp_signature(&self) -> TensorSignature {
        etp_signature(&self.input, &self.pairs()).expect("validated block input")
    }

    /// `c_out` channels at every degree the product reaches.
    pub fn output_signature(&self) -> TensorSignature {
        let parts = self.etp_signature().parts().iter().map(|&(l, _)| (l, self.c_out)).collect();
        TensorSignature::new(parts).expect("subset of a valid signature")
    }
}

/// Learnable state of one block: batch norm over the input, per-degree
/// signal-norm weights over the product, and the output linearity.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockParams<T> {
    pub bn: BatchNormState<T>,
    pub sn_weight: Vec<T>,
    pub lin: Vec<DegreeMatrix<T>>,
}

impl<T: Real> BlockParams<T> {
    /// Unit affine weights; linearity entries drawn from `N(0, 1/C_in)`.
    pub fn init<R: Rng + ?Sized>(spec: &BlockSpec, rng: &mut R) -> Self {
        let etp = spec.etp_signature();
        let lin = etp
            .parts()
            .iter()
            .map(|&(l, c_in)| {
                let normal = Normal::new(0.0, (1.0 / c_in as f64).sqrt()).expect("positive std");
                let data = (0..c_in * spec.c_out).map(|_| T::lit(normal.sample(rng))).collect();
                DegreeMatrix { l, rows: c_in, cols: spec.c_out, data }
            })
            .collect();
        Self { bn: BatchNormState::new(spec.input.clone()), sn_weight: vec![T::one(); etp.parts().len()], lin }
    }

    pub fn trainable_count(&self) -> usize {
        self.bn.weight.iter().map(Vec::len).sum::<usize>()
            + self.sn_weight.len()
            + self.lin.iter().map(|m| m.data.len()).sum::<usize>()
    }
}

/// Adds `x` restricted to the degrees of `out`, zero-padded or truncated to
/// the output channel count.
pub(crate) fn add_skip<T: Real>(out: &mut SteerableTensor<T>, x: &SteerableTensor<T>) {
    let parts: Vec<(usize, usize)> = out.signature().parts().to_vec();
    for (l, c_out) in parts {
        let c_in = x.signature().channels(l);
        for ch in 0..c_in.min(c_out) {
            let src = x.channel(l, ch).to_vec();
            for (o, s) in out.channel_mut(l, ch).iter_mut().zip(src) {
                *o = *o + s;
            }
        }
    }
}

/// `BN -> ETP(x, x) -> SN -> Lin`, plus the skip connection.
pub fn cg_block_forward<T: Real>(
    batch: &[SteerableTensor<T>],
    params: &mut BlockParams<T>,
    spec: &BlockSpec,
    cache: &CgCache,
    mode: Mode,
) -> Result<Vec<SteerableTensor<T>>> {
    let pairs = spec.pairs();
    let normed = batch_norm_forward(batch, &mut params.bn, mode, T::lit(BN_MOMENTUM))?;
    batch
        .iter()
        .zip(&normed)
        .map(|(x, h)| {
            let p = etp_forward(h, h, &pairs, cache)?;
            let s = signal_norm_forward(&p, &params.sn_weight)?;
            let mut y = linear_forward(&s, &params.lin)?;
            add_skip(&mut y, x);
            Ok(y)
        })
        .collect()
}
