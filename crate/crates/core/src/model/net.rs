use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

use super::config::ModelConfig;
use crate::autodiff::{ParamId, Shape, Tape, Var};
use crate::error::{Error, Result};
use crate::layers::{cg_block_tape, linear_tape, BlockSpec, BlockVars, DegreeVars, Mode, BN_MOMENTUM};
use crate::so3::CgCache;
use crate::steerable::TensorSignature;

/// Named trainable buffers, each a `[1, rows, cols]` array.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamStore {
    pub names: Vec<String>,
    pub shapes: Vec<Shape>,
    pub values: Vec<Vec<f64>>,
}

impl ParamStore {
    fn push(&mut self, name: String, shape: Shape, value: Vec<f64>) -> usize {
        self.names.push(name);
        self.shapes.push(shape);
        self.values.push(value);
        self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn count(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }
}

/// `(degree, store index)` per degree.
type Slots = Vec<(usize, usize)>;

#[derive(Clone, Debug)]
pub(crate) struct BlockSlots {
    pub spec: BlockSpec,
    bn_weight: Slots,
    sn_weight: Slots,
    lin: Slots,
}

/// Parameter layout of the encoder/decoder pair.
#[derive(Clone, Debug)]
pub struct Network {
    pub config: ModelConfig,
    pub params: ParamStore,
    /// Running batch norms per block (encoder blocks first), per degree and channel.
    pub running: Vec<Vec<Vec<f64>>>,
    pub(crate) cache: Arc<CgCache>,
    init: Option<Slots>,
    pub(crate) enc: Vec<BlockSlots>,
    bottleneck: Slots,
    dec_init: Slots,
    pub(crate) dec: Vec<BlockSlots>,
    out: Slots,
}

/// Encoder outputs on a tape.
pub(crate) struct Encoded {
    pub mean: Var,
    pub logvar: Option<Var>,
    /// Raw equivariant vectors `[B, 2, 3]` in degree-1 coefficient order.
    pub vectors: Var,
}

struct Builder<'a, R: Rng> {
    params: ParamStore,
    rng: &'a mut R,
}

impl<R: Rng> Builder<'_, R> {
    fn lin(&mut self, name: &str, from: &TensorSignature, to: &TensorSignature) -> Result<Slots> {
        to.parts()
            .iter()
            .map(|&(l, c_out)| {
                let c_in = from.channels(l);
                if c_in == 0 {
                    return Err(Error::Config(format!("{name}: degree {l} is not produced by the preceding layer")));
                }
                let normal = Normal::new(0.0, (1.0 / c_in as f64).sqrt()).expect("positive std");
                let data = (0..c_in * c_out).map(|_| normal.sample(self.rng)).collect();
                Ok((l, self.params.push(format!("{name}.lin.{l}"), [1, c_in, c_out], data)))
            })
            .collect()
    }

    fn block(&mut self, name: &str, spec: BlockSpec) -> Result<BlockSlots> {
        let bn_weight = spec
            .input
            .parts()
            .iter()
            .map(|&(l, c)| (l, self.params.push(format!("{name}.bn.{l}"), [1, c, 1], vec![1.0; c])))
            .collect();
        let etp = spec.etp_signature();
        let sn_weight =
            etp.parts().iter().map(|&(l, _)| (l, self.params.push(format!("{name}.sn.{l}"), [1, 1, 1], vec![1.0]))).collect();
        let lin = self.lin(name, &etp, &spec.output_signature())?;
        Ok(BlockSlots { spec, bn_weight, sn_weight, lin })
    }
}

impl Network {
    /// Builds and initialises the network: unit norm weights, linearities
    /// drawn from `N(0, 1/C_in)`, unit running norms.
    pub fn new<R: Rng>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let l = config.l_max();
        let mut b = Builder { params: ParamStore { names: vec![], shapes: vec![], values: vec![] }, rng };
        let input = config.input_signature.clone();

        let (init, mut sig) = match config.c_init {
            Some(c) => {
                let to = TensorSignature::new(input.parts().iter().map(|&(l, _)| (l, c)).collect())?;
                (Some(b.lin("init", &input, &to)?), to)
            }
            None => (None, input.clone()),
        };
        let mut enc = Vec::new();
        for (i, (&d, &c)) in config.degrees_list.iter().zip(&config.channels_list).enumerate() {
            let spec = BlockSpec::new(sig, d, c)?;
            sig = spec.output_signature();
            enc.push(b.block(&format!("enc{i}"), spec)?);
        }
        if sig.channels(0) == 0 || sig.channels(1) == 0 {
            return Err(Error::Config(format!("encoder output {sig} lacks degree 0 or 1")));
        }
        let k = if config.variational { 2 * config.z } else { config.z };
        let bottleneck = b.lin("bottleneck", &sig, &TensorSignature::new(vec![(0, k), (1, 2)])?)?;

        let c_b = *config.channels_list.last().expect("validated");
        let latent = TensorSignature::new(vec![(0, config.z), (1, 2)])?;
        let mut sig = TensorSignature::new(vec![(0, c_b), (1, c_b)])?;
        let dec_init = b.lin("dec_init", &latent, &sig)?;
        let mut dec = Vec::new();
        for (i, (d, c)) in config.decoder_degrees().into_iter().zip(config.decoder_channels()).enumerate() {
            let spec = BlockSpec::new(sig, d, c)?;
            sig = spec.output_signature();
            dec.push(b.block(&format!("dec{i}"), spec)?);
        }
        let out = b.lin("out", &sig, &input)?;

        let running = enc
            .iter()
            .chain(&dec)
            .map(|s: &BlockSlots| s.spec.input.parts().iter().map(|&(_, c)| vec![1.0; c]).collect())
            .collect();
        Ok(Self {
            cache: CgCache::shared(l),
            params: b.params,
            running,
            init,
            enc,
            bottleneck,
            dec_init,
            dec,
            out,
            config,
        })
    }

    /// [`Network::new`] seeded from `config.seed`.
    pub fn from_config(config: ModelConfig) -> Result<Self> {
        let seed = config.seed;
        Self::new(config, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))
    }

    /// Replaces the coupling-coefficient table used by every block.
    pub fn set_cg_cache(&mut self, cache: Arc<CgCache>) -> Result<()> {
        if cache.l_max() < self.config.l_max() {
            return Err(Error::Config(format!(
                "coefficient table covers degrees up to {}, model needs {}",
                cache.l_max(),
                self.config.l_max()
            )));
        }
        self.cache = cache;
        Ok(())
    }

    /// Shapes of the encoder blocks, in order.
    pub fn encoder_specs(&self) -> Vec<&BlockSpec> {
        self.enc.iter().map(|b| &b.spec).collect()
    }

    /// Shapes of the decoder blocks, in order.
    pub fn decoder_specs(&self) -> Vec<&BlockSpec> {
        self.dec.iter().map(|b| &b.spec).collect()
    }

    /// Number of trainable scalars.
    pub fn param_count(&self) -> usize {
        self.params.count()
    }

    /// Records every trainable buffer as a parameter leaf.
    pub(crate) fn leaves(&self, tape: &mut Tape) -> Result<Vec<Var>> {
        self.params
            .values
            .iter()
            .zip(&self.params.shapes)
            .enumerate()
            .map(|(i, (v, s))| tape.param(ParamId(i), v.clone(), *s))
            .collect()
    }

    fn vars(slots: &Slots, leaves: &[Var]) -> Vec<(usize, Var)> {
        slots.iter().map(|&(l, i)| (l, leaves[i])).collect()
    }

    fn block_vars(s: &BlockSlots, leaves: &[Var]) -> BlockVars {
        BlockVars {
            bn_weight: Self::vars(&s.bn_weight, leaves),
            sn_weight: Self::vars(&s.sn_weight, leaves),
            lin: Self::vars(&s.lin, leaves),
        }
    }

    fn run_blocks(
        &self,
        tape: &mut Tape,
        leaves: &[Var],
        mut h: DegreeVars,
        blocks: &[BlockSlots],
        offset: usize,
        mode: Mode,
        norms: &mut Vec<(usize, Vec<Vec<f64>>)>,
    ) -> Result<DegreeVars> {
        for (i, s) in blocks.iter().enumerate() {
            let (y, n) = cg_block_tape(
                tape,
                &h,
                &Self::block_vars(s, leaves),
                &self.running[offset + i],
                &s.spec,
                &self.cache,
                mode,
            )?;
            if let Some(n) = n {
                norms.push((offset + i, n));
            }
            h = y;
        }
        Ok(h)
    }

    pub(crate) fn encode_tape(
        &self,
        tape: &mut Tape,
        leaves: &[Var],
        x: &DegreeVars,
        mode: Mode,
        norms: &mut Vec<(usize, Vec<Vec<f64>>)>,
    ) -> Result<Encoded> {
        let h = match &self.init {
            Some(s) => linear_tape(tape, x, &Self::vars(s, leaves))?,
            None => x.clone(),
        };
        let h = self.run_blocks(tape, leaves, h, &self.enc, 0, mode, norms)?;
        let y = linear_tape(tape, &h, &Self::vars(&self.bottleneck, leaves))?;
        let z = self.config.z;
        let s0 = y[0].1;
        let (mean, logvar) = if self.config.variational {
            (tape.slice(s0, 0, z)?, Some(tape.slice(s0, z, z)?))
        } else {
            (s0, None)
        };
        Ok(Encoded { mean, logvar, vectors: y[1].1 })
    }

    /// `latent` is `[B, z, 1]`, `frame` the orthonormal `[B, 2, 3]` pair.
    pub(crate) fn decode_tape(
        &self,
        tape: &mut Tape,
        leaves: &[Var],
        latent: Var,
        frame: Var,
        mode: Mode,
        norms: &mut Vec<(usize, Vec<Vec<f64>>)>,
    ) -> Result<DegreeVars> {
        let x = vec![(0, latent), (1, frame)];
        let h = linear_tape(tape, &x, &Self::vars(&self.dec_init, leaves))?;
        let h = self.run_blocks(tape, leaves, h, &self.dec, self.enc.len(), mode, norms)?;
        linear_tape(tape, &h, &Self::vars(&self.out, leaves))
    }

    /// `running <- xi N + (1 - xi) running` for each recorded block.
    pub(crate) fn update_running(&mut self, norms: &[(usize, Vec<Vec<f64>>)]) {
        for (bi, n) in norms {
            for (run, cur) in self.running[*bi].iter_mut().zip(n) {
                for (r, v) in run.iter_mut().zip(cur) {
                    *r = BN_MOMENTUM * v + (1.0 - BN_MOMENTUM) * *r;
                }
            }
        }
    }
}

/// Differentiable Gram-Schmidt on the two rows of a `[B, 2, 3]` node.
pub(crate) fn gram_schmidt_tape(tape: &mut Tape, v: Var) -> Result<Var> {
    let a = tape.slice(v, 0, 1)?;
    let b = tape.slice(v, 1, 1)?;
    let e1 = unit(tape, a)?;
    let p = tape.mul(e1, b)?;
    let d = tape.sum_axis(p, 2)?;
    let proj = tape.mul(e1, d)?;
    let u = tape.sub(b, proj)?;
    let e2 = unit(tape, u)?;
    tape.concat(&[e1, e2])
}

fn unit(tape: &mut Tape, a: Var) -> Result<Var> {
    let sq = tape.square(a);
    let s = tape.sum_axis(sq, 2)?;
    let s = tape.add_scalar(s, crate::layers::NORM_EPSILON);
    let n = tape.sqrt(s);
    tape.div(a, n)
}
