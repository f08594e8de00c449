use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::net::{gram_schmidt_tape, Network};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::layers::{batch_to_vars, vars_to_batch, Mode};
use crate::so3::{gram_schmidt_frame, l1_from_vector, vector_from_l1, Frame};
use crate::steerable::SteerableTensor;

/// Inference batch size; evaluation-mode outputs do not depend on it.
const CHUNK: usize = 64;

/// Invariant embedding and equivariant frame of one input.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentCode {
    pub mean: Vec<f64>,
    pub logvar: Option<Vec<f64>>,
    pub frame: Frame<f64>,
}

/// Scalar loss terms of one batch or epoch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub reconstruction: f64,
    pub kl: f64,
}

pub(crate) struct TapedLoss {
    pub loss: Var,
    pub parts: LossParts,
    pub norms: Vec<(usize, Vec<Vec<f64>>)>,
}

impl Network {
    /// Records `alpha * MSE + beta * KL` for a batch. With `noise`, a
    /// variational model samples its latent; otherwise it decodes the mean.
    pub(crate) fn taped_loss(
        &self,
        tape: &mut Tape,
        leaves: &[Var],
        xs: &[SteerableTensor<f64>],
        mode: Mode,
        beta: f64,
        noise: Option<&mut ChaCha8Rng>,
    ) -> Result<TapedLoss> {
        let b = xs.len();
        let x = batch_to_vars(tape, xs)?;
        let mut norms = Vec::new();
        let enc = self.encode_tape(tape, leaves, &x, mode, &mut norms)?;
        let frame = gram_schmidt_tape(tape, enc.vectors)?;
        let z = self.config.z;
        let latent = match (enc.logvar, noise) {
            (Some(lv), Some(rng)) => {
                let e: Vec<f64> = (0..b * z).map(|_| rng.sample(StandardNormal)).collect();
                let e = tape.constant(e, [b, z, 1])?;
                let half = tape.scale(lv, 0.5);
                let sd = tape.exp(half);
                let s = tape.mul(sd, e)?;
                tape.add(enc.mean, s)?
            }
            _ => enc.mean,
        };
        let y = self.decode_tape(tape, leaves, latent, frame, mode, &mut norms)?;

        let n = self.config.input_signature.total_len();
        let mut sq = None;
        for (&(l, xv), &(l2, yv)) in x.iter().zip(&y) {
            debug_assert_eq!(l, l2);
            let d = tape.sub(yv, xv)?;
            let d2 = tape.square(d);
            let s = tape.sum(d2);
            sq = Some(match sq {
                Some(acc) => tape.add(acc, s)?,
                None => s,
            });
        }
        let rec = tape.scale(sq.expect("non-empty signature"), 1.0 / (b * n) as f64);
        let mut loss = tape.scale(rec, self.config.alpha);
        let mut kl_value = 0.0;
        if let Some(lv) = enc.logvar {
            let m2 = tape.square(enc.mean);
            let ev = tape.exp(lv);
            let a = tape.add(m2, ev)?;
            let a = tape.sub(a, lv)?;
            let a = tape.add_scalar(a, -1.0);
            let s = tape.sum(a);
            let kl = tape.scale(s, 0.5 / b as f64);
            kl_value = tape.scalar(kl);
            if beta != 0.0 {
                let w = tape.scale(kl, beta);
                loss = tape.add(loss, w)?;
            }
        }
        let parts = LossParts { total: tape.scalar(loss), reconstruction: tape.scalar(rec), kl: kl_value };
        Ok(TapedLoss { loss, parts, norms })
    }

    /// Training-mode loss of one batch (decoding the posterior mean) and its
    /// gradient for every trainable buffer, in store order. Running norms are
    /// left untouched.
    pub fn loss_and_gradients(&self, xs: &[SteerableTensor<f64>], beta: f64) -> Result<(LossParts, Vec<Vec<f64>>)> {
        let mut tape = Tape::new();
        let leaves = self.leaves(&mut tape)?;
        let t = self.taped_loss(&mut tape, &leaves, xs, Mode::Train, beta, None)?;
        let g = tape.backward(t.loss)?;
        let grads = leaves
            .iter()
            .zip(&self.params.values)
            .map(|(&v, p)| g.wrt(v).map_or_else(|| vec![0.0; p.len()], <[f64]>::to_vec))
            .collect();
        Ok((t.parts, grads))
    }

    /// Evaluation-mode loss summed over `xs` (batch-size weighted mean).
    pub fn evaluate_loss(&self, xs: &[SteerableTensor<f64>], beta: f64) -> Result<LossParts> {
        let mut acc = LossParts::default();
        for chunk in xs.chunks(CHUNK) {
            let mut tape = Tape::new();
            let leaves = self.leaves(&mut tape)?;
            let t = self.taped_loss(&mut tape, &leaves, chunk, Mode::Eval, beta, None)?;
            let w = chunk.len() as f64 / xs.len() as f64;
            acc.total += w * t.parts.total;
            acc.reconstruction += w * t.parts.reconstruction;
            acc.kl += w * t.parts.kl;
        }
        Ok(acc)
    }

    /// Embeds each tensor. Fails with a degenerate-frame error naming the
    /// offending batch index when the two frame vectors are (nearly) dependent.
    pub fn encode_batch(&self, xs: &[SteerableTensor<f64>]) -> Result<Vec<LatentCode>> {
        let mut out = Vec::with_capacity(xs.len());
        for (ci, chunk) in xs.chunks(CHUNK).enumerate() {
            let mut tape = Tape::new();
            let leaves = self.leaves(&mut tape)?;
            let x = batch_to_vars(&mut tape, chunk)?;
            let enc = self.encode_tape(&mut tape, &leaves, &x, Mode::Eval, &mut Vec::new())?;
            let z = self.config.z;
            let mean = tape.value(enc.mean).to_vec();
            let lv = enc.logvar.map(|v| tape.value(v).to_vec());
            let vecs = tape.value(enc.vectors);
            for i in 0..chunk.len() {
                let v = |k: usize| {
                    let s = &vecs[(i * 2 + k) * 3..(i * 2 + k + 1) * 3];
                    vector_from_l1([s[0], s[1], s[2]])
                };
                let frame = gram_schmidt_frame(v(0), v(1)).map_err(|e| {
                    Error::DegenerateFrame(format!("input {}: {e}", ci * CHUNK + i))
                })?;
                out.push(LatentCode {
                    mean: mean[i * z..(i + 1) * z].to_vec(),
                    logvar: lv.as_ref().map(|l| l[i * z..(i + 1) * z].to_vec()),
                    frame,
                });
            }
        }
        Ok(out)
    }

    pub fn encode(&self, x: &SteerableTensor<f64>) -> Result<LatentCode> {
        Ok(self.encode_batch(std::slice::from_ref(x))?.remove(0))
    }

    /// Decodes `(latent, frame)` pairs.
    pub fn decode_batch(&self, codes: &[(Vec<f64>, Frame<f64>)]) -> Result<Vec<SteerableTensor<f64>>> {
        let z = self.config.z;
        if let Some((v, _)) = codes.iter().find(|(v, _)| v.len() != z) {
            return Err(Error::Shape(format!("latent of length {} for z = {z}", v.len())));
        }
        let mut out = Vec::with_capacity(codes.len());
        for chunk in codes.chunks(CHUNK) {
            let b = chunk.len();
            let mut tape = Tape::new();
            let leaves = self.leaves(&mut tape)?;
            let lat = tape.constant(chunk.iter().flat_map(|(v, _)| v.iter().copied()).collect(), [b, z, 1])?;
            let fr: Vec<f64> =
                chunk.iter().flat_map(|(_, f)| l1_from_vector(f.e1).into_iter().chain(l1_from_vector(f.e2))).collect();
            let fr = tape.constant(fr, [b, 2, 3])?;
            let y = self.decode_tape(&mut tape, &leaves, lat, fr, Mode::Eval, &mut Vec::new())?;
            out.extend(vars_to_batch(&tape, &y)?);
        }
        Ok(out)
    }

    pub fn decode(&self, latent: &[f64], frame: &Frame<f64>) -> Result<SteerableTensor<f64>> {
        Ok(self.decode_batch(&[(latent.to_vec(), *frame)])?.remove(0))
    }

    /// Encode then decode from the mean embedding and the predicted frame.
    pub fn reconstruct(&self, xs: &[SteerableTensor<f64>]) -> Result<Vec<SteerableTensor<f64>>> {
        let codes: Vec<_> = self.encode_batch(xs)?.into_iter().map(|c| (c.mean, c.frame)).collect();
        self.decode_batch(&codes)
    }

    /// Decodes `n` standard-normal latents in the canonical frame.
    pub fn sample_prior(&self, n: usize, seed: u64) -> Result<Vec<SteerableTensor<f64>>> {
        if !self.config.variational {
            return Err(Error::Mode("sampling from the prior requires a variational model".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let codes: Vec<_> = (0..n)
            .map(|_| ((0..self.config.z).map(|_| rng.sample(StandardNormal)).collect(), Frame::identity()))
            .collect();
        self.decode_batch(&codes)
    }

    /// Linear path between the mean embeddings of `a` and `b` with `steps`
    /// interior points, endpoints included. Frames follow the geodesic
    /// between the two predicted frames, so the endpoints equal the
    /// reconstructions of `a` and `b`.
    pub fn interpolate(
        &self,
        a: &SteerableTensor<f64>,
        b: &SteerableTensor<f64>,
        steps: usize,
    ) -> Result<Vec<(f64, Vec<f64>, SteerableTensor<f64>)>> {
        let codes = self.encode_batch(&[a.clone(), b.clone()])?;
        let (za, zb) = (&codes[0].mean, &codes[1].mean);
        let ts: Vec<f64> = (0..steps + 2).map(|i| i as f64 / (steps + 1) as f64).collect();
        let lats: Vec<Vec<f64>> =
            ts.iter().map(|&t| za.iter().zip(zb).map(|(x, y)| (1.0 - t) * x + t * y).collect()).collect();
        let (fa, fb) = (codes[0].frame.to_rotation(), codes[1].frame.to_rotation());
        let inputs: Vec<_> =
            ts.iter().zip(&lats).map(|(&t, l)| (l.clone(), Frame::from_rotation(&fa.slerp(&fb, t)))).collect();
        let dec = self.decode_batch(&inputs)?;
        Ok(ts.into_iter().zip(lats).zip(dec).map(|((t, l), d)| (t, l, d)).collect())
    }

    /// Rotates `x` by the inverse of its predicted frame.
    pub fn rotate_to_canonical(&self, x: &SteerableTensor<f64>) -> Result<SteerableTensor<f64>> {
        let f = self.encode(x)?.frame;
        Ok(x.rotate(&f.to_rotation().transpose()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::tests::small_config;
    use crate::model::{Checkpoint, ModelConfig, TrainState};
    use crate::so3::Rotation;
    use crate::steerable::TensorSignature;

    fn setup(variational: bool) -> (Network, Vec<SteerableTensor<f64>>, ChaCha8Rng) {
        let mut cfg = small_config();
        cfg.variational = variational;
        cfg.beta = 0.5;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = Network::new(cfg.clone(), &mut rng).unwrap();
        let xs = (0..6).map(|_| SteerableTensor::random_normal(cfg.input_signature.clone(), &mut rng)).collect();
        (net, xs, rng)
    }

    #[test]
    fn embedding_invariant_and_frame_equivariant() {
        let (net, xs, mut rng) = setup(true);
        for x in &xs {
            let r = Rotation::random(&mut rng);
            let a = net.encode(x).unwrap();
            let b = net.encode(&x.rotate(&r)).unwrap();
            for (u, v) in a.mean.iter().zip(&b.mean) {
                assert!((u - v).abs() < 1e-6);
            }
            for (u, v) in a.logvar.unwrap().iter().zip(b.logvar.as_ref().unwrap()) {
                assert!((u - v).abs() < 1e-6);
            }
            assert!(a.frame.rotated(&r).max_abs_diff(&b.frame) < 1e-6);
        }
    }

    #[test]
    fn decoder_and_reconstruction_equivariant() {
        let (net, xs, mut rng) = setup(false);
        let r = Rotation::random(&mut rng);
        let code = net.encode(&xs[0]).unwrap();
        let a = net.decode(&code.mean, &code.frame).unwrap().rotate(&r);
        let b = net.decode(&code.mean, &code.frame.rotated(&r)).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() < 1e-8);
        let rec = net.reconstruct(&[xs[1].clone(), xs[1].rotate(&r)]).unwrap();
        assert!(rec[0].rotate(&r).max_abs_diff(&rec[1]).unwrap() < 1e-8);
        let c = net.rotate_to_canonical(&xs[2]).unwrap();
        let d = net.rotate_to_canonical(&xs[2].rotate(&r)).unwrap();
        assert!(c.max_abs_diff(&d).unwrap() < 1e-8);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for variational in [false, true] {
            let (mut net, xs, _) = setup(variational);
            let beta = 0.5;
            let loss = |net: &Network| {
                let mut tape = Tape::new();
                let leaves = net.leaves(&mut tape).unwrap();
                net.taped_loss(&mut tape, &leaves, &xs, Mode::Train, beta, None).unwrap().parts.total
            };
            let mut tape = Tape::new();
            let leaves = net.leaves(&mut tape).unwrap();
            let t = net.taped_loss(&mut tape, &leaves, &xs, Mode::Train, beta, None).unwrap();
            let g = tape.backward(t.loss).unwrap();
            let mut checked = 0;
            for i in (0..net.params.len()).step_by(3) {
                let Some(gi) = g.wrt(leaves[i]) else { continue };
                let j = net.params.values[i].len() / 2;
                let h = 1e-6;
                let v0 = net.params.values[i][j];
                net.params.values[i][j] = v0 + h;
                let up = loss(&net);
                net.params.values[i][j] = v0 - h;
                let dn = loss(&net);
                net.params.values[i][j] = v0;
                let fd = (up - dn) / (2.0 * h);
                assert!((fd - gi[j]).abs() < 1e-5 * (1.0 + fd.abs()), "{}: {fd} vs {}", net.params.names[i], gi[j]);
                checked += 1;
            }
            assert!(checked > 5);
        }
    }

    #[test]
    fn kl_is_zero_at_standard_posterior() {
        let (mut net, xs, _) = setup(true);
        let k = net.params.names.iter().position(|n| n == "bottleneck.lin.0").unwrap();
        net.params.values[k].iter_mut().for_each(|v| *v = 0.0);
        let l = net.evaluate_loss(&xs, 0.3).unwrap();
        assert!(l.kl.abs() < 1e-15);
        assert!((l.total - net.config.alpha * l.reconstruction).abs() < 1e-12);
    }

    #[test]
    fn prior_sampling_and_interpolation() {
        let (ae, xs, _) = setup(false);
        assert!(matches!(ae.sample_prior(2, 0), Err(Error::Mode(_))));
        let path = ae.interpolate(&xs[0], &xs[1], 1).unwrap();
        assert_eq!(path.len(), 3);
        assert_eq!(path[1].0, 0.5);
        let codes = ae.encode_batch(&xs[..2]).unwrap();
        for (k, z) in path[1].1.iter().enumerate() {
            assert!((z - 0.5 * (codes[0].mean[k] + codes[1].mean[k])).abs() < 1e-12);
        }
        let rec = ae.reconstruct(&xs[..2]).unwrap();
        assert!(path[0].2.max_abs_diff(&rec[0]).unwrap() < 1e-6);
        assert!(path[2].2.max_abs_diff(&rec[1]).unwrap() < 1e-6);
        let (vae, _, _) = setup(true);
        let s = vae.sample_prior(3, 4).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].signature(), &vae.config.input_signature);
        assert_eq!(vae.sample_prior(3, 4).unwrap(), s);
    }

    #[test]
    fn training_lowers_loss_and_resumes_exactly() {
        let (net, xs, _) = setup(false);
        let mut full = TrainState::new(net.clone());
        full.net.config.epochs = 4;
        let mut state = full.clone();
        full.train(&xs, &xs[..2], |_, _| Ok(())).unwrap();
        assert!(full.history[3].train.total < full.history[0].train.total);

        state.net.config.epochs = 2;
        state.train(&xs, &xs[..2], |_, _| Ok(())).unwrap();
        let mut buf = Vec::new();
        Checkpoint::from_state(&state, None).write_to(&mut buf).unwrap();
        let mut resumed = Checkpoint::read_from(buf.as_slice()).unwrap().state;
        assert_eq!(resumed.net.params, state.net.params);
        resumed.net.config.epochs = 4;
        resumed.train(&xs, &xs[..2], |_, _| Ok(())).unwrap();
        assert_eq!(resumed.net.params, full.net.params);
        assert_eq!(resumed.history.len(), 4);
        assert_eq!(resumed.best.as_ref().map(|b| b.epoch), full.best.as_ref().map(|b| b.epoch));
    }

    #[test]
    fn best_checkpoint_round_trip() {
        let (net, xs, _) = setup(true);
        let mut s = TrainState::new(net);
        s.net.config.epochs = 2;
        s.train(&xs, &xs, |_, _| Ok(())).unwrap();
        let c = Checkpoint::best_of(&s, None);
        let mut buf = Vec::new();
        c.write_to(&mut buf).unwrap();
        let back = Checkpoint::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.network().params, s.best_network().params);
        assert!(!back.meta.has_optimizer);
        buf[0] = b'X';
        assert!(Checkpoint::read_from(buf.as_slice()).is_err());
    }

    #[test]
    fn mnist_sized_parameter_count() {
        let cfg = ModelConfig {
            input_signature: TensorSignature::uniform(10, 1).unwrap(),
            blocks: 6,
            degrees_list: vec![10, 10, 8, 4, 2, 1],
            channels_list: vec![16; 6],
            z: 16,
            c_init: None,
            variational: true,
            ..small_config()
        };
        let net = Network::new(cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let n = net.param_count() as f64;
        eprintln!("parameters: {n}");
        assert!(n > 227_000.0 / 2.0 && n < 227_000.0 * 2.0, "{n}");
    }
}
