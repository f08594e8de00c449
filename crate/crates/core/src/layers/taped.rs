use super::etp::usable_pairs;
use super::{BlockSpec, Mode, MstPairSet, NORM_EPSILON};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::so3::CgCache;
use crate::steerable::{SteerableTensor, TensorSignature};

/// One `[batch, channels, 2l+1]` node per degree, ascending.
pub type DegreeVars = Vec<(usize, Var)>;

fn lookup(x: &DegreeVars, l: usize) -> Option<Var> {
    x.iter().find(|p| p.0 == l).map(|p| p.1)
}

/// Records a batch as constant per-degree nodes.
pub fn batch_to_vars(tape: &mut Tape, batch: &[SteerableTensor<f64>]) -> Result<DegreeVars> {
    let first = batch.first().ok_or_else(|| Error::InvalidArgument("empty batch".into()))?;
    let sig = first.signature().clone();
    let mut out = Vec::new();
    for &(l, c) in sig.parts() {
        let mut data = Vec::with_capacity(batch.len() * c * (2 * l + 1));
        for x in batch {
            if x.signature() != &sig {
                return Err(Error::Shape(format!("batch mixes signatures {sig} and {}", x.signature())));
            }
            data.extend_from_slice(x.block(l));
        }
        out.push((l, tape.constant(data, [batch.len(), c, 2 * l + 1])?));
    }
    Ok(out)
}

/// Reads per-degree nodes back into tensors.
pub fn vars_to_batch(tape: &Tape, x: &DegreeVars) -> Result<Vec<SteerableTensor<f64>>> {
    let sig = TensorSignature::new(x.iter().map(|&(l, v)| (l, tape.shape(v)[1])).collect())?;
    let b = x.first().map_or(0, |&(_, v)| tape.shape(v)[0]);
    (0..b)
        .map(|i| {
            let mut data = Vec::with_capacity(sig.total_len());
            for &(l, v) in x {
                let n = sig.channels(l) * (2 * l + 1);
                data.extend_from_slice(&tape.value(v)[i * n..(i + 1) * n]);
            }
            SteerableTensor::from_vec(sig.clone(), data)
        })
        .collect()
}

/// Taped linearity; `w` holds `[1, C_in, C_out]` nodes per output degree.
pub fn linear_tape(tape: &mut Tape, x: &DegreeVars, w: &[(usize, Var)]) -> Result<DegreeVars> {
    w.iter()
        .map(|&(l, wv)| {
            let xv = lookup(x, l).ok_or_else(|| Error::Shape(format!("linearity expects degree {l}")))?;
            Ok((l, tape.linear(xv, wv)?))
        })
        .collect()
}

/// Taped efficient tensor product of `x` with itself.
pub fn etp_tape(tape: &mut Tape, x: &DegreeVars, pairs: &MstPairSet, cache: &CgCache) -> Result<DegreeVars> {
    let sig = TensorSignature::new(x.iter().map(|&(l, v)| (l, tape.shape(v)[1])).collect())?;
    if sig.uniform_channels().is_none() {
        return Err(Error::ChannelMismatch(format!("efficient tensor product needs equal channels, got {sig}")));
    }
    let mut out = Vec::new();
    for l3 in 0..pairs.pairs.len() {
        let mut frags = Vec::new();
        for (l1, l2) in usable_pairs(&sig, pairs, l3) {
            let block = cache.get(l1, l2, l3)?.clone();
            let (a, b) = (lookup(x, l1).expect("usable"), lookup(x, l2).expect("usable"));
            frags.push(tape.cg(a, b, block)?);
        }
        match frags.len() {
            0 => {}
            1 => out.push((l3, frags[0])),
            _ => out.push((l3, tape.concat(&frags)?)),
        }
    }
    Ok(out)
}

/// Taped batch norm with `[1, C, 1]` weights. In training mode the batch
/// norms are returned so the caller can update its running estimate.
pub fn batch_norm_tape(
    tape: &mut Tape,
    x: &DegreeVars,
    w: &[(usize, Var)],
    running: &[Vec<f64>],
    mode: Mode,
) -> Result<(DegreeVars, Option<Vec<Vec<f64>>>)> {
    if w.len() != x.len() || running.len() != x.len() {
        return Err(Error::Shape("batch-norm parameters do not match the input degrees".into()));
    }
    let mut out = Vec::with_capacity(x.len());
    let mut norms = Vec::with_capacity(x.len());
    for (i, &(l, xv)) in x.iter().enumerate() {
        let s = tape.shape(xv);
        let n = match mode {
            Mode::Train => {
                let sq = tape.square(xv);
                let a = tape.sum_axis(sq, 2)?;
                let b = tape.sum_axis(a, 0)?;
                let n = tape.scale(b, 1.0 / (s[0] * s[2]) as f64);
                norms.push(tape.value(n).to_vec());
                n
            }
            Mode::Eval => tape.constant(running[i].clone(), [1, s[1], 1])?,
        };
        let ne = tape.add_scalar(n, NORM_EPSILON);
        let d = tape.sqrt(ne);
        let y = tape.div(xv, d)?;
        out.push((l, tape.mul(y, w[i].1)?));
    }
    Ok((out, (mode == Mode::Train).then_some(norms)))
}

/// Taped signal norm with `[1, 1, 1]` per-degree weights.
pub fn signal_norm_tape(tape: &mut Tape, x: &DegreeVars, w: &[(usize, Var)]) -> Result<DegreeVars> {
    if w.len() != x.len() {
        return Err(Error::Shape("signal-norm weights do not match the input degrees".into()));
    }
    let mut total: Option<Var> = None;
    for &(l, xv) in x {
        let sq = tape.square(xv);
        let a = tape.sum_axis(sq, 2)?;
        let b = tape.sum_axis(a, 1)?;
        let t = tape.scale(b, 1.0 / (2 * l + 1) as f64);
        total = Some(match total {
            Some(acc) => tape.add(acc, t)?,
            None => t,
        });
    }
    let Some(total) = total else { return Ok(Vec::new()) };
    let te = tape.add_scalar(total, NORM_EPSILON);
    let d = tape.sqrt(te);
    let mut out = Vec::with_capacity(x.len());
    for (i, &(l, xv)) in x.iter().enumerate() {
        let y = tape.div(xv, d)?;
        out.push((l, tape.mul(y, w[i].1)?));
    }
    Ok(out)
}

/// Adds `input` to `out` on shared degrees, zero-padding or truncating channels.
pub fn skip_tape(tape: &mut Tape, out: &DegreeVars, input: &DegreeVars) -> Result<DegreeVars> {
    out.iter()
        .map(|&(l, ov)| {
            let Some(iv) = lookup(input, l) else { return Ok((l, ov)) };
            let (ci, co) = (tape.shape(iv)[1], tape.shape(ov)[1]);
            let s = match ci.cmp(&co) {
                std::cmp::Ordering::Less => tape.pad(iv, co)?,
                std::cmp::Ordering::Greater => tape.slice(iv, 0, co)?,
                std::cmp::Ordering::Equal => iv,
            };
            Ok((l, tape.add(ov, s)?))
        })
        .collect()
}

/// Parameter leaves of one block on a tape.
#[derive(Clone, Debug)]
pub struct BlockVars {
    pub bn_weight: Vec<(usize, Var)>,
    pub sn_weight: Vec<(usize, Var)>,
    pub lin: Vec<(usize, Var)>,
}

/// Taped `BN -> ETP -> SN -> Lin` plus skip.
pub fn cg_block_tape(
    tape: &mut Tape,
    x: &DegreeVars,
    vars: &BlockVars,
    running: &[Vec<f64>],
    spec: &BlockSpec,
    cache: &CgCache,
    mode: Mode,
) -> Result<(DegreeVars, Option<Vec<Vec<f64>>>)> {
    let (h, norms) = batch_norm_tape(tape, x, &vars.bn_weight, running, mode)?;
    let p = etp_tape(tape, &h, &spec.pairs(), cache)?;
    let s = signal_norm_tape(tape, &p, &vars.sn_weight)?;
    let y = linear_tape(tape, &s, &vars.lin)?;
    Ok((skip_tape(tape, &y, x)?, norms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::ParamId;
    use crate::layers::{cg_block_forward, BlockParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn block_vars(tape: &mut Tape, p: &BlockParams<f64>) -> BlockVars {
        let mut id = 0;
        let mut next = || {
            id += 1;
            ParamId(id)
        };
        let bn_weight = p
            .bn
            .signature
            .parts()
            .iter()
            .zip(&p.bn.weight)
            .map(|(&(l, c), w)| (l, tape.param(next(), w.clone(), [1, c, 1]).unwrap()))
            .collect();
        let sn_weight = p.lin.iter().zip(&p.sn_weight).map(|(m, w)| (m.l, tape.param(next(), vec![*w], [1, 1, 1]).unwrap())).collect();
        let lin = p.lin.iter().map(|m| (m.l, tape.param(next(), m.data.clone(), [1, m.rows, m.cols]).unwrap())).collect();
        BlockVars { bn_weight, sn_weight, lin }
    }

    #[test]
    fn taped_block_matches_pure_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cache = CgCache::shared(4);
        for mode in [Mode::Train, Mode::Eval] {
            let spec = BlockSpec::new(TensorSignature::uniform(2, 3).unwrap(), 3, 4).unwrap();
            let mut p = BlockParams::<f64>::init(&spec, &mut rng);
            p.bn.running.iter_mut().flatten().for_each(|v| *v = 0.7);
            let xs: Vec<_> = (0..4).map(|_| SteerableTensor::random_normal(spec.input.clone(), &mut rng)).collect();
            let mut tape = Tape::new();
            let vars = block_vars(&mut tape, &p);
            let xv = batch_to_vars(&mut tape, &xs).unwrap();
            let (yv, norms) = cg_block_tape(&mut tape, &xv, &vars, &p.bn.running.clone(), &spec, &cache, mode).unwrap();
            let taped = vars_to_batch(&tape, &yv).unwrap();
            let pure = cg_block_forward(&xs, &mut p, &spec, &cache, mode).unwrap();
            for (a, b) in taped.iter().zip(&pure) {
                assert!(a.max_abs_diff(b).unwrap() < 1e-12);
            }
            assert_eq!(norms.is_some(), mode == Mode::Train);
        }
    }
}
