use super::MstPairSet;
use crate::error::{Error, Result};
use crate::so3::CgCache;
use crate::steerable::{SteerableTensor, TensorSignature};
use crate::Real;

/// Pairs of `pairs[l3]` whose degrees are both present in `sig`.
pub(crate) fn usable_pairs<'a>(sig: &'a TensorSignature, pairs: &'a MstPairSet, l3: usize) -> impl Iterator<Item = (usize, usize)> + 'a {
    pairs.get(l3).iter().copied().filter(|&(a, b)| sig.contains(a) && sig.contains(b))
}

/// Output signature of the efficient tensor product of an input with
/// uniform channel count `C`: `C * #usable pairs` channels per degree.
pub fn etp_signature(input: &TensorSignature, pairs: &MstPairSet) -> Result<TensorSignature> {
    let c = input
        .uniform_channels()
        .ok_or_else(|| Error::ChannelMismatch(format!("efficient tensor product needs equal channels per degree, got {input}")))?;
    let parts = (0..pairs.pairs.len())
        .map(|l3| (l3, usable_pairs(input, pairs, l3).count() * c))
        .filter(|p| p.1 > 0)
        .collect();
    TensorSignature::new(parts)
}

/// Channel-wise product over the selected degree pairs:
/// output channel `p * C + c` of degree `l3` is `(x_{l1}^c (x) y_{l2}^c)_{l3}`
/// for the `p`-th usable pair `(l1, l2)`.
pub fn etp_forward<T: Real>(
    x: &SteerableTensor<T>,
    y: &SteerableTensor<T>,
    pairs: &MstPairSet,
    cache: &CgCache,
) -> Result<SteerableTensor<T>> {
    if x.signature() != y.signature() {
        return Err(Error::ChannelMismatch(format!("operands {} and {}", x.signature(), y.signature())));
    }
    let sig = etp_signature(x.signature(), pairs)?;
    let c = x.signature().uniform_channels().unwrap_or(0);
    let mut out = SteerableTensor::zeros(sig);
    for l3 in 0..pairs.pairs.len() {
        for (p, (l1, l2)) in usable_pairs(x.signature(), pairs, l3).enumerate() {
            let block = cache.get(l1, l2, l3)?;
            for ch in 0..c {
                block.contract_into(x.channel(l1, ch), y.channel(l2, ch), out.channel_mut(l3, p * c + ch));
            }
        }
    }
    Ok(out)
}
