use super::{SteerableTensor, TensorSignature};
use crate::error::{Error, Result};
use crate::so3::CgCache;
use crate::Real;

/// Full channel-by-channel Clebsch-Gordan product.
///
/// Every degree pair `(l1, l2)` of `x` and `y` and every output degree
/// `|l1-l2| <= l3 <= min(l1+l2, l_out_max)` produces `C1 * C2` fragments.
/// Fragments of one output degree are concatenated in lexicographic
/// `(l1, l2, c1, c2)` order.
pub fn cg_tensor_product_full<T: Real>(
    x: &SteerableTensor<T>,
    y: &SteerableTensor<T>,
    l_out_max: usize,
    cache: &CgCache,
) -> Result<SteerableTensor<T>> {
    let mut frags: Vec<Vec<(usize, usize)>> = vec![Vec::new(); l_out_max + 1];
    for &(l1, _) in x.signature().parts() {
        for &(l2, _) in y.signature().parts() {
            for l3 in l1.abs_diff(l2)..=(l1 + l2).min(l_out_max) {
                frags[l3].push((l1, l2));
            }
        }
    }
    let parts: Vec<(usize, usize)> = frags
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.is_empty())
        .map(|(l3, p)| {
            let c: usize = p.iter().map(|&(l1, l2)| x.signature().channels(l1) * y.signature().channels(l2)).sum();
            (l3, c)
        })
        .collect();
    let mut out = SteerableTensor::zeros(TensorSignature::new(parts)?);
    for (l3, pairs) in frags.iter().enumerate() {
        let mut ch = 0;
        for &(l1, l2) in pairs {
            let block = cache.get(l1, l2, l3)?;
            for c1 in 0..x.signature().channels(l1) {
                for c2 in 0..y.signature().channels(l2) {
                    block.contract_into(x.channel(l1, c1), y.channel(l2, c2), out.channel_mut(l3, ch));
                    ch += 1;
                }
            }
        }
    }
    Ok(out)
}

/// Channel-wise invariant pairing `sum_l sum_c (x_l^c (x) y_l^c)_0`.
///
/// With the crate's CG sign convention the `(l, l, 0)` block is
/// `delta / sqrt(2l+1)`, so this is a positively weighted Euclidean dot
/// product and `generalized_dot(x, x) > 0` for every nonzero `x`.
pub fn generalized_dot<T: Real>(x: &SteerableTensor<T>, y: &SteerableTensor<T>) -> Result<T> {
    if x.signature() != y.signature() {
        return Err(Error::Shape(format!("signatures differ: {} vs {}", x.signature(), y.signature())));
    }
    Ok(x.signature()
        .parts()
        .iter()
        .map(|&(l, _)| {
            let s: T = x.block(l).iter().zip(y.block(l)).map(|(a, b)| *a * *b).sum();
            s / T::from_usize_lossy(2 * l + 1).sqrt()
        })
        .sum())
}
