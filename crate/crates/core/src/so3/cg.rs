use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

const CG_MAGIC: &[u8; 8] = b"HOLOCG01";

fn triangle(l1: usize, l2: usize, l3: usize) -> bool {
    l1.abs_diff(l2) <= l3 && l3 <= l1 + l2
}

fn factorial(n: i64) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Complex-basis Clebsch-Gordan coefficient `<j1 m1 j2 m2 | j m>` for integer
/// angular momenta, from Racah's closed form.
///
/// The squared value is accumulated as an exact rational and only the final
/// square root is taken in `f64`.
pub fn clebsch_gordan_complex(j1: i64, m1: i64, j2: i64, m2: i64, j: i64, m: i64) -> f64 {
    if m1 + m2 != m || m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
        return 0.0;
    }
    if j < (j1 - j2).abs() || j > j1 + j2 {
        return 0.0;
    }
    let f = factorial;
    let num = BigInt::from(2 * j + 1)
        * f(j + j1 - j2)
        * f(j - j1 + j2)
        * f(j1 + j2 - j)
        * f(j + m)
        * f(j - m)
        * f(j1 - m1)
        * f(j1 + m1)
        * f(j2 - m2)
        * f(j2 + m2);
    let pre = BigRational::new(num, f(j1 + j2 + j + 1));

    let k_min = 0.max(j2 - j - m1).max(j1 - j + m2);
    let k_max = (j1 + j2 - j).min(j1 - m1).min(j2 + m2);
    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let den = f(k) * f(j1 + j2 - j - k) * f(j1 - m1 - k) * f(j2 + m2 - k) * f(j - j2 + m1 + k) * f(j - j1 - m2 + k);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return 0.0;
    }
    let sign = if sum.is_negative() { -1.0 } else { 1.0 };
    let sq = pre * &sum * &sum;
    sign * sq.to_f64().expect("finite rational").sqrt()
}

/// Nonzero entries of row `a` of the complex-to-real map `U` (see module docs).
fn u_row(a: i64) -> Vec<(i64, Complex64)> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let parity = if a.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    if a > 0 {
        vec![(-a, Complex64::new(r, 0.0)), (a, Complex64::new(parity * r, 0.0))]
    } else if a < 0 {
        vec![(a, Complex64::new(0.0, r)), (-a, Complex64::new(0.0, -parity * r))]
    } else {
        vec![(0, Complex64::new(1.0, 0.0))]
    }
}

/// Real-basis Clebsch-Gordan coefficients for one degree triple.
///
/// Dense storage is indexed `(m1, m2, m3)` row-major with each `m` running
/// from `-l` to `l`. The overall sign is fixed so that the first nonzero entry
/// in that order is positive; with this choice the `(l, l, 0)` block is
/// `delta_{m1 m2} / sqrt(2l+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CgBlock {
    pub l1: usize,
    pub l2: usize,
    pub l3: usize,
    dense: Vec<f64>,
    nonzeros: Vec<(u32, u32, u32, f64)>,
}

impl CgBlock {
    pub fn from_dense(l1: usize, l2: usize, l3: usize, dense: Vec<f64>) -> Result<Self> {
        let (d1, d2, d3) = (2 * l1 + 1, 2 * l2 + 1, 2 * l3 + 1);
        if dense.len() != d1 * d2 * d3 {
            return Err(Error::Shape(format!(
                "CG block ({l1},{l2},{l3}) needs {} entries, got {}",
                d1 * d2 * d3,
                dense.len()
            )));
        }
        let mut nonzeros = Vec::new();
        for i in 0..d1 {
            for j in 0..d2 {
                for k in 0..d3 {
                    let v = dense[(i * d2 + j) * d3 + k];
                    if v != 0.0 {
                        nonzeros.push((i as u32, j as u32, k as u32, v));
                    }
                }
            }
        }
        Ok(Self { l1, l2, l3, dense, nonzeros })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (2 * self.l1 + 1, 2 * self.l2 + 1, 2 * self.l3 + 1)
    }

    /// Coefficient at `(m1, m2, m3)`, signed orders.
    pub fn get(&self, m1: i64, m2: i64, m3: i64) -> f64 {
        let (_, d2, d3) = self.dims();
        let i = (m1 + self.l1 as i64) as usize;
        let j = (m2 + self.l2 as i64) as usize;
        let k = (m3 + self.l3 as i64) as usize;
        self.dense[(i * d2 + j) * d3 + k]
    }

    pub fn dense(&self) -> &[f64] {
        &self.dense
    }

    /// Nonzero entries as `(i1, i2, i3, value)` with zero-based indices.
    pub fn nonzeros(&self) -> &[(u32, u32, u32, f64)] {
        &self.nonzeros
    }

    /// `out[m3] += sum C[m1, m2, m3] x[m1] y[m2]`.
    #[inline]
    pub fn contract_into<T: crate::Real>(&self, x: &[T], y: &[T], out: &mut [T]) {
        for &(i, j, k, c) in &self.nonzeros {
            out[k as usize] = out[k as usize] + T::lit(c) * x[i as usize] * y[j as usize];
        }
    }
}

/// Real-basis Clebsch-Gordan block for `(l1, l2) -> l3`.
pub fn clebsch_gordan_real(l1: usize, l2: usize, l3: usize) -> Result<CgBlock> {
    if !triangle(l1, l2, l3) {
        return Err(Error::SelectionRule { l1, l2, l3 });
    }
    let (j1, j2, j3) = (l1 as i64, l2 as i64, l3 as i64);
    let mut complex = HashMap::new();
    for m1 in -j1..=j1 {
        for m2 in -j2..=j2 {
            let m = m1 + m2;
            if m.abs() <= j3 {
                complex.insert((m1, m2), clebsch_gordan_complex(j1, m1, j2, m2, j3, m));
            }
        }
    }
    let (d1, d2, d3) = (2 * l1 + 1, 2 * l2 + 1, 2 * l3 + 1);
    let mut values = vec![Complex64::new(0.0, 0.0); d1 * d2 * d3];
    for a in -j1..=j1 {
        let ua = u_row(a);
        for b in -j2..=j2 {
            let ub = u_row(b);
            for c in -j3..=j3 {
                let uc = u_row(c);
                let mut acc = Complex64::new(0.0, 0.0);
                for &(m1, u1) in &ua {
                    for &(m2, u2) in &ub {
                        for &(m3, u3) in &uc {
                            if m1 + m2 != m3 {
                                continue;
                            }
                            if let Some(&cg) = complex.get(&(m1, m2)) {
                                acc += u3.conj() * u1 * u2 * cg;
                            }
                        }
                    }
                }
                let idx = (((a + j1) as usize) * d2 + (b + j2) as usize) * d3 + (c + j3) as usize;
                values[idx] = acc;
            }
        }
    }
    // The block is real or purely imaginary depending on the parity of l1+l2+l3.
    let re2: f64 = values.iter().map(|v| v.re * v.re).sum();
    let im2: f64 = values.iter().map(|v| v.im * v.im).sum();
    let mut dense: Vec<f64> = if re2 >= im2 {
        values.iter().map(|v| v.re).collect()
    } else {
        values.iter().map(|v| v.im).collect()
    };
    for v in dense.iter_mut() {
        if v.abs() < 1e-14 {
            *v = 0.0;
        }
    }
    if let Some(first) = dense.iter().find(|v| **v != 0.0) {
        if *first < 0.0 {
            dense.iter_mut().for_each(|v| *v = -*v);
        }
    }
    CgBlock::from_dense(l1, l2, l3, dense)
}

/// Immutable table of real-basis CG blocks for all admissible triples with
/// every degree `<= l_max`.
#[derive(Clone, Debug)]
pub struct CgCache {
    l_max: usize,
    blocks: BTreeMap<(usize, usize, usize), Arc<CgBlock>>,
}

impl CgCache {
    pub fn new(l_max: usize) -> Self {
        let mut blocks = BTreeMap::new();
        for l1 in 0..=l_max {
            for l2 in 0..=l_max {
                for l3 in l1.abs_diff(l2)..=(l1 + l2).min(l_max) {
                    let b = clebsch_gordan_real(l1, l2, l3).expect("admissible triple");
                    blocks.insert((l1, l2, l3), Arc::new(b));
                }
            }
        }
        Self { l_max, blocks }
    }

    /// Process-wide memoised cache.
    pub fn shared(l_max: usize) -> Arc<CgCache> {
        static CACHES: OnceLock<Mutex<HashMap<usize, Arc<CgCache>>>> = OnceLock::new();
        let map = CACHES.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = map.lock().expect("cg cache lock");
        guard.entry(l_max).or_insert_with(|| Arc::new(CgCache::new(l_max))).clone()
    }

    /// Builds a cache from explicit blocks; entries must satisfy the selection rule.
    pub fn from_blocks(l_max: usize, blocks: impl IntoIterator<Item = CgBlock>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for b in blocks {
            if !triangle(b.l1, b.l2, b.l3) {
                return Err(Error::SelectionRule { l1: b.l1, l2: b.l2, l3: b.l3 });
            }
            map.insert((b.l1, b.l2, b.l3), Arc::new(b));
        }
        Ok(Self { l_max, blocks: map })
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn get(&self, l1: usize, l2: usize, l3: usize) -> Result<&Arc<CgBlock>> {
        if !triangle(l1, l2, l3) {
            return Err(Error::SelectionRule { l1, l2, l3 });
        }
        self.blocks.get(&(l1, l2, l3)).ok_or_else(|| {
            Error::Config(format!("CG cache (l_max = {}) lacks triple ({l1},{l2},{l3})", self.l_max))
        })
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Arc<CgBlock>> {
        self.blocks.values()
    }

    /// Binary layout (little-endian): magic `HOLOCG01`, `u16` l_max, `u32`
    /// block count, then per block three `u16` degrees followed by the dense
    /// `f64` block in `(m1, m2, m3)` order.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CG_MAGIC)?;
        w.write_all(&(self.l_max as u16).to_le_bytes())?;
        w.write_all(&(self.blocks.len() as u32).to_le_bytes())?;
        for b in self.blocks.values() {
            for l in [b.l1, b.l2, b.l3] {
                w.write_all(&(l as u16).to_le_bytes())?;
            }
            for v in &b.dense {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CG_MAGIC {
            return Err(Error::Format("not a CG cache file".to_string()));
        }
        let mut b2 = [0u8; 2];
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b2)?;
        let l_max = u16::from_le_bytes(b2) as usize;
        r.read_exact(&mut b4)?;
        let count = u32::from_le_bytes(b4) as usize;
        let mut blocks = Vec::with_capacity(count);
        for _ in 0..count {
            let mut ls = [0usize; 3];
            for l in ls.iter_mut() {
                r.read_exact(&mut b2)?;
                *l = u16::from_le_bytes(b2) as usize;
            }
            let n = (2 * ls[0] + 1) * (2 * ls[1] + 1) * (2 * ls[2] + 1);
            let mut dense = Vec::with_capacity(n);
            for _ in 0..n {
                r.read_exact(&mut b8)?;
                dense.push(f64::from_le_bytes(b8));
            }
            blocks.push(CgBlock::from_dense(ls[0], ls[1], ls[2], dense)?);
        }
        Self::from_blocks(l_max, blocks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{wigner_d_real_all, Rotation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn complex_reference_values() {
        assert!((clebsch_gordan_complex(0, 0, 0, 0, 0, 0) - 1.0).abs() < 1e-15);
        assert!((clebsch_gordan_complex(1, 0, 1, 0, 2, 0) - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((clebsch_gordan_complex(1, 0, 1, 0, 2, 0) - 0.816_496_6).abs() < 1e-7);
        // <1 1 1 -1 | 0 0> = 1/sqrt(3)
        assert!((clebsch_gordan_complex(1, 1, 1, -1, 0, 0) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(clebsch_gordan_complex(1, 1, 1, 1, 1, 2), 0.0);
    }

    #[test]
    fn scalar_block() {
        let b = clebsch_gordan_real(0, 0, 0).unwrap();
        assert_eq!(b.dense(), &[1.0]);
    }

    #[test]
    fn selection_rule() {
        assert!(matches!(clebsch_gordan_real(1, 1, 3), Err(Error::SelectionRule { .. })));
        assert!(matches!(clebsch_gordan_real(4, 1, 2), Err(Error::SelectionRule { .. })));
    }

    #[test]
    fn invariant_pairing_block_is_scaled_identity() {
        for l in 0..6 {
            let b = clebsch_gordan_real(l, l, 0).unwrap();
            let li = l as i64;
            for m1 in -li..=li {
                for m2 in -li..=li {
                    let e = if m1 == m2 { 1.0 / ((2 * l + 1) as f64).sqrt() } else { 0.0 };
                    assert!((b.get(m1, m2, 0) - e).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn unitarity_columns() {
        let cache = CgCache::new(5);
        for b in cache.blocks() {
            let (d1, d2, d3) = b.dims();
            for k in 0..d3 {
                let s: f64 = (0..d1 * d2).map(|ij| b.dense()[ij * d3 + k].powi(2)).sum();
                assert!((s - 1.0).abs() < 1e-10, "({},{},{}) m3={k}: {s}", b.l1, b.l2, b.l3);
            }
        }
    }

    #[test]
    fn equivariance_random_trials() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cache = CgCache::new(4);
        for _ in 0..200 {
            let l1 = rng.random_range(0..=4usize);
            let l2 = rng.random_range(0..=4usize);
            let l3 = rng.random_range(l1.abs_diff(l2)..=(l1 + l2).min(4));
            let b = cache.get(l1, l2, l3).unwrap();
            let r: Rotation<f64> = Rotation::random(&mut rng);
            let ds = wigner_d_real_all(4, &r);
            let x: Vec<f64> = (0..2 * l1 + 1).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..2 * l2 + 1).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut lhs = vec![0.0; 2 * l3 + 1];
            b.contract_into(&ds[l1].apply(&x), &ds[l2].apply(&y), &mut lhs);
            let mut p = vec![0.0; 2 * l3 + 1];
            b.contract_into(&x, &y, &mut p);
            let rhs = ds[l3].apply(&p);
            for (a, c) in lhs.iter().zip(&rhs) {
                assert!((a - c).abs() < 1e-10, "({l1},{l2},{l3})");
            }
        }
    }

    #[test]
    fn binary_round_trip() {
        let cache = CgCache::new(3);
        let mut buf = Vec::new();
        cache.write_to(&mut buf).unwrap();
        let back = CgCache::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.l_max(), 3);
        for (a, b) in cache.blocks().zip(back.blocks()) {
            assert_eq!(a.as_ref(), b.as_ref());
        }
        assert!(CgCache::read_from(&b"garbage!"[..]).is_err());
    }

    #[test]
    fn missing_triple_is_config_error() {
        let cache = CgCache::new(1);
        assert!(matches!(cache.get(2, 2, 2), Err(Error::Config(_))));
    }
}
