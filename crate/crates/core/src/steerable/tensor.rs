use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::TensorSignature;
use crate::error::{Error, Result};
use crate::so3::{wigner_d_real_all, Rotation, WignerD};
use crate::Real;

/// Degree-indexed blocks of real coefficients sharing one flat buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct SteerableTensor<T> {
    signature: TensorSignature,
    data: Vec<T>,
}

impl<T: Real> SteerableTensor<T> {
    pub fn zeros(signature: TensorSignature) -> Self {
        let n = signature.total_len();
        Self { signature, data: vec![T::zero(); n] }
    }

    /// Wraps a flat coefficient buffer; rejects wrong lengths and non-finite entries.
    pub fn from_vec(signature: TensorSignature, data: Vec<T>) -> Result<Self> {
        if data.len() != signature.total_len() {
            return Err(Error::Shape(format!(
                "signature {signature} needs {} coefficients, got {}",
                signature.total_len(),
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("coefficient {i} is {}", data[i])));
        }
        Ok(Self { signature, data })
    }

    /// I.i.d. standard-normal coefficients.
    pub fn random_normal<R: Rng + ?Sized>(signature: TensorSignature, rng: &mut R) -> Self {
        let data = (0..signature.total_len())
            .map(|_| {
                let v: f64 = StandardNormal.sample(rng);
                T::lit(v)
            })
            .collect();
        Self { signature, data }
    }

    pub fn signature(&self) -> &TensorSignature {
        &self.signature
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Degree-`l` block (`C * (2l+1)` values), empty if absent.
    pub fn block(&self, l: usize) -> &[T] {
        match self.signature.offset(l) {
            Some(o) => &self.data[o..o + self.signature.channels(l) * (2 * l + 1)],
            None => &[],
        }
    }

    pub fn block_mut(&mut self, l: usize) -> &mut [T] {
        match self.signature.offset(l) {
            Some(o) => {
                let n = self.signature.channels(l) * (2 * l + 1);
                &mut self.data[o..o + n]
            }
            None => &mut [],
        }
    }

    /// Coefficients of channel `c` at degree `l`.
    pub fn channel(&self, l: usize, c: usize) -> &[T] {
        let d = 2 * l + 1;
        &self.block(l)[c * d..(c + 1) * d]
    }

    pub fn channel_mut(&mut self, l: usize, c: usize) -> &mut [T] {
        let d = 2 * l + 1;
        &mut self.block_mut(l)[c * d..(c + 1) * d]
    }

    /// Applies `D_l(R)` to every channel of every degree.
    pub fn rotate(&self, r: &Rotation<T>) -> Self {
        let l_max = self.signature.l_max().unwrap_or(0);
        self.rotate_with(&wigner_d_real_all(l_max, r))
    }

    /// Rotation with precomputed Wigner-D matrices indexed by degree.
    pub fn rotate_with(&self, ds: &[WignerD<T>]) -> Self {
        let mut out = self.clone();
        for &(l, c) in self.signature.parts() {
            for ch in 0..c {
                let v = ds[l].apply(self.channel(l, ch));
                out.channel_mut(l, ch).copy_from_slice(&v);
            }
        }
        out
    }

    /// `N_tot = sum_l sum_c sum_m h^2 / (2l+1)`.
    pub fn total_norm(&self) -> T {
        self.signature
            .parts()
            .iter()
            .map(|&(l, _)| {
                let s: T = self.block(l).iter().map(|v| *v * *v).sum();
                s / T::from_usize_lossy(2 * l + 1)
            })
            .sum()
    }

    /// `sum_m h_{lm}^c^2` for each channel of degree `l`.
    pub fn channel_sq_norms(&self, l: usize) -> Vec<T> {
        let d = 2 * l + 1;
        self.block(l).chunks(d).map(|ch| ch.iter().map(|v| *v * *v).sum()).collect()
    }

    pub fn scale(&self, s: T) -> Self {
        Self { signature: self.signature.clone(), data: self.data.iter().map(|v| *v * s).collect() }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.signature != other.signature {
            return Err(Error::Shape(format!("signatures differ: {} vs {}", self.signature, other.signature)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect();
        Ok(Self { signature: self.signature.clone(), data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a - *b).collect();
        Ok(Self { signature: self.signature.clone(), data })
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_same(other)?;
        Ok(self.data.iter().zip(&other.data).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs())))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Restricts to the listed degrees (absent ones are skipped).
    pub fn select_degrees(&self, degrees: &[usize]) -> Self {
        let parts: Vec<_> =
            self.signature.parts().iter().copied().filter(|(l, _)| degrees.contains(l)).collect();
        let sig = TensorSignature::new(parts).expect("subset of a valid signature");
        let mut data = Vec::with_capacity(sig.total_len());
        for &(l, _) in sig.parts() {
            data.extend_from_slice(self.block(l));
        }
        Self { signature: sig, data }
    }

    pub fn cast<U: Real>(&self) -> SteerableTensor<U> {
        SteerableTensor {
            signature: self.signature.clone(),
            data: self.data.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }
}
