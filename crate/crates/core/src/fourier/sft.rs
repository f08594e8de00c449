use std::io::{Read, Write};

use super::quadrature::dh_grid;
use crate::error::{Error, Result};
use crate::so3::real_spherical_harmonics;
use crate::steerable::{SteerableTensor, TensorSignature};
use crate::Real;

const MAGIC: &[u8; 8] = b"HOLOSPHG";

/// Real samples on the `2bw x 2bw` Driscoll-Healy grid, laid out
/// `[channel][theta index j][phi index k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SphericalSignal<T> {
    pub bw: usize,
    pub channels: usize,
    values: Vec<T>,
}

impl<T: Real> SphericalSignal<T> {
    pub fn new(bw: usize, channels: usize, values: Vec<T>) -> Result<Self> {
        if bw == 0 {
            return Err(Error::InvalidArgument("bandwidth must be positive".into()));
        }
        let n = channels * 4 * bw * bw;
        if values.len() != n {
            return Err(Error::Shape(format!("grid needs {n} values, got {}", values.len())));
        }
        Ok(Self { bw, channels, values })
    }

    pub fn zeros(bw: usize, channels: usize) -> Self {
        Self { bw, channels, values: vec![T::zero(); channels * 4 * bw * bw] }
    }

    /// Samples `f(channel, theta, phi)` on the grid.
    pub fn from_fn(bw: usize, channels: usize, f: impl Fn(usize, T, T) -> T) -> Self {
        let g = dh_grid(bw);
        let mut values = Vec::with_capacity(channels * 4 * bw * bw);
        for c in 0..channels {
            for t in &g.theta {
                for p in &g.phi {
                    values.push(f(c, T::lit(*t), T::lit(*p)));
                }
            }
        }
        Self { bw, channels, values }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, c: usize, j: usize, k: usize) -> T {
        let n = 2 * self.bw;
        self.values[(c * n + j) * n + k]
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values.iter().zip(&other.values).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }
}

/// Spherical Fourier transform by Driscoll-Healy quadrature. The output has
/// `channels` channels at each degree `0..=l_max`.
pub fn sft_grid<T: Real>(sig: &SphericalSignal<T>, l_max: usize) -> Result<SteerableTensor<T>> {
    if l_max >= sig.bw {
        return Err(Error::Aliasing { degree: l_max, bw: sig.bw });
    }
    let g = dh_grid(sig.bw);
    let n = 2 * sig.bw;
    let mut out = SteerableTensor::zeros(TensorSignature::uniform(l_max, sig.channels)?);
    for (j, &t) in g.theta.iter().enumerate() {
        let w = T::lit(g.weight[j]);
        for (k, &p) in g.phi.iter().enumerate() {
            let y = real_spherical_harmonics(l_max as i64, T::lit(t), T::lit(p))?;
            for c in 0..sig.channels {
                let f = sig.values[(c * n + j) * n + k] * w;
                for l in 0..=l_max {
                    for (o, yv) in out.channel_mut(l, c).iter_mut().zip(y.degree(l)) {
                        *o = *o + f * *yv;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Grid synthesis `f(theta, phi) = sum f_lm Y_lm`. Every degree present must
/// carry the same channel count.
pub fn inverse_sft<T: Real>(x: &SteerableTensor<T>, bw: usize) -> Result<SphericalSignal<T>> {
    let sig = x.signature();
    let Some(l_max) = sig.l_max() else {
        return Err(Error::Shape("empty tensor".into()));
    };
    if l_max >= bw {
        return Err(Error::Aliasing { degree: l_max, bw });
    }
    let channels = sig
        .uniform_channels()
        .ok_or_else(|| Error::Shape(format!("signature {sig} has unequal channel counts")))?;
    let g = dh_grid(bw);
    let n = 2 * bw;
    let mut out = SphericalSignal::zeros(bw, channels);
    for (j, &t) in g.theta.iter().enumerate() {
        for (k, &p) in g.phi.iter().enumerate() {
            let y = real_spherical_harmonics(l_max as i64, T::lit(t), T::lit(p))?;
            for c in 0..channels {
                let mut v = T::zero();
                for l in sig.degrees() {
                    v = v + x.channel(l, c).iter().zip(y.degree(l)).map(|(a, b)| *a * *b).sum();
                }
                out.values[(c * n + j) * n + k] = v;
            }
        }
    }
    Ok(out)
}

/// Binary grid file (little-endian): magic `HOLOSPHG`, `u32` bw, `u32`
/// channels, `u32` signal count, then `f64` values per signal in grid layout.
pub fn write_signals<W: Write>(mut w: W, signals: &[SphericalSignal<f64>]) -> Result<()> {
    let (bw, ch) = signals.first().map_or((0, 0), |s| (s.bw, s.channels));
    if signals.iter().any(|s| s.bw != bw || s.channels != ch) {
        return Err(Error::Shape("signals in one file must share bandwidth and channels".into()));
    }
    w.write_all(MAGIC)?;
    for v in [bw as u32, ch as u32, signals.len() as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    for s in signals {
        for v in &s.values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_signals<R: Read>(mut r: R) -> Result<Vec<SphericalSignal<f64>>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a spherical grid file".into()));
    }
    let mut hdr = [0u32; 3];
    for h in hdr.iter_mut() {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        *h = u32::from_le_bytes(b);
    }
    let [bw, ch, count] = hdr.map(|v| v as usize);
    let per = ch * 4 * bw * bw;
    let mut out = Vec::with_capacity(count);
    let mut b = [0u8; 8];
    for _ in 0..count {
        let mut vals = Vec::with_capacity(per);
        for _ in 0..per {
            r.read_exact(&mut b)?;
            let v = f64::from_le_bytes(b);
            if !v.is_finite() {
                return Err(Error::Format("non-finite grid value".into()));
            }
            vals.push(v);
        }
        out.push(SphericalSignal::new(bw, ch, vals)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{sh_index, Rotation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn constant_signal() {
        let s = SphericalSignal::from_fn(6, 1, |_, _, _| 2.5f64);
        let f = sft_grid(&s, 5).unwrap();
        assert!((f.data()[0] - 2.5 * 2.0 * PI.sqrt()).abs() < 1e-9);
        assert!(f.data()[1..].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn single_harmonic_is_one_hot() {
        let s = SphericalSignal::from_fn(5, 1, |_, t: f64, p: f64| real_spherical_harmonics(2, t, p).unwrap().get(2, 1));
        let f = sft_grid(&s, 4).unwrap();
        for (i, v) in f.data().iter().enumerate() {
            let e = if i == sh_index(2, 1) { 1.0f64 } else { 0.0 };
            assert!((v - e).abs() < 1e-9);
        }
    }

    #[test]
    fn counts_and_aliasing() {
        let s = SphericalSignal::<f64>::zeros(11, 1);
        assert_eq!(sft_grid(&s, 10).unwrap().data().len(), 121);
        assert!(matches!(sft_grid(&s, 11), Err(Error::Aliasing { .. })));
        let x = SteerableTensor::<f64>::zeros(TensorSignature::uniform(4, 1).unwrap());
        assert!(matches!(inverse_sft(&x, 4), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn inverse_cases_and_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sig = TensorSignature::uniform(5, 2).unwrap();
        let x = SteerableTensor::<f64>::random_normal(sig.clone(), &mut rng);
        let s = inverse_sft(&x, 8).unwrap();
        let back = sft_grid(&s, 5).unwrap();
        assert!(back.max_abs_diff(&x).unwrap() < 1e-10);
        let s2 = inverse_sft(&back, 8).unwrap();
        assert!(s2.max_abs_diff(&s) < 1e-8);
        let z = inverse_sft(&SteerableTensor::<f64>::zeros(sig), 8).unwrap();
        assert!(z.values().iter().all(|v| *v == 0.0));
        let one = SteerableTensor::from_vec(TensorSignature::uniform(0, 1).unwrap(), vec![3.0]).unwrap();
        let g = inverse_sft(&one, 3).unwrap();
        assert!(g.values().iter().all(|v| (v - 3.0 / (2.0 * PI.sqrt())).abs() < 1e-14));
    }

    #[test]
    fn sft_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sig = TensorSignature::uniform(4, 1).unwrap();
        for _ in 0..10 {
            let x = SteerableTensor::<f64>::random_normal(sig.clone(), &mut rng);
            let r = Rotation::random(&mut rng);
            let rt = r.transpose();
            // f(R^-1 u) sampled on the grid
            let rotated = SphericalSignal::from_fn(8, 1, |_, t, p| {
                let u = crate::fourier::spherical_to_cartesian(1.0, t, p);
                let (_, t2, p2) = crate::fourier::cartesian_to_spherical(rt.apply(u));
                let y = real_spherical_harmonics(4, t2, p2).unwrap();
                x.data().iter().zip(&y.values).map(|(a, b)| a * b).sum()
            });
            let a = sft_grid(&rotated, 4).unwrap();
            assert!(a.max_abs_diff(&x.rotate(&r)).unwrap() < 1e-9);
        }
    }

    #[test]
    fn binary_round_trip() {
        let a = SphericalSignal::from_fn(3, 2, |c, t: f64, p: f64| c as f64 + t * p);
        let b = SphericalSignal::from_fn(3, 2, |_, t: f64, _| t.cos());
        let mut buf = Vec::new();
        write_signals(&mut buf, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(read_signals(buf.as_slice()).unwrap(), vec![a, b]);
    }
}
