use num_complex::Complex;

use super::rotation::Rotation;
use crate::scalar::Real;

/// A real Wigner-D matrix of one degree, row-major `(2l+1) x (2l+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerD<T> {
    pub l: usize,
    pub data: Vec<T>,
}

impl<T: Real> WignerD<T> {
    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.l + 1
    }

    /// Entry `(m', m)` with both indices in `-l..=l`.
    #[inline]
    pub fn get(&self, mp: i64, m: i64) -> T {
        let l = self.l as i64;
        self.data[((mp + l) * (2 * l + 1) + m + l) as usize]
    }

    /// `D v` for a vector of length `2l+1`.
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|j| self.data[i * d + j] * v[j]).sum()).collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let d = self.dim();
        let mut data = vec![T::zero(); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                for j in 0..d {
                    data[i * d + j] = data[i * d + j] + a * other.data[k * d + j];
                }
            }
        }
        Self { l: self.l, data }
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim();
        let mut data = vec![T::zero(); d * d];
        for i in 0..d {
            for j in 0..d {
                data[j * d + i] = self.data[i * d + j];
            }
        }
        Self { l: self.l, data }
    }
}

fn factorials<T: Real>(n: usize) -> Vec<T> {
    let mut f = vec![T::one(); n + 1];
    for i in 1..=n {
        f[i] = f[i - 1] * T::from_usize_lossy(i);
    }
    f
}

/// Wigner small-d matrix `d^l_{m'm}(beta)` (complex basis, Condon-Shortley),
/// row-major in `(m', m)`.
///
/// Uses the explicit factorial sum; factorials up to `(2l)!` must be
/// representable in `T` (fine for `l < 85` in `f64`, `l < 17` in `f32`).
pub fn wigner_small_d<T: Real>(l: usize, beta: T) -> Vec<T> {
    let dim = 2 * l + 1;
    let f = factorials::<T>(2 * l + 1);
    let half = beta / T::lit(2.0);
    let (s, c) = half.sin_cos();
    let li = l as i64;
    let mut out = vec![T::zero(); dim * dim];
    for mp in -li..=li {
        for m in -li..=li {
            let pre = (f[(li + mp) as usize] * f[(li - mp) as usize] * f[(li + m) as usize] * f[(li - m) as usize]).sqrt();
            let k_min = 0.max(m - mp);
            let k_max = (li + m).min(li - mp);
            let mut acc = T::zero();
            for k in k_min..=k_max {
                let denom = f[(li + m - k) as usize] * f[k as usize] * f[(mp - m + k) as usize] * f[(li - mp - k) as usize];
                let sign = if (mp - m + k) % 2 == 0 { T::one() } else { -T::one() };
                let pc = (2 * li + m - mp - 2 * k) as i32;
                let ps = (mp - m + 2 * k) as i32;
                acc = acc + sign * c.powi(pc) * s.powi(ps) / denom;
            }
            out[((mp + li) as usize) * dim + (m + li) as usize] = pre * acc;
        }
    }
    out
}

/// Row `a` of the complex-to-real map `U`: the nonzero `(m, U[a, m])` entries.
fn u_row<T: Real>(a: i64) -> [(i64, Complex<T>); 2] {
    let r = T::FRAC_1_SQRT_2();
    let z = Complex::new(T::zero(), T::zero());
    let parity = if a.rem_euclid(2) == 0 { T::one() } else { -T::one() };
    if a > 0 {
        [(-a, Complex::new(r, T::zero())), (a, Complex::new(parity * r, T::zero()))]
    } else if a < 0 {
        [(a, Complex::new(T::zero(), r)), (-a, Complex::new(T::zero(), -parity * r))]
    } else {
        [(0, Complex::new(T::one(), T::zero())), (0, z)]
    }
}

fn wigner_d_real_from_euler<T: Real>(l: usize, alpha: T, beta: T, gamma: T) -> WignerD<T> {
    let dim = 2 * l + 1;
    let li = l as i64;
    let small = wigner_small_d(l, beta);
    // conj(D)_{m'm} = e^{i m' alpha} d_{m'm} e^{i m gamma}
    let dc = |mp: i64, m: i64| -> Complex<T> {
        let d = small[((mp + li) as usize) * dim + (m + li) as usize];
        let ph = T::from_i64(mp).unwrap() * alpha + T::from_i64(m).unwrap() * gamma;
        Complex::new(d * ph.cos(), d * ph.sin())
    };
    let mut data = vec![T::zero(); dim * dim];
    for a in -li..=li {
        let ua = u_row::<T>(a);
        for b in -li..=li {
            let ub = u_row::<T>(b);
            // (U conj(D) U^dagger)_{ab} = sum U[a,m'] conj(D)_{m'm} conj(U[b,m])
            let mut acc = Complex::new(T::zero(), T::zero());
            for (k1, &(mp, u1)) in ua.iter().enumerate() {
                if a == 0 && k1 == 1 {
                    continue;
                }
                for (k2, &(m, u2)) in ub.iter().enumerate() {
                    if b == 0 && k2 == 1 {
                        continue;
                    }
                    acc = acc + u1 * dc(mp, m) * u2.conj();
                }
            }
            data[((a + li) as usize) * dim + (b + li) as usize] = acc.re;
        }
    }
    WignerD { l, data }
}

/// Real Wigner-D matrix of degree `l`, `S_l(R x) = D_l(R) S_l(x)`.
pub fn wigner_d_real<T: Real>(l: usize, r: &Rotation<T>) -> WignerD<T> {
    let (a, b, g) = r.to_euler_zyz();
    wigner_d_real_from_euler(l, a, b, g)
}

/// Real Wigner-D matrices for every degree `0..=l_max`.
pub fn wigner_d_real_all<T: Real>(l_max: usize, r: &Rotation<T>) -> Vec<WignerD<T>> {
    let (a, b, g) = r.to_euler_zyz();
    (0..=l_max).map(|l| wigner_d_real_from_euler(l, a, b, g)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::harmonics::real_spherical_harmonics_dir;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
        loop {
            let v: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 0.1 && n < 1.0 {
                return [v[0] / n, v[1] / n, v[2] / n];
            }
        }
    }

    #[test]
    fn trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r: Rotation<f64> = Rotation::random(&mut rng);
        assert!((wigner_d_real(0, &r).data[0] - 1.0).abs() < 1e-15);
        for l in 0..6 {
            let d = wigner_d_real(l, &Rotation::<f64>::identity());
            for i in 0..d.dim() {
                for j in 0..d.dim() {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((d.data[i * d.dim() + j] - e).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn degree_one_is_conjugated_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r: Rotation<f64> = Rotation::random(&mut rng);
        let d = wigner_d_real(1, &r);
        let m = r.matrix();
        // basis order (y, z, x)
        let perm = [1usize, 2, 0];
        for i in 0..3 {
            for j in 0..3 {
                assert!((d.data[i * 3 + j] - m[perm[i]][perm[j]]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rotated_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let r: Rotation<f64> = Rotation::random(&mut rng);
            let x = random_unit(&mut rng);
            let ds = wigner_d_real_all(6, &r);
            let y = real_spherical_harmonics_dir(6, x);
            let yr = real_spherical_harmonics_dir(6, r.apply(x));
            for (l, d) in ds.iter().enumerate() {
                let lhs = d.apply(y.degree(l));
                for (a, b) in lhs.iter().zip(yr.degree(l)) {
                    assert!((a - b).abs() < 1e-12, "l={l}: {a} vs {b}");
                }
            }
        }
    }
}
