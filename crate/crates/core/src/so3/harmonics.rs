use crate::error::{Error, Result};
use crate::scalar::Real;

/// Flat index of `(l, m)` in an `l`-major, `m = -l..=l` layout.
#[inline]
pub fn sh_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

#[inline]
pub fn sh_len(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 1)
}

/// Real spherical harmonics up to some degree, laid out by [`sh_index`].
#[derive(Clone, Debug, PartialEq)]
pub struct ShValues<T> {
    pub l_max: usize,
    pub values: Vec<T>,
}

impl<T: Real> ShValues<T> {
    pub fn get(&self, l: usize, m: i64) -> T {
        self.values[sh_index(l, m)]
    }

    /// The `2l+1` values of degree `l`.
    pub fn degree(&self, l: usize) -> &[T] {
        &self.values[l * l..(l + 1) * (l + 1)]
    }
}

/// Orthonormalised associated Legendre functions `Pbar_l^m(cos theta)`, `0 <= m <= l`,
/// including the Condon-Shortley phase, such that `Y_l^m = Pbar_l^m e^{i m phi}`.
///
/// Stored in a triangle, `l (l+1) / 2 + m`. Uses the increasing-degree
/// three-term recurrence, which stays stable well past `l = 20`.
pub fn assoc_legendre_normalized<T: Real>(l_max: usize, cos_t: T, sin_t: T) -> Vec<T> {
    let tri = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut p = vec![T::zero(); (l_max + 1) * (l_max + 2) / 2];
    p[0] = T::one() / (T::lit(4.0) * T::PI()).sqrt();
    for m in 1..=l_max {
        let mf = T::from_usize_lossy(m);
        let f = ((T::lit(2.0) * mf + T::one()) / (T::lit(2.0) * mf)).sqrt();
        p[tri(m, m)] = -f * sin_t * p[tri(m - 1, m - 1)];
    }
    for m in 0..l_max {
        let mf = T::from_usize_lossy(m);
        p[tri(m + 1, m)] = (T::lit(2.0) * mf + T::lit(3.0)).sqrt() * cos_t * p[tri(m, m)];
    }
    for m in 0..=l_max {
        let mf = T::from_usize_lossy(m);
        for l in (m + 2)..=l_max {
            let lf = T::from_usize_lossy(l);
            let a = ((T::lit(4.0) * lf * lf - T::one()) / (lf * lf - mf * mf)).sqrt();
            let lm1 = lf - T::one();
            let b = ((lm1 * lm1 - mf * mf) / (T::lit(4.0) * lm1 * lm1 - T::one())).sqrt();
            p[tri(l, m)] = a * (cos_t * p[tri(l - 1, m)] - b * p[tri(l - 2, m)]);
        }
    }
    p
}

fn real_sh_from_trig<T: Real>(l_max: usize, cos_t: T, sin_t: T, cos_p: T, sin_p: T) -> ShValues<T> {
    let p = assoc_legendre_normalized(l_max, cos_t, sin_t);
    let tri = |l: usize, m: usize| l * (l + 1) / 2 + m;
    // cos(m phi), sin(m phi) by angle addition
    let mut cm = vec![T::one(); l_max + 1];
    let mut sm = vec![T::zero(); l_max + 1];
    for m in 1..=l_max {
        cm[m] = cm[m - 1] * cos_p - sm[m - 1] * sin_p;
        sm[m] = sm[m - 1] * cos_p + cm[m - 1] * sin_p;
    }
    let sqrt2 = T::SQRT_2();
    let mut values = vec![T::zero(); sh_len(l_max)];
    for l in 0..=l_max {
        values[sh_index(l, 0)] = p[tri(l, 0)];
        for m in 1..=l {
            // (-1)^m cancels the Condon-Shortley phase
            let sign = if m % 2 == 0 { T::one() } else { -T::one() };
            let base = sqrt2 * sign * p[tri(l, m)];
            values[sh_index(l, m as i64)] = base * cm[m];
            values[sh_index(l, -(m as i64))] = base * sm[m];
        }
    }
    ShValues { l_max, values }
}

/// All real spherical harmonics `S_lm(theta, phi)` with `l <= l_max`.
pub fn real_spherical_harmonics<T: Real>(l_max: i64, theta: T, phi: T) -> Result<ShValues<T>> {
    if l_max < 0 {
        return Err(Error::InvalidArgument(format!("negative l_max {l_max}")));
    }
    let (sin_t, cos_t) = theta.sin_cos();
    let (sin_p, cos_p) = phi.sin_cos();
    Ok(real_sh_from_trig(l_max as usize, cos_t, sin_t, cos_p, sin_p))
}

/// Real spherical harmonics at the direction of a nonzero Cartesian vector.
pub fn real_spherical_harmonics_dir<T: Real>(l_max: usize, v: [T; 3]) -> ShValues<T> {
    let rho = (v[0] * v[0] + v[1] * v[1]).sqrt();
    let r = (rho * rho + v[2] * v[2]).sqrt();
    let (cos_t, sin_t) = if r > T::zero() { (v[2] / r, rho / r) } else { (T::one(), T::zero()) };
    let (cos_p, sin_p) = if rho > T::zero() { (v[0] / rho, v[1] / rho) } else { (T::one(), T::zero()) };
    real_sh_from_trig(l_max, cos_t, sin_t, cos_p, sin_p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn constant_mode() {
        for (t, p) in [(0.0, 0.0), (1.0, 2.0), (PI, -1.0)] {
            let y = real_spherical_harmonics(0, t, p).unwrap();
            assert_abs_diff_eq!(y.get(0, 0), 0.282_094_791_773_878_1, epsilon = 1e-15);
        }
    }

    #[test]
    fn pole_values_degree_one() {
        let y = real_spherical_harmonics(1, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(y.get(1, 0), (3.0 / (4.0 * PI)).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(y.get(1, 1), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y.get(1, -1), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y.get(1, 0), 0.488_602_5, epsilon = 1e-7);
    }

    #[test]
    fn degree_one_is_permuted_cartesian() {
        let c = (3.0 / (4.0 * PI)).sqrt();
        let v = [0.3, -0.5, 0.81];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] as f64).sqrt();
        let y = real_spherical_harmonics_dir(1, v);
        assert_abs_diff_eq!(y.get(1, -1), c * v[1] / n, epsilon = 1e-14);
        assert_abs_diff_eq!(y.get(1, 0), c * v[2] / n, epsilon = 1e-14);
        assert_abs_diff_eq!(y.get(1, 1), c * v[0] / n, epsilon = 1e-14);
    }

    #[test]
    fn angles_and_direction_agree() {
        let (t, p) = (1.1_f64, -2.3_f64);
        let a = real_spherical_harmonics(8, t, p).unwrap();
        let b = real_spherical_harmonics_dir(8, [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-13);
        }
    }

    #[test]
    fn negative_degree_rejected() {
        assert!(matches!(real_spherical_harmonics(-1, 0.1, 0.2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn single_precision_tracks_double() {
        let a = real_spherical_harmonics(6, 0.7_f64, 0.4).unwrap();
        let b = real_spherical_harmonics(6, 0.7_f32, 0.4).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - *y as f64).abs() < 1e-5);
        }
    }
}
