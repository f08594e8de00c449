use crate::error::{Error, Result};
use crate::Real;

/// Number of radial indices `n <= n_max` with `n >= l` and `n - l` even.
pub fn radial_count(l: usize, n_max: usize) -> usize {
    if l > n_max {
        0
    } else {
        (n_max - l) / 2 + 1
    }
}

/// 3D radial Zernike function `R^n_l(r)` on `[0, 1]`.
pub fn zernike_radial<T: Real>(n: usize, l: usize, r: T) -> Result<T> {
    if !(r >= T::zero() && r <= T::one()) {
        return Err(Error::Domain(format!("Zernike radius {r} outside [0, 1]")));
    }
    if n < l || (n - l) % 2 == 1 {
        return Ok(T::zero());
    }
    let row = radial_row(n, l, r);
    Ok(row[(n - l) / 2])
}

/// `R^{l+2k}_l(r)` for `k = 0..`, up to `n_max`.
///
/// Uses `R = sqrt(2n+3) r^l P_k^{(0, l+1/2)}(2r^2 - 1)` and the Jacobi
/// three-term recurrence.
fn radial_row<T: Real>(n_max: usize, l: usize, r: T) -> Vec<T> {
    let k_max = (n_max - l) / 2;
    let x = T::lit(2.0) * r * r - T::one();
    let b = T::from_usize_lossy(l) + T::lit(0.5);
    let mut p = Vec::with_capacity(k_max + 1);
    p.push(T::one());
    if k_max >= 1 {
        // a = 0: P_1 = 1 + (b + 2)(x - 1)/2
        p.push(T::one() + (b + T::lit(2.0)) * (x - T::one()) / T::lit(2.0));
    }
    for k in 2..=k_max {
        let kf = T::from_usize_lossy(k);
        let two = T::lit(2.0);
        let s = two * kf + b;
        let c0 = two * kf * (kf + b) * (s - two);
        let c1 = (s - T::one()) * (s * (s - two) * x - b * b);
        let c2 = two * (kf - T::one()) * (kf + b - T::one()) * s;
        let next = (c1 * p[k - 1] - c2 * p[k - 2]) / c0;
        p.push(next);
    }
    let rl = r.powi(l as i32);
    p.iter()
        .enumerate()
        .map(|(k, v)| (T::from_usize_lossy(2 * (l + 2 * k) + 3)).sqrt() * rl * *v)
        .collect()
}

/// Table `t[l][i] = R^{l+2i}_l(r)` for every `l <= l_max` and `l + 2i <= n_max`.
pub fn zernike_radial_table<T: Real>(n_max: usize, l_max: usize, r: T) -> Result<Vec<Vec<T>>> {
    if !(r >= T::zero() && r <= T::one()) {
        return Err(Error::Domain(format!("Zernike radius {r} outside [0, 1]")));
    }
    Ok((0..=l_max).map(|l| if l > n_max { Vec::new() } else { radial_row(n_max, l, r) }).collect())
}
