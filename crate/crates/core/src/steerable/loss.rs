use super::{generalized_dot, SteerableTensor};
use crate::error::{Error, Result};
use crate::Real;

/// Mean squared coefficient difference.
pub fn mse<T: Real>(x: &SteerableTensor<T>, y: &SteerableTensor<T>) -> Result<T> {
    let d = x.sub(y)?;
    let n = d.data().len();
    if n == 0 {
        return Ok(T::zero());
    }
    let s: T = d.data().iter().map(|v| *v * *v).sum();
    Ok(s / T::from_usize_lossy(n))
}

/// `1 - <x, y> / sqrt(<x, x> <y, y>)` under [`generalized_dot`].
pub fn cosine_loss<T: Real>(x: &SteerableTensor<T>, y: &SteerableTensor<T>) -> Result<T> {
    let xy = generalized_dot(x, y)?;
    let xx = generalized_dot(x, x)?;
    let yy = generalized_dot(y, y)?;
    if xx <= T::zero() || yy <= T::zero() {
        return Err(Error::UndefinedCosine);
    }
    Ok(T::one() - xy / (xx * yy).sqrt())
}

/// Per-degree sum of squared differences and coefficient count, for every
/// degree of the shared signature.
pub fn per_degree_sq_error<T: Real>(x: &SteerableTensor<T>, y: &SteerableTensor<T>) -> Result<Vec<(usize, T, usize)>> {
    let d = x.sub(y)?;
    Ok(d.signature()
        .parts()
        .iter()
        .map(|&(l, c)| (l, d.block(l).iter().map(|v| *v * *v).sum(), c * (2 * l + 1)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::Rotation;
    use crate::steerable::TensorSignature;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mse_cases() {
        let s = TensorSignature::new(vec![(0, 1)]).unwrap();
        let a = SteerableTensor::from_vec(s.clone(), vec![3.0]).unwrap();
        let b = SteerableTensor::from_vec(s, vec![1.0]).unwrap();
        assert_eq!(mse(&a, &b).unwrap(), 4.0);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let c = SteerableTensor::<f64>::zeros(TensorSignature::new(vec![(0, 2)]).unwrap());
        assert!(matches!(mse(&a, &c), Err(Error::Shape(_))));
    }

    #[test]
    fn cosine_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = TensorSignature::uniform(3, 2).unwrap();
        let x = SteerableTensor::<f64>::random_normal(s.clone(), &mut rng);
        assert!(cosine_loss(&x, &x).unwrap().abs() < 1e-15);
        assert!(cosine_loss(&x, &x.scale(2.0)).unwrap().abs() < 1e-15);
        assert!((cosine_loss(&x, &x.scale(-1.0)).unwrap() - 2.0).abs() < 1e-15);
        let z = SteerableTensor::zeros(s);
        assert!(matches!(cosine_loss(&x, &z), Err(Error::UndefinedCosine)));
    }

    #[test]
    fn pairwise_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = TensorSignature::new(vec![(0, 3), (1, 2), (2, 2), (4, 1)]).unwrap();
        for _ in 0..200 {
            let x = SteerableTensor::<f64>::random_normal(s.clone(), &mut rng);
            let y = SteerableTensor::<f64>::random_normal(s.clone(), &mut rng);
            let r = Rotation::random(&mut rng);
            let (xr, yr) = (x.rotate(&r), y.rotate(&r));
            assert!((mse(&x, &y).unwrap() - mse(&xr, &yr).unwrap()).abs() < 1e-9);
            assert!((cosine_loss(&x, &y).unwrap() - cosine_loss(&xr, &yr).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn per_degree_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = TensorSignature::uniform(3, 2).unwrap();
        let x = SteerableTensor::<f64>::random_normal(s.clone(), &mut rng);
        let y = SteerableTensor::<f64>::random_normal(s, &mut rng);
        let parts = per_degree_sq_error(&x, &y).unwrap();
        let total: f64 = parts.iter().map(|p| p.1).sum();
        let n: usize = parts.iter().map(|p| p.2).sum();
        assert!((total / n as f64 - mse(&x, &y).unwrap()).abs() < 1e-14);
        assert!(per_degree_sq_error(&x, &x).unwrap().iter().all(|p| p.1 == 0.0));
    }
}
