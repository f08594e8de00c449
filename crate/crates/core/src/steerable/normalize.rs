use serde::{Deserialize, Serialize};

use super::SteerableTensor;
use crate::error::{Error, Result};
use crate::Real;

/// Global scale making the mean `sqrt(N_tot)` of the training set equal to one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetNormalizer {
    pub scale: f64,
}

impl DatasetNormalizer {
    pub fn fit<T: Real>(train: &[SteerableTensor<T>]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::DegenerateScale("empty training set".into()));
        }
        let mean = train.iter().map(|t| t.total_norm().to_f64_lossy().sqrt()).sum::<f64>() / train.len() as f64;
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::DegenerateScale(format!("mean sqrt total norm is {mean}")));
        }
        Ok(Self { scale: mean })
    }

    pub fn apply<T: Real>(&self, x: &SteerableTensor<T>) -> SteerableTensor<T> {
        x.scale(T::lit(1.0 / self.scale))
    }

    pub fn apply_all<T: Real>(&self, xs: &[SteerableTensor<T>]) -> Vec<SteerableTensor<T>> {
        xs.iter().map(|x| self.apply(x)).collect()
    }

    pub fn invert<T: Real>(&self, x: &SteerableTensor<T>) -> SteerableTensor<T> {
        x.scale(T::lit(self.scale))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::Rotation;
    use crate::steerable::TensorSignature;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_tensor() {
        let s = TensorSignature::new(vec![(0, 1)]).unwrap();
        let x = SteerableTensor::from_vec(s, vec![2.0]).unwrap();
        let n = DatasetNormalizer::fit(&[x.clone()]).unwrap();
        assert_eq!(n.scale, 2.0);
        assert!((n.apply(&x).total_norm() - 1.0f64).abs() < 1e-15);
    }

    #[test]
    fn zero_set_rejected() {
        let s = TensorSignature::uniform(2, 1).unwrap();
        let z = SteerableTensor::<f64>::zeros(s);
        assert!(matches!(DatasetNormalizer::fit(&[z]), Err(Error::DegenerateScale(_))));
        assert!(DatasetNormalizer::fit::<f64>(&[]).is_err());
    }

    #[test]
    fn post_condition_and_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = TensorSignature::uniform(3, 2).unwrap();
        let xs: Vec<_> = (0..50).map(|i| SteerableTensor::<f64>::random_normal(s.clone(), &mut rng).scale(1.0 + i as f64)).collect();
        let n = DatasetNormalizer::fit(&xs).unwrap();
        let mean = n.apply_all(&xs).iter().map(|t| t.total_norm().sqrt()).sum::<f64>() / 50.0;
        assert!((mean - 1.0).abs() < 1e-10);
        let r = Rotation::random(&mut rng);
        let a = n.apply(&xs[3].rotate(&r));
        let b = n.apply(&xs[3]).rotate(&r);
        assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
    }
}
