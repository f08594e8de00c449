use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::steerable::{SteerableTensor, TensorSignature};
use crate::Real;

/// Running-norm momentum `xi` of batch norm.
pub const BN_MOMENTUM: f64 = 0.1;
/// Added under every normalising square root.
pub const NORM_EPSILON: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

/// Affine weights and running norms of one batch-norm layer, per degree
/// (in signature order) and channel.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormState<T> {
    pub signature: TensorSignature,
    pub weight: Vec<Vec<T>>,
    pub running: Vec<Vec<T>>,
}

impl<T: Real> BatchNormState<T> {
    /// Unit weights and unit running norms.
    pub fn new(signature: TensorSignature) -> Self {
        let ones: Vec<Vec<T>> = signature.parts().iter().map(|&(_, c)| vec![T::one(); c]).collect();
        Self { signature, weight: ones.clone(), running: ones }
    }
}

/// `N_l^c = (1/B) sum_b (1/(2l+1)) sum_m h^2`, per degree and channel.
pub fn batch_norms<T: Real>(batch: &[SteerableTensor<T>], sig: &TensorSignature) -> Vec<Vec<T>> {
    let b = T::from_usize_lossy(batch.len());
    sig.parts()
        .iter()
        .map(|&(l, c)| {
            let d = T::from_usize_lossy(2 * l + 1);
            let mut acc = vec![T::zero(); c];
            for x in batch {
                for (a, n) in acc.iter_mut().zip(x.channel_sq_norms(l)) {
                    *a = *a + n;
                }
            }
            acc.into_iter().map(|v| v / (b * d)).collect()
        })
        .collect()
}

/// Batch norm. Training divides by the batch norm and updates
/// `running <- xi N + (1 - xi) running`; evaluation divides by the running
/// norm and leaves the state untouched.
pub fn batch_norm_forward<T: Real>(
    batch: &[SteerableTensor<T>],
    state: &mut BatchNormState<T>,
    mode: Mode,
    momentum: T,
) -> Result<Vec<SteerableTensor<T>>> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if let Some(x) = batch.iter().find(|x| x.signature() != &state.signature) {
        return Err(Error::Shape(format!("batch norm over {} got {}", state.signature, x.signature())));
    }
    let norms = match mode {
        Mode::Train => {
            let n = batch_norms(batch, &state.signature);
            for (run, cur) in state.running.iter_mut().zip(&n) {
                for (r, v) in run.iter_mut().zip(cur) {
                    *r = momentum * *v + (T::one() - momentum) * *r;
                }
            }
            n
        }
        Mode::Eval => state.running.clone(),
    };
    let eps = T::lit(NORM_EPSILON);
    let out = batch
        .iter()
        .map(|x| {
            let mut y = x.clone();
            for (di, &(l, c)) in state.signature.parts().iter().enumerate() {
                for ch in 0..c {
                    let f = state.weight[di][ch] / (norms[di][ch] + eps).sqrt();
                    y.channel_mut(l, ch).iter_mut().for_each(|v| *v = *v * f);
                }
            }
            y
        })
        .collect();
    Ok(out)
}

/// Divides by `sqrt(N_tot)` and scales degree `l` by `w_l` (weights in
/// signature order).
pub fn signal_norm_forward<T: Real>(x: &SteerableTensor<T>, w: &[T]) -> Result<SteerableTensor<T>> {
    if w.len() != x.signature().parts().len() {
        return Err(Error::Shape(format!("{} signal-norm weights for {} degrees", w.len(), x.signature().parts().len())));
    }
    let n = x.total_norm();
    if n <= T::lit(NORM_EPSILON) {
        return Err(Error::DegenerateInput(format!("total norm {n} too small to normalise")));
    }
    let inv = T::one() / (n + T::lit(NORM_EPSILON)).sqrt();
    let mut y = x.clone();
    for (&(l, _), wl) in x.signature().parts().iter().zip(w) {
        y.block_mut(l).iter_mut().for_each(|v| *v = *v * inv * *wl);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::Rotation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_norm_batch_passes_through() {
        let s = TensorSignature::new(vec![(0, 1), (1, 1)]).unwrap();
        let x = SteerableTensor::from_vec(s.clone(), vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let mut st = BatchNormState::<f64>::new(s);
        let y = batch_norm_forward(&[x.clone(), x.clone()], &mut st, Mode::Train, BN_MOMENTUM).unwrap();
        assert!(y[0].max_abs_diff(&x).unwrap() < 1e-11);
    }

    #[test]
    fn running_norm_arithmetic() {
        let s = TensorSignature::new(vec![(0, 1)]).unwrap();
        let x = SteerableTensor::from_vec(s.clone(), vec![2f64.sqrt()]).unwrap();
        let mut st = BatchNormState::<f64>::new(s);
        batch_norm_forward(&[x], &mut st, Mode::Train, 0.1).unwrap();
        assert!((st.running[0][0] - 1.1).abs() < 1e-15);
    }

    #[test]
    fn eval_is_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = TensorSignature::uniform(2, 3).unwrap();
        let xs: Vec<_> = (0..4).map(|_| SteerableTensor::<f64>::random_normal(s.clone(), &mut rng)).collect();
        let mut st = BatchNormState::new(s);
        batch_norm_forward(&xs, &mut st, Mode::Train, 0.1).unwrap();
        let frozen = st.clone();
        let a = batch_norm_forward(&xs, &mut st, Mode::Eval, 0.1).unwrap();
        let b = batch_norm_forward(&xs, &mut st, Mode::Eval, 0.1).unwrap();
        assert_eq!(a, b);
        assert_eq!(st, frozen);
    }

    #[test]
    fn batch_norm_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = TensorSignature::uniform(3, 2).unwrap();
        for _ in 0..20 {
            let xs: Vec<_> = (0..5).map(|_| SteerableTensor::<f64>::random_normal(s.clone(), &mut rng)).collect();
            let r = Rotation::random(&mut rng);
            let rx: Vec<_> = xs.iter().map(|x| x.rotate(&r)).collect();
            let a = batch_norm_forward(&rx, &mut BatchNormState::new(s.clone()), Mode::Train, 0.1).unwrap();
            let b = batch_norm_forward(&xs, &mut BatchNormState::new(s.clone()), Mode::Train, 0.1).unwrap();
            for (u, v) in a.iter().zip(&b) {
                assert!(u.max_abs_diff(&v.rotate(&r)).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn signal_norm_post_condition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = TensorSignature::uniform(4, 3).unwrap();
        let w = vec![1.0; 5];
        for _ in 0..50 {
            let x = SteerableTensor::<f64>::random_normal(s.clone(), &mut rng);
            let y = signal_norm_forward(&x, &w).unwrap();
            assert!((y.total_norm() - 1.0).abs() < 1e-10);
            let r = Rotation::random(&mut rng);
            let a = signal_norm_forward(&x.rotate(&r), &w).unwrap();
            assert!(a.max_abs_diff(&y.rotate(&r)).unwrap() < 1e-10);
            let again = signal_norm_forward(&y, &w).unwrap();
            assert!(again.max_abs_diff(&y).unwrap() < 1e-10);
        }
        assert!(matches!(signal_norm_forward(&SteerableTensor::zeros(s), &w), Err(Error::DegenerateInput(_))));
    }
}
