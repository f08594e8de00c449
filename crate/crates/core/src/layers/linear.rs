use crate::error::{Error, Result};
use crate::steerable::{SteerableTensor, TensorSignature};
use crate::Real;

/// Channel-mixing matrix for one degree, `rows = C_in`, `cols = C_out`,
/// row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeMatrix<T> {
    pub l: usize,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> DegreeMatrix<T> {
    pub fn identity(l: usize, n: usize) -> Self {
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = T::one();
        }
        Self { l, rows: n, cols: n, data }
    }
}

/// `h_out[l] = W_l^T h[l]` per degree; degrees without a matrix are dropped.
pub fn linear_forward<T: Real>(x: &SteerableTensor<T>, w: &[DegreeMatrix<T>]) -> Result<SteerableTensor<T>> {
    let sig = TensorSignature::new(w.iter().map(|m| (m.l, m.cols)).collect())?;
    let mut out = SteerableTensor::zeros(sig);
    for m in w {
        if x.signature().channels(m.l) != m.rows || m.data.len() != m.rows * m.cols {
            return Err(Error::Shape(format!(
                "degree {}: weight {}x{} against {} input channels",
                m.l,
                m.rows,
                m.cols,
                x.signature().channels(m.l)
            )));
        }
        for o in 0..m.cols {
            let mut acc = vec![T::zero(); 2 * m.l + 1];
            for i in 0..m.rows {
                let wio = m.data[i * m.cols + o];
                for (a, v) in acc.iter_mut().zip(x.channel(m.l, i)) {
                    *a = *a + wio * *v;
                }
            }
            out.channel_mut(m.l, o).copy_from_slice(&acc);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::Rotation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_doubling() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = TensorSignature::uniform(2, 3).unwrap();
        let x = SteerableTensor::<f64>::random_normal(s, &mut rng);
        let w: Vec<_> = (0..=2).map(|l| DegreeMatrix::identity(l, 3)).collect();
        assert_eq!(linear_forward(&x, &w).unwrap(), x);
        let s1 = TensorSignature::new(vec![(1, 1)]).unwrap();
        let v = SteerableTensor::from_vec(s1, vec![1.0, -2.0, 3.0]).unwrap();
        let w = [DegreeMatrix { l: 1, rows: 1, cols: 1, data: vec![2.0] }];
        assert_eq!(linear_forward(&v, &w).unwrap().data(), &[2.0, -4.0, 6.0]);
    }

    #[test]
    fn shape_errors() {
        let x = SteerableTensor::<f64>::zeros(TensorSignature::uniform(1, 2).unwrap());
        let w = [DegreeMatrix { l: 1, rows: 3, cols: 1, data: vec![0.0; 3] }];
        assert!(matches!(linear_forward(&x, &w), Err(Error::Shape(_))));
    }

    #[test]
    fn equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let s = TensorSignature::new(vec![(0, 3), (1, 2), (3, 4)]).unwrap();
            let x = SteerableTensor::<f64>::random_normal(s.clone(), &mut rng);
            let w: Vec<_> = s
                .parts()
                .iter()
                .map(|&(l, c)| DegreeMatrix { l, rows: c, cols: 5, data: (0..c * 5).map(|_| rng.random_range(-1.0..1.0)).collect() })
                .collect();
            let r = Rotation::random(&mut rng);
            let a = linear_forward(&x.rotate(&r), &w).unwrap();
            let b = linear_forward(&x, &w).unwrap().rotate(&r);
            assert!(a.max_abs_diff(&b).unwrap() < 1e-10);
        }
    }
}
