use crate::error::{Error, Result};

/// Adam with bias correction. Moment buffers are created on first use and
/// indexed like the parameter list passed to [`Adam::step`].
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl Default for Adam {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: Vec::new(), v: Vec::new() }
    }
}

impl Adam {
    pub fn new() -> Self {
        Self::default()
    }

    /// One update. `grads[i] = None` leaves parameter `i` (and its moments)
    /// untouched. Any non-finite gradient aborts before anything changes.
    pub fn step(&mut self, params: &mut [Vec<f64>], grads: &[Option<Vec<f64>>], lr: f64) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Shape(format!("{} parameters, {} gradients", params.len(), grads.len())));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if let Some(g) = g {
                if g.len() != p.len() {
                    return Err(Error::Shape(format!("parameter {i}: {} values, {} gradients", p.len(), g.len())));
                }
                if let Some(j) = g.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("gradient of parameter {i} entry {j} is {}", g[j])));
                }
            }
        }
        if self.m.len() != params.len() {
            self.m = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.v = params.iter().map(|p| vec![0.0; p.len()]).collect();
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            let Some(g) = g else { continue };
            for k in 0..p.len() {
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g[k];
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g[k] * g[k];
                let mh = m[k] / bc1;
                let vh = v[k] / bc2;
                p[k] -= lr * mh / (vh.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = vec![vec![1.0, -2.0]];
        let mut a = Adam::new();
        a.step(&mut p, &[Some(vec![0.0, 0.0])], 0.1).unwrap();
        assert_eq!(p, vec![vec![1.0, -2.0]]);
    }

    #[test]
    fn first_step_is_lr_times_sign() {
        let g = vec![0.3, -5.0, 1e-3];
        let mut p = vec![vec![0.0; 3]];
        let mut a = Adam::new();
        a.step(&mut p, &[Some(g.clone())], 0.01).unwrap();
        for (pv, gv) in p[0].iter().zip(&g) {
            // m_hat = g, v_hat = g^2
            let expect = -0.01 * gv / (gv.abs() + 1e-8);
            assert!((pv - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn non_finite_aborts_without_update() {
        let mut p = vec![vec![1.0]];
        let mut a = Adam::new();
        assert!(matches!(a.step(&mut p, &[Some(vec![f64::NAN])], 0.1), Err(Error::NonFinite(_))));
        assert_eq!(p[0][0], 1.0);
        assert_eq!(a.t, 0);
    }

    #[test]
    fn deterministic_trajectory() {
        let run = || {
            let mut p = vec![vec![1.0, 2.0]];
            let mut a = Adam::new();
            for i in 0..50 {
                let g = vec![p[0][0] * 2.0 + i as f64 * 0.01, p[0][1] - 1.0];
                a.step(&mut p, &[Some(g)], 0.05).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }
}
