use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::fourier::PointCloud;
use crate::so3::Rotation;

/// Class names of the synthetic shape corpus, indexed by class id.
pub const SYNTHETIC_CLASSES: [&str; 5] = ["helix", "ring", "two_shell", "cross", "tetra_cluster"];

/// One labelled synthetic cloud.
#[derive(Clone, Debug)]
pub struct SyntheticSample {
    pub id: String,
    pub class: usize,
    pub cloud: PointCloud<f64>,
}

fn shape_point<R: Rng>(class: usize, i: usize, n: usize, rng: &mut R) -> ([f64; 3], usize) {
    let t = i as f64 / n as f64;
    match class {
        0 => {
            let a = 4.0 * PI * t;
            ([0.5 * a.cos(), 0.5 * a.sin(), 1.6 * t - 0.8], i % 2)
        }
        1 => {
            let a = 2.0 * PI * t;
            ([a.cos(), a.sin(), 0.0], 0)
        }
        2 => {
            let u: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let nu = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt().max(1e-9);
            let (c, label) = if i % 2 == 0 { (0.5, 0) } else { (-0.5, 1) };
            ([0.35 * u[0] / nu, 0.35 * u[1] / nu, c + 0.35 * u[2] / nu], label)
        }
        3 => {
            let axis = i % 3;
            let s = 2.0 * rng.random::<f64>() - 1.0;
            let mut v = [0.0; 3];
            v[axis] = 0.9 * s;
            (v, usize::from(axis != 0))
        }
        _ => {
            let verts = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
            let k = i % 5;
            if k == 4 {
                ([0.0; 3], 1)
            } else {
                let s = 0.55;
                ([s * verts[k][0], s * verts[k][1], s * verts[k][2]], 0)
            }
        }
    }
}

/// `n` clouds cycling through the five classes, each with 20 to 40 points
/// of labels `A`/`B`, Gaussian jitter of `0.05 r_max` and a uniformly random
/// orientation. All points lie strictly inside the ball of radius `r_max`.
pub fn synthetic_clouds(n: usize, seed: u64, r_max: f64) -> Result<Vec<SyntheticSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 0.7 * r_max;
    let jitter = 0.05 * r_max;
    let labels = vec!["A".to_string(), "B".to_string()];
    (0..n)
        .map(|s| {
            let class = s % SYNTHETIC_CLASSES.len();
            let rot = Rotation::random(&mut rng);
            let count = rng.random_range(20..=40);
            let mut cloud = PointCloud::new(labels.clone());
            for i in 0..count {
                let (p, label) = shape_point(class, i, count, &mut rng);
                let mut v = [0.0; 3];
                for k in 0..3 {
                    v[k] = scale * p[k] + jitter * rng.sample::<f64, _>(StandardNormal);
                }
                let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                let cap = 0.95 * r_max;
                if r > cap {
                    v.iter_mut().for_each(|c| *c *= cap / r);
                }
                cloud.push_cartesian(rot.apply(v), label, 1.0)?;
            }
            Ok(SyntheticSample { id: format!("{}_{s:04}", SYNTHETIC_CLASSES[class]), class, cloud })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_inside_ball() {
        let a = synthetic_clouds(20, 3, 10.0).unwrap();
        let b = synthetic_clouds(20, 3, 10.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.cloud.cartesian(), y.cloud.cartesian());
            assert!((20..=40).contains(&x.cloud.len()));
            assert!(x.cloud.points.iter().all(|p| p.r < 10.0));
        }
        assert_eq!(a[7].class, 2);
    }
}
