use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Driscoll-Healy equiangular grid of bandwidth `bw`: `2bw x 2bw` samples
/// `theta_j = pi (2j+1) / (4 bw)`, `phi_k = pi k / bw`, with weights that
/// integrate band-limited functions of degree `< 2bw` exactly.
#[derive(Clone, Debug)]
pub struct DhGrid {
    pub bw: usize,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// Full area weight of sample `(j, k)`, independent of `k`.
    pub weight: Vec<f64>,
}

pub fn dh_grid(bw: usize) -> DhGrid {
    let n = 2 * bw;
    let theta: Vec<f64> = (0..n).map(|j| PI * (2 * j + 1) as f64 / (4 * bw) as f64).collect();
    let phi: Vec<f64> = (0..n).map(|k| PI * k as f64 / bw as f64).collect();
    let weight = theta
        .iter()
        .map(|&t| {
            let s: f64 = (0..bw).map(|k| ((2 * k + 1) as f64 * t).sin() / (2 * k + 1) as f64).sum();
            (2.0 / bw as f64) * t.sin() * s * (PI / bw as f64)
        })
        .collect();
    DhGrid { bw, theta, phi, weight }
}
