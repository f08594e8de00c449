use serde::{Deserialize, Serialize};

use super::quadrature::gauss_legendre;
use super::zernike::{radial_count, zernike_radial_table};
use super::PointCloud;
use crate::error::{Error, Result};
use crate::so3::real_spherical_harmonics;
use crate::steerable::{SteerableTensor, TensorSignature};
use crate::Real;

/// Truncation of the Zernike transform: maximum degree `l_max` (L), maximum
/// radial frequency `n_max` (N) and the ball radius used to rescale inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZftConfig {
    pub l_max: usize,
    pub n_max: usize,
    pub r_max: f64,
}

impl ZftConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_max > 0.0) || !self.r_max.is_finite() {
            return Err(Error::Config(format!("r_max must be positive, got {}", self.r_max)));
        }
        if self.l_max > self.n_max {
            return Err(Error::Config(format!(
                "degrees above n_max = {} carry no radial functions (l_max = {})",
                self.n_max, self.l_max
            )));
        }
        Ok(())
    }
}

/// Per degree `l <= L`: `labels * #{n <= N : n >= l, n - l even}` channels,
/// ordered label-major then by ascending `n`.
pub fn zft_signature(cfg: &ZftConfig, n_labels: usize) -> Result<TensorSignature> {
    cfg.validate()?;
    if n_labels == 0 {
        return Err(Error::Config("at least one channel label is required".into()));
    }
    TensorSignature::new((0..=cfg.l_max).map(|l| (l, n_labels * radial_count(l, cfg.n_max))).collect())
}

/// Closed-form Zernike transform of a weighted point cloud:
/// `Z^n_lm = sum_i w_i R^n_l(r_i / r_max) Y_lm(theta_i, phi_i)`.
pub fn zft_point_cloud<T: Real>(cloud: &PointCloud<T>, cfg: &ZftConfig) -> Result<SteerableTensor<T>> {
    let sig = zft_signature(cfg, cloud.labels.len())?;
    let mut out = SteerableTensor::zeros(sig);
    let r_max = T::lit(cfg.r_max);
    for (idx, p) in cloud.points.iter().enumerate() {
        if p.r > r_max {
            return Err(Error::OutOfBall { index: idx, r: p.r.to_f64_lossy(), r_max: cfg.r_max });
        }
        let radial = zernike_radial_table(cfg.n_max, cfg.l_max, p.r / r_max)?;
        let y = real_spherical_harmonics(cfg.l_max as i64, p.theta, p.phi)?;
        for l in 0..=cfg.l_max {
            let count = radial_count(l, cfg.n_max);
            let yl = y.degree(l);
            for (i, rv) in radial[l].iter().enumerate() {
                let ch = out.channel_mut(l, p.channel * count + i);
                let s = p.weight * *rv;
                for (c, yv) in ch.iter_mut().zip(yl) {
                    *c = *c + s * *yv;
                }
            }
        }
    }
    Ok(out)
}

fn labels_of(x: &TensorSignature, cfg: &ZftConfig) -> Result<usize> {
    let per = radial_count(0, cfg.n_max);
    let n_labels = x.channels(0) / per.max(1);
    if n_labels == 0 || zft_signature(cfg, n_labels)? != *x {
        return Err(Error::Shape(format!("tensor signature {x} does not match the transform configuration")));
    }
    Ok(n_labels)
}

/// Truncated reconstruction `sum Z^n_lm R^n_l(r / r_max) Y_lm` at each query
/// `(r, theta, phi)`; one value per channel label.
pub fn inverse_zft<T: Real>(x: &SteerableTensor<T>, queries: &[(T, T, T)], cfg: &ZftConfig) -> Result<Vec<Vec<T>>> {
    let n_labels = labels_of(x.signature(), cfg)?;
    let r_max = T::lit(cfg.r_max);
    let mut out = Vec::with_capacity(queries.len());
    for (idx, &(r, theta, phi)) in queries.iter().enumerate() {
        if r > r_max {
            return Err(Error::OutOfBall { index: idx, r: r.to_f64_lossy(), r_max: cfg.r_max });
        }
        let radial = zernike_radial_table(cfg.n_max, cfg.l_max, r / r_max)?;
        let y = real_spherical_harmonics(cfg.l_max as i64, theta, phi)?;
        let mut dens = vec![T::zero(); n_labels];
        for l in 0..=cfg.l_max {
            let count = radial_count(l, cfg.n_max);
            let yl = y.degree(l);
            for (a, d) in dens.iter_mut().enumerate() {
                for (i, rv) in radial[l].iter().enumerate() {
                    let ch = x.channel(l, a * count + i);
                    let s: T = ch.iter().zip(yl).map(|(c, y)| *c * *y).sum();
                    *d = *d + s * *rv;
                }
            }
        }
        out.push(dens);
    }
    Ok(out)
}

/// Quadrature Zernike transform of a density given in physical coordinates,
/// `density(label, r, theta, phi)`, integrated over the unit ball after
/// rescaling by `r_max`.
///
/// Uses Gauss-Legendre in `r` (`N + 2 + extra` nodes) and `cos(theta)`
/// (`L + 1 + extra` nodes) with `2L + 1 + extra` uniform azimuths, which is
/// exact for densities band-limited to the configured `L`, `N`.
pub fn zft_density<F>(density: F, n_labels: usize, cfg: &ZftConfig, extra: usize) -> Result<SteerableTensor<f64>>
where
    F: Fn(usize, f64, f64, f64) -> f64,
{
    let sig = zft_signature(cfg, n_labels)?;
    let mut out = SteerableTensor::zeros(sig);
    let (rx, rw) = gauss_legendre(cfg.n_max + 2 + extra);
    let (tx, tw) = gauss_legendre(cfg.l_max + 1 + extra);
    let n_phi = 2 * cfg.l_max + 1 + extra;
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    for (ri, &xr) in rx.iter().enumerate() {
        let s = 0.5 * (xr + 1.0);
        let wr = 0.5 * rw[ri] * s * s;
        let radial = zernike_radial_table(cfg.n_max, cfg.l_max, s)?;
        for (ti, &ct) in tx.iter().enumerate() {
            let theta = ct.acos();
            for k in 0..n_phi {
                let phi = k as f64 * dphi;
                let w = wr * tw[ti] * dphi;
                let y = real_spherical_harmonics(cfg.l_max as i64, theta, phi)?;
                for a in 0..n_labels {
                    let f = density(a, s * cfg.r_max, theta, phi) * w;
                    if f == 0.0 {
                        continue;
                    }
                    for l in 0..=cfg.l_max {
                        let count = radial_count(l, cfg.n_max);
                        let yl = y.degree(l);
                        for (i, rv) in radial[l].iter().enumerate() {
                            let ch = out.channel_mut(l, a * count + i);
                            for (c, yv) in ch.iter_mut().zip(yl) {
                                *c += f * rv * yv;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
