use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::Network;
use crate::so3::Rotation;
use crate::steerable::SteerableTensor;

/// Maximum residuals of the latent-structure guarantees over random trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub trials: usize,
    pub tolerance: f64,
    /// `max |enc(Rx).inv - enc(x).inv|`
    pub invariant_drift: f64,
    /// `max |enc(Rx).frame - R enc(x).frame|`
    pub frame_residual: f64,
    /// `max |dec(z, R F) - R dec(z, F)|`
    pub decode_residual: f64,
    pub passed: bool,
}

/// Checks embedding invariance, frame equivariance and decoder
/// equivariance on `n_trials` random inputs and rotations.
pub fn equivariance_audit(net: &Network, n_trials: usize, tolerance: f64, seed: u64) -> Result<AuditReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sig = net.config.input_signature.clone();
    let mut xs = Vec::with_capacity(2 * n_trials);
    let mut rots = Vec::with_capacity(n_trials);
    for _ in 0..n_trials {
        let x = SteerableTensor::random_normal(sig.clone(), &mut rng);
        let r = Rotation::random(&mut rng);
        xs.push(x.rotate(&r));
        xs.push(x);
        rots.push(r);
    }
    let codes = net.encode_batch(&xs)?;
    let (mut inv, mut frame) = (0.0f64, 0.0f64);
    let mut dec_in = Vec::with_capacity(2 * n_trials);
    for (t, r) in rots.iter().enumerate() {
        let (rot, base) = (&codes[2 * t], &codes[2 * t + 1]);
        for (a, b) in rot.mean.iter().zip(&base.mean) {
            inv = inv.max((a - b).abs());
        }
        if let (Some(a), Some(b)) = (&rot.logvar, &base.logvar) {
            for (u, v) in a.iter().zip(b) {
                inv = inv.max((u - v).abs());
            }
        }
        frame = frame.max(rot.frame.max_abs_diff(&base.frame.rotated(r)));
        dec_in.push((base.mean.clone(), base.frame));
        dec_in.push((base.mean.clone(), base.frame.rotated(r)));
    }
    let dec = net.decode_batch(&dec_in)?;
    let mut dres = 0.0f64;
    for (t, r) in rots.iter().enumerate() {
        dres = dres.max(dec[2 * t].rotate(r).max_abs_diff(&dec[2 * t + 1])?);
    }
    let passed = inv <= tolerance && frame <= tolerance && dres <= tolerance && inv.is_finite() && frame.is_finite() && dres.is_finite();
    Ok(AuditReport { trials: n_trials, tolerance, invariant_drift: inv, frame_residual: frame, decode_residual: dres, passed })
}
